// Copyright 2026 The feakit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fea/nn/tensor.hpp"

namespace fea::nn {

/// A learnable tensor with its gradient accumulator. `group` selects the
/// learning rate (e.g. "lca", "mpp", "lora", "lm").
template <typename T>
struct Parameter {
    std::string name;
    std::string group;
    Tensor<T> value;
    Tensor<T> grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, std::string g, Tensor<T> v, bool train = true)
        : name(std::move(n)), group(std::move(g)), value(std::move(v)), grad(value.shape()), trainable(train) {}

    void zero_grad() { grad.fill(T{0}); }
};

/// Named parameters in sorted order. Node-based storage keeps references
/// stable while graphs hold them.
template <typename T>
class ParameterStore {
public:
    Parameter<T>& add(const std::string& name, const std::string& group, Tensor<T> value, bool trainable = true) {
        require(!params_.contains(name), ErrorKind::Config, "duplicate parameter '" + name + "'");
        auto [it, ok] = params_.emplace(name, Parameter<T>(name, group, std::move(value), trainable));
        return it->second;
    }

    bool contains(const std::string& name) const { return params_.contains(name); }

    Parameter<T>& get(const std::string& name) {
        auto it = params_.find(name);
        require(it != params_.end(), ErrorKind::Config, "unknown parameter '" + name + "'");
        return it->second;
    }
    const Parameter<T>& get(const std::string& name) const {
        auto it = params_.find(name);
        require(it != params_.end(), ErrorKind::Config, "unknown parameter '" + name + "'");
        return it->second;
    }

    std::size_t size() const { return params_.size(); }

    std::vector<std::string> names(const std::string& prefix = "") const {
        std::vector<std::string> out;
        for (const auto& [name, p] : params_)
            if (name.rfind(prefix, 0) == 0) out.push_back(name);
        return out;
    }

    template <typename F>
    void for_each(F&& f) {
        for (auto& [name, p] : params_) f(p);
    }
    template <typename F>
    void for_each(F&& f) const {
        for (const auto& [name, p] : params_) f(p);
    }

    void zero_grads() {
        for (auto& [name, p] : params_) p.zero_grad();
    }

    /// Sets `trainable` on every parameter whose name starts with prefix.
    void set_trainable(const std::string& prefix, bool trainable) {
        for (auto& [name, p] : params_)
            if (name.rfind(prefix, 0) == 0) p.trainable = trainable;
    }

    void set_all_trainable(bool trainable) {
        for (auto& [name, p] : params_) p.trainable = trainable;
    }

    template <typename U>
    ParameterStore<U> cast() const {
        ParameterStore<U> out;
        for (const auto& [name, p] : params_) out.add(name, p.group, p.value.template cast<U>(), p.trainable);
        return out;
    }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& [name, p] : params_) n += p.value.size();
        return n;
    }

private:
    std::map<std::string, Parameter<T>> params_;
};

}  // namespace fea::nn
