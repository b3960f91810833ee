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

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "fea/nn/ops.hpp"
#include "fea/nn/parameter.hpp"

namespace fea::nn {

/// Handle to a node in a Graph.
struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

/// Single-use reverse-mode tape. Each op runs its forward kernel eagerly and
/// records the matching hand-written backward kernel. Parameters bound with
/// `param()` receive accumulated gradients in `Parameter::grad` when they are
/// trainable; frozen parameters are treated as constants.
template <typename T>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Var input(Tensor<T> value);
    Var param(Parameter<T>& p);

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
    /// Gradient of the last backward() target w.r.t. this node (zeros if unreached).
    const Tensor<T>& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_.at(v.id).needs_grad; }
    std::size_t size() const { return nodes_.size(); }

    Var matmul(Var a, Var b);
    /// a·bᵀ
    Var matmul_nt(Var a, Var b);
    Var add(Var a, Var b);
    /// Row-broadcast bias add; b has shape (cols).
    Var add_bias(Var x, Var b);
    Var linear(Var x, Var w, Var b) { return add_bias(matmul(x, w), b); }
    Var scale(Var x, T factor);
    /// factor·x where factor is a one-element node (e.g. a learnable γ).
    Var scale_by(Var x, Var factor);
    Var gelu(Var x);
    Var softmax_rows(Var x);
    Var attention(Var q, Var k, Var v, const ops::AttentionOptions& opts = {});
    Var conv2d(Var x, Var kernel, Var bias, const ops::ConvGeometry& geo);
    Var avgpool_global(Var x);
    Var rms_norm(Var x, Var gain, T eps);
    Var reshape(Var x, Shape shape);
    Var concat_rows(std::span<const Var> parts);
    Var slice_rows(Var x, std::size_t begin, std::size_t end);
    Var gather_rows(Var table, std::vector<std::size_t> rows);
    Var sum(Var x);
    Var masked_cross_entropy(Var logits, std::vector<std::size_t> targets, std::vector<std::uint8_t> mask);

    /// Seeds d(loss)/d(loss) = 1 and runs recorded backward functions in
    /// reverse order. `loss` must hold exactly one element.
    void backward(Var loss);

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        Parameter<T>* param = nullptr;
        bool needs_grad = false;
        std::function<void()> backward;
    };

    Var push(Tensor<T> value, bool needs_grad);
    Node& node(Var v) { return nodes_.at(v.id); }
    const Node& node(Var v) const { return nodes_.at(v.id); }
    Tensor<T>& grad_buffer(Var v);
    void accumulate(Var v, const Tensor<T>& g);

    std::deque<Node> nodes_;  // deque keeps value() references stable across pushes
    Tensor<T> empty_;
};

}  // namespace fea::nn
