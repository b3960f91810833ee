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

#include <string>
#include <vector>

#include "fea/common/rng.hpp"
#include "fea/nn/graph.hpp"
#include "fea/vision/encoder.hpp"

namespace fea::model {

/// Multi-perspective projector. All attention blocks run at the encoder
/// width c; Q/K maps are bias-free, V/output maps carry a bias.
struct MppConfig {
    std::vector<std::size_t> shallow_layers{3, 8, 13, 18};
    std::size_t deep_layer = 23;
    std::size_t channels = 8;      // c
    std::size_t local_dim = 64;    // LCA width d feeding the local projector
    std::size_t token_dim = 64;    // d′
    std::size_t mlp_hidden = 64;
    std::size_t heads = 1;
    double gamma1_init = 1.0;
    double gamma2_init = 1.0;
    /// Project F_L through a learned query map in the shallow fusion step
    /// (off: F_L is used directly as the query).
    bool project_query = true;

    std::size_t levels() const { return shallow_layers.size() + 1; }
    void validate() const;
};

inline const std::string kMppGroup = "mpp";

/// Adds mpp.* parameters. Attention blocks are named mpp.shallow, mpp.local
/// and mpp.self with members {q,k,v,o}.weight and {v,o}.bias; also
/// mpp.local_proj.{weight,bias}, mpp.gamma1, mpp.gamma2 and
/// mpp.mlp.{w1,b1,w2,b2}.
template <typename T>
void init_mpp(nn::ParameterStore<T>& store, const MppConfig& cfg, Rng& rng);

/// Generic attention block: linear Q/K/V maps, multi-head SDPA, output map.
/// With `project_query` false the query rows are used unchanged.
template <typename T>
nn::Var attention_block(nn::Graph<T>& g, nn::ParameterStore<T>& store, const std::string& prefix, nn::Var query,
                        nn::Var context, std::size_t heads, bool project_query = true);

/// Cross-attention of the deep map over the row-concatenated shallow maps.
template <typename T>
nn::Var mpp_fuse_shallow(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg,
                         const std::vector<nn::Var>& pyramid);

/// (16, d) → (16, c).
template <typename T>
nn::Var mpp_project_local(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, nn::Var f_attn);

/// cross_attention(x, local, local) + γ₁·x
template <typename T>
nn::Var mpp_fuse_local(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, nn::Var x,
                       nn::Var local);

/// self_attention(x) + γ₂·x
template <typename T>
nn::Var mpp_refine(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, nn::Var x);

/// Row-wise two-layer MLP to d′.
template <typename T>
nn::Var mpp_to_token_space(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, nn::Var x);

template <typename T>
nn::Var mpp_forward(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg,
                    const std::vector<nn::Var>& pyramid, nn::Var f_attn);

// Eager wrappers.

template <typename T>
nn::Tensor<T> fuse_shallow(const vision::FeaturePyramid<T>& pyramid, nn::ParameterStore<T>& store,
                           const MppConfig& cfg);
template <typename T>
nn::Tensor<T> project_local(const nn::Tensor<T>& f_attn, nn::ParameterStore<T>& store, const MppConfig& cfg);
template <typename T>
nn::Tensor<T> fuse_local(const nn::Tensor<T>& x, const nn::Tensor<T>& local, nn::ParameterStore<T>& store,
                         const MppConfig& cfg);
template <typename T>
nn::Tensor<T> refine(const nn::Tensor<T>& x, nn::ParameterStore<T>& store, const MppConfig& cfg);
template <typename T>
nn::Tensor<T> to_token_space(const nn::Tensor<T>& x, nn::ParameterStore<T>& store, const MppConfig& cfg);
template <typename T>
nn::Tensor<T> mpp_forward(const vision::FeaturePyramid<T>& pyramid, const nn::Tensor<T>& f_attn,
                          nn::ParameterStore<T>& store, const MppConfig& cfg);

}  // namespace fea::model
