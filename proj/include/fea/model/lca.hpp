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
#include "fea/vision/region_cropper.hpp"

namespace fea::model {

/// Local clue aggregator: a per-region conv block, projection-free
/// self-attention across the 16 regions, and a linear map of the flattened
/// result to a single token.
struct LcaConfig {
    std::size_t d = 64;
    std::size_t conv_layers = 4;
    std::size_t kernel = 3;
    std::size_t stride = 2;
    std::size_t padding = 1;
    std::size_t token_dim = 64;
    /// GELU after the final conv layer too (off: pool the raw last layer).
    bool activate_last = false;
    /// Learned d×d Q/K/V maps in the re-weighting step (off: Q = K = V = R).
    bool learned_qkv = false;

    void validate() const;
    /// Spatial side after each conv layer, starting with the input side.
    std::vector<std::size_t> spatial_schedule(std::size_t side = vision::kRegionSide) const;
};

inline const std::string kLcaGroup = "lca";

/// Adds lca.* parameters: conv{i}.weight (k,k,Cin,d), conv{i}.bias (d),
/// out.weight (16·d, d′), out.bias (d′), and attn.{q,k,v}.weight if enabled.
template <typename T>
void init_lca(nn::ParameterStore<T>& store, const LcaConfig& cfg, Rng& rng);

template <typename T>
struct LcaVars {
    nn::Var f_attn;   // (16, d)
    nn::Var f_local;  // (1, d′)
};

/// (16, d): pooled conv features of each region, stacked in input order.
template <typename T>
nn::Var lca_region_features(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg,
                            const std::vector<nn::Var>& regions);

/// Scaled dot-product self-attention over the region rows.
template <typename T>
nn::Var lca_reweight(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg, nn::Var r_local);

/// Row-major flatten of (16, d) followed by the output linear layer.
template <typename T>
nn::Var lca_project(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg, nn::Var f_attn);

template <typename T>
LcaVars<T> lca_forward(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg,
                       const vision::LocalRegionSet<T>& regions);

// Eager wrappers returning plain tensors.

template <typename T>
nn::Tensor<T> extract_region_features(const vision::LocalRegionSet<T>& regions, nn::ParameterStore<T>& store,
                                      const LcaConfig& cfg);

template <typename T>
nn::Tensor<T> reweight_regions(const nn::Tensor<T>& r_local, nn::ParameterStore<T>& store, const LcaConfig& cfg);

/// Returns a vector of length d′.
template <typename T>
nn::Tensor<T> project_local_token(const nn::Tensor<T>& f_attn, nn::ParameterStore<T>& store, const LcaConfig& cfg);

template <typename T>
struct LcaOutput {
    nn::Tensor<T> f_attn;   // (16, d)
    nn::Tensor<T> f_local;  // (d′)
};

template <typename T>
LcaOutput<T> lca_forward(const vision::LocalRegionSet<T>& regions, nn::ParameterStore<T>& store,
                         const LcaConfig& cfg);

}  // namespace fea::model
