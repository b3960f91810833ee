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
#include <optional>
#include <string>
#include <vector>

#include "fea/common/rng.hpp"
#include "fea/nn/graph.hpp"
#include "json.hpp"

namespace fea::train {

/// Pre-norm decoder-only transformer standing in for the frozen language model.
struct ToyLMConfig {
    std::size_t vocab = 64;
    std::size_t width = 64;  // d′, shared with the visual tokens
    std::size_t layers = 2;
    std::size_t heads = 2;
    std::size_t context = 96;
    std::size_t mlp_hidden = 128;
    double norm_eps = 1e-6;

    void validate() const;
};

/// Low-rank adapters on the attention query and value maps of every layer.
struct LoraConfig {
    std::size_t rank = 4;
    /// Defaults to the rank, i.e. unit scale.
    std::optional<double> alpha;
    double init_std = 0.02;

    double scale() const { return alpha.value_or(static_cast<double>(rank)) / static_cast<double>(rank); }
    void validate(const ToyLMConfig& lm) const;
};

inline const std::string kLmGroup = "lm";
inline const std::string kLoraGroup = "lora";
/// Projection targets that receive adapters.
inline const std::vector<std::string> kLoraTargets{"q", "v"};

/// lm.tok_emb (V, d′), lm.pos_emb (context, d′), per layer
/// lm.layer{i}.{norm1,norm2}.gain, lm.layer{i}.attn.{q,k,v,o}.{weight,bias},
/// lm.layer{i}.mlp.{w1,b1,w2,b2}; lm.final_norm.gain, lm.head.{weight,bias}.
template <typename T>
void init_toy_lm(nn::ParameterStore<T>& store, const ToyLMConfig& cfg, Rng& rng);

/// lora.layer{i}.{q,v}.A (r, d_in) ~ N(0, init_std²) and .B (d_out, r) = 0.
template <typename T>
void init_lora(nn::ParameterStore<T>& store, const ToyLMConfig& lm, const LoraConfig& cfg, Rng& rng);

/// x·W + b + scale·(x·Aᵀ)·Bᵀ.
template <typename T>
nn::Var lora_linear(nn::Graph<T>& g, nn::Var x, nn::Var w, nn::Var b, nn::Var a, nn::Var bmat, T scale);

/// Eager form of lora_linear. W is (d_in, d_out); A (r, d_in); B (d_out, r).
/// Rejects r > min(d_in, d_out).
template <typename T>
nn::Tensor<T> lora_forward(const nn::Tensor<T>& x, const nn::Tensor<T>& w, const nn::Tensor<T>& bias,
                           const nn::Tensor<T>& a, const nn::Tensor<T>& b, double scale);

/// Logits (rows, V) for an input embedding sequence (rows, d′). Positions are
/// added here; causal attention. With `lora` set, adapters are applied.
template <typename T>
nn::Var lm_forward(nn::Graph<T>& g, nn::ParameterStore<T>& store, const ToyLMConfig& cfg, const LoraConfig* lora,
                   nn::Var embeddings);

/// Rows of lm.tok_emb for the given ids.
template <typename T>
nn::Var embed_tokens(nn::Graph<T>& g, nn::ParameterStore<T>& store, const std::vector<std::size_t>& ids);

nlohmann::json to_json(const ToyLMConfig& c);
ToyLMConfig toy_lm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LoraConfig& c);
LoraConfig lora_config_from_json(const nlohmann::json& j);

}  // namespace fea::train
