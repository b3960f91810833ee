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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fea/model/lca.hpp"
#include "fea/model/mpp.hpp"
#include "fea/train/tokenizer.hpp"
#include "fea/train/toy_lm.hpp"
#include "fea/vision/encoder.hpp"
#include "json.hpp"

namespace fea::train {

/// Everything needed to rebuild a model: encoder taps, LCA, MPP, LM, LoRA.
struct BundleConfig {
    vision::EncoderSpec encoder;
    model::LcaConfig lca;
    model::MppConfig mpp;
    ToyLMConfig lm;
    LoraConfig lora;
    vision::CropMode crop = vision::CropMode::Strip;

    /// Shared widths agree: LCA/MPP token width = LM width, MPP channels =
    /// encoder channels, MPP local width = LCA width, MPP layers = encoder taps.
    void validate() const;

    nlohmann::json to_json() const;
    static BundleConfig from_json(const nlohmann::json& j);
    /// FNV-1a of the canonical JSON dump.
    std::uint64_t hash() const;

    /// Desk-scale sizes used by the toy corpus and tests.
    static BundleConfig toy(std::size_t vocab);
};

/// Encoder output and crops for one image. Both are fixed functions of the
/// image, so they are computed once and reused across steps.
template <typename T>
struct VisualInput {
    vision::FeaturePyramid<T> pyramid;
    vision::LocalRegionSet<T> regions;
};

/// Row bookkeeping for [F_vision; F_local; instruction; response].
struct SequenceLayout {
    std::size_t visual = 0;
    std::size_t instruction = 0;
    std::size_t response = 0;

    std::size_t prefix() const { return visual + 1 + instruction; }
    /// The final response token is only ever a target, never an input.
    std::size_t input_length() const { return prefix() + response - 1; }
    /// 1 on rows whose next-token target is a response token.
    std::vector<std::uint8_t> loss_mask() const;
    /// Next-token target per input row; 0 where the mask is 0.
    std::vector<std::size_t> targets(const std::vector<std::size_t>& response_ids) const;
};

template <typename T>
class ModelBundle {
public:
    ModelBundle(BundleConfig config, Tokenizer tokenizer, std::uint64_t seed);

    const BundleConfig& config() const { return config_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }
    nn::ParameterStore<T>& params() { return params_; }
    const nn::ParameterStore<T>& params() const { return params_; }
    const vision::SyntheticEncoder<T>& encoder() const { return encoder_; }
    std::uint64_t seed() const { return seed_; }

    VisualInput<T> prepare(const vision::Image<T>& image) const;

    /// F_vision (N, d′) and F_local (1, d′) built on g.
    std::pair<nn::Var, nn::Var> visual_tokens(nn::Graph<T>& g, const VisualInput<T>& input);

    /// Logits for the assembled sequence [F_vision; F_local; tokens].
    nn::Var logits(nn::Graph<T>& g, nn::Var f_vision, nn::Var f_local, const std::vector<std::size_t>& tokens);

private:
    BundleConfig config_;
    Tokenizer tokenizer_;
    std::uint64_t seed_;
    vision::SyntheticEncoder<T> encoder_;
    nn::ParameterStore<T> params_;
};

/// (N+1+T, d′) concatenation; widths must agree. An empty instruction
/// tensor means T = 0.
template <typename T>
nn::Tensor<T> assemble_tokens(const nn::Tensor<T>& f_vision, const nn::Tensor<T>& f_local,
                              const nn::Tensor<T>& instruction);

/// Graph form; instruction may be absent (T = 0).
template <typename T>
nn::Var assemble_tokens(nn::Graph<T>& g, nn::Var f_vision, nn::Var f_local, const nn::Var* instruction);

/// <bos> followed by the question tokens.
std::vector<std::size_t> instruction_ids(const Tokenizer& tok, const std::string& question);
/// Answer tokens followed by <eos>.
std::vector<std::size_t> response_ids(const Tokenizer& tok, const std::string& answer);

/// Greedy decoding; stops at <eos> or after max_tokens. Throws Validation
/// when the sequence would not fit the context.
template <typename T>
std::vector<std::size_t> generate_ids(ModelBundle<T>& bundle, const VisualInput<T>& input,
                                      const std::string& question, std::size_t max_tokens);

template <typename T>
std::string generate(ModelBundle<T>& bundle, const VisualInput<T>& input, const std::string& question,
                     std::size_t max_tokens);

/// "FEACKPT1", u64 manifest length, JSON manifest, then float64 tensors in
/// manifest order. `provenance` is stored verbatim (stage, seed, ...).
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelBundle<T>& bundle,
                     const nlohmann::json& provenance);

template <typename T>
struct LoadedCheckpoint {
    ModelBundle<T> bundle;
    nlohmann::json provenance;
};

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace fea::train
