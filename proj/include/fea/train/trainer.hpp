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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fea/train/bundle.hpp"
#include "json.hpp"

namespace fea::train {

enum class Stage { Pretrain, Finetune };

std::string_view to_string(Stage s);
/// "pretrain"/"1" or "finetune"/"2".
Stage parse_stage(std::string_view s);

enum class Optimizer { Sgd, Adam };

/// Constant rates, or cosine decay from the configured rate to zero over the run.
enum class Schedule { Constant, Cosine };

struct StageConfig {
    Stage stage = Stage::Pretrain;
    /// Learning rate per parameter group ("lca", "mpp", "lora", "lm").
    std::map<std::string, double> learning_rates;
    std::size_t batch_size = 1;
    std::size_t epochs = 1;
    /// When non-zero, overrides epochs and runs exactly this many updates.
    std::size_t max_steps = 0;
    Optimizer optimizer = Optimizer::Sgd;
    Schedule schedule = Schedule::Constant;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;

    /// Pretrain: lca, mpp. Finetune: lca, mpp, lora. Never lm.
    std::vector<std::string> trainable_groups() const;
    void validate() const;

    /// Published schedule: stage 1 lr 1e-3, batch 64; stage 2 lr 2e-5 for
    /// LCA/MPP and 2e-4 for LoRA, batch 16; one epoch each.
    static StageConfig standard(Stage stage);
    /// Settings that converge on the toy bundle within a few hundred steps.
    static StageConfig toy(Stage stage);

    nlohmann::json to_json() const;
    static StageConfig from_json(const nlohmann::json& j);
};

/// One teacher-forced sample: cached visual input, <bos>+question, answer+<eos>.
/// Text-only samples carry `context` ids instead, embedded into the rows the
/// visual tokens would occupy.
template <typename T>
struct TrainingExample {
    VisualInput<T> visual;
    std::vector<std::size_t> instruction;
    std::vector<std::size_t> response;
    std::vector<std::size_t> context;
};

template <typename T>
TrainingExample<T> make_example(const ModelBundle<T>& bundle, const vision::Image<T>& image,
                                const std::string& question, const std::string& answer);

/// Text-only example; the visual input is left empty.
template <typename T>
TrainingExample<T> make_text_example(const Tokenizer& tok, const std::string& question, const std::string& answer,
                                     const std::string& context = "") {
    return {{}, instruction_ids(tok, question), response_ids(tok, answer), tok.encode(context)};
}

/// Mean cross-entropy over rows where mask is 1. Empty mask is rejected.
template <typename T>
T masked_lm_loss(const nn::Tensor<T>& logits, const std::vector<std::size_t>& targets,
                 const std::vector<std::uint8_t>& mask);

/// Response loss for one example as a graph node.
template <typename T>
nn::Var example_loss(nn::Graph<T>& g, ModelBundle<T>& bundle, const TrainingExample<T>& ex);

/// Sets `trainable` from the stage's groups; everything else is frozen.
template <typename T>
void apply_stage(nn::ParameterStore<T>& store, const StageConfig& stage);

struct StepRecord {
    std::size_t step = 0;
    double loss = 0;
};

struct TrainingLog {
    Stage stage = Stage::Pretrain;
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;
    bool aborted = false;
    std::string abort_reason;
    /// Copied into every written row when set.
    std::string config_hash;

    double final_loss() const;
    /// One JSON object per step, plus an abort line when applicable.
    void write_jsonl(const std::filesystem::path& path) const;
};

using StepCallback = std::function<void(const StepRecord&)>;

/// Mini-batch training with per-group learning rates. Batches are drawn from
/// a seed-shuffled order each epoch. A non-finite loss or gradient stops the
/// run and restores the parameters that produced the last finite loss.
template <typename T>
TrainingLog train_stage(ModelBundle<T>& bundle, const std::vector<TrainingExample<T>>& data,
                        const StageConfig& stage, std::uint64_t seed, const StepCallback& on_step = {});

/// Text-only training of the base language model, standing in for the
/// pretrained model the adapters are attached to. The visual rows hold the
/// embeddings of each sample's context ids (zeros past the end), so the model
/// learns to read what precedes the instruction.
struct WarmupConfig {
    double learning_rate = 3e-3;
    std::size_t batch_size = 8;
    std::size_t steps = 300;
    Optimizer optimizer = Optimizer::Adam;
    Schedule schedule = Schedule::Cosine;
};

/// Response loss with the visual rows replaced by context embeddings.
template <typename T>
nn::Var text_loss(nn::Graph<T>& g, ModelBundle<T>& bundle, const TrainingExample<T>& ex);

/// Trains only lm.* parameters; every parameter is frozen afterwards.
template <typename T>
TrainingLog warmup_language_model(ModelBundle<T>& bundle, const std::vector<TrainingExample<T>>& texts,
                                  const WarmupConfig& warmup, std::uint64_t seed, const StepCallback& on_step = {});

}  // namespace fea::train
