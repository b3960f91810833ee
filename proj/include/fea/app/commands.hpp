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

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "fea/app/run_config.hpp"
#include "fea/bench/feabench.hpp"
#include "fea/data/pipeline.hpp"
#include "fea/train/trainer.hpp"

namespace fea::app {

/// 0 success, 2 validation or parse failure, 3 external service, 4 configuration.
int exit_code(ErrorKind kind);
/// Same mapping for any exception; non-library exceptions give 1.
int exit_code(const std::exception& e);

struct CropPreviewResult {
    std::vector<std::filesystem::path> files;  // canonical order
    std::filesystem::path manifest;
};

/// Writes `NN_<label>.png` for the 16 regions and `manifest.json` with the
/// pixel windows into `out_dir`.
CropPreviewResult cmd_crop_preview(const std::filesystem::path& image, const std::filesystem::path& out_dir,
                                   const RunConfig& cfg);

struct BuildDatasetResult {
    data::DatasetBuildResult build;
    std::vector<std::string> train_ids, eval_ids;
    /// Calls that reached the uncached generator.
    std::size_t generator_calls = 0;
};

/// Writes instructions.jsonl, quarantine.jsonl, failures.jsonl, the split
/// files and report.json into cfg.output. When `generator` is null the
/// fixture directory or the HTTP endpoint from the environment is used.
/// Throws ExternalService after persisting everything if any record failed.
BuildDatasetResult cmd_build_dataset(const RunConfig& cfg, data::TextGenerator* generator = nullptr);

struct TrainResult {
    train::TrainingLog log;
    std::filesystem::path checkpoint;
};

/// Trains one stage and writes stage<k>.ckpt and stage<k>_log.jsonl into
/// cfg.output. Without cfg.checkpoint a fresh bundle is built and its base
/// language model warmed up first. Throws NonFinite after saving the
/// last-good parameters when training aborted.
TrainResult cmd_train(const RunConfig& cfg, const train::StepCallback& on_step = {});

struct EvaluateResult {
    std::vector<bench::ResponseRecord> responses;
    bench::MetricsReport report;
};

/// Generate → extract → score over the adapter's ground truth; writes
/// responses.jsonl, report.json and report.txt into cfg.output.
EvaluateResult cmd_evaluate(const RunConfig& cfg);

/// Scores cfg.responses against the ground truth; writes report.json and
/// report.txt into cfg.output.
bench::MetricsReport cmd_score_responses(const RunConfig& cfg);

/// Ground truth for an adapter. FE labels are optional for AU-only adapters
/// and AU sets for FER-only ones; AUs outside the twelve dataset AUs are
/// dropped since no shared vocabulary contains them.
std::vector<data::AnnotationRecord> read_ground_truth(const std::filesystem::path& path,
                                                      const bench::DatasetAdapter& adapter);

}  // namespace fea::app
