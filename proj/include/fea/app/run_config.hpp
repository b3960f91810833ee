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
#include <optional>
#include <string>

#include "fea/bench/feabench.hpp"
#include "fea/train/bundle.hpp"
#include "fea/train/trainer.hpp"
#include "json.hpp"

namespace fea::app {

/// Settings shared by every command. Loaded from a JSON file and then
/// overridden by command-line flags; the effective config is what gets hashed.
struct RunConfig {
    // Inputs. Relative paths in a config file resolve against its directory.
    std::filesystem::path annotations;   // ground truth / dataset annotations (JSONL)
    std::filesystem::path images;        // directory of <image_id>.{png,jpg,jpeg,bmp}
    std::filesystem::path templates;     // question bank; built-in bank when empty
    std::filesystem::path instructions;  // instruction records for training (JSONL)
    std::filesystem::path checkpoint;    // model to evaluate or to continue from
    std::filesystem::path responses;     // canned responses for score-responses
    std::filesystem::path fixture_dir;   // offline generator responses
    std::filesystem::path cache;         // generator cache; <output>/cache when empty
    std::filesystem::path output = "out";

    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    /// "toy" uses the built-in procedural corpus; "files" reads the paths above.
    std::string data = "toy";

    train::Stage stage = train::Stage::Finetune;
    /// Explicit stage settings; otherwise the toy or published defaults.
    std::optional<train::StageConfig> stage_config;
    std::optional<train::BundleConfig> bundle;
    train::WarmupConfig warmup;
    std::size_t warmup_texts = 256;

    std::optional<std::size_t> eval_count;

    std::string adapter = "feabench";
    std::optional<bench::TaskKind> task;
    /// Fixed evaluation prompt; sampled from the bank per (image, task) when unset.
    std::optional<std::string> prompt;
    std::size_t max_tokens = 32;

    // Generation endpoint; URL and key come from the environment.
    std::string model = "gpt-4o";
    int timeout_seconds = 60;

    nlohmann::json to_json() const;
    /// Throws Config on unknown keys or mistyped values.
    static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static RunConfig load(const std::filesystem::path& path);

    /// 16 hex digits of FNV-1a over the canonical JSON.
    std::string hash() const;

    bool toy() const { return data == "toy"; }
    void validate() const;
};

/// Throws Config naming `what` when the path is empty or missing.
void require_existing(const std::filesystem::path& path, const std::string& what);

}  // namespace fea::app
