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

#include "fea/app/run_config.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <set>

#include "fea/common/error.hpp"
#include "fea/common/rng.hpp"

namespace fea::app {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kKeys{"annotations", "images",      "templates",    "instructions",   "checkpoint",
                                  "responses",   "fixture_dir", "cache",        "output",         "seed",
                                  "jobs",        "data",        "stage",        "stage_config",   "bundle",
                                  "warmup",      "eval_count",  "adapter",      "task",           "prompt",
                                  "max_tokens",  "model",       "timeout_seconds", "warmup_texts"};

const std::array<const char*, 9> kPathKeys{"annotations", "images",      "templates", "instructions", "checkpoint",
                                           "responses",   "fixture_dir", "cache",     "output"};

template <typename Config>
auto path_field(Config& c, std::string_view key) -> decltype(&c.output) {
    if (key == "annotations") return &c.annotations;
    if (key == "images") return &c.images;
    if (key == "templates") return &c.templates;
    if (key == "instructions") return &c.instructions;
    if (key == "checkpoint") return &c.checkpoint;
    if (key == "responses") return &c.responses;
    if (key == "fixture_dir") return &c.fixture_dir;
    if (key == "cache") return &c.cache;
    return &c.output;
}

nlohmann::json warmup_json(const train::WarmupConfig& w) {
    return {{"learning_rate", w.learning_rate},
            {"batch_size", w.batch_size},
            {"steps", w.steps},
            {"optimizer", w.optimizer == train::Optimizer::Sgd ? "sgd" : "adam"},
            {"schedule", w.schedule == train::Schedule::Constant ? "constant" : "cosine"}};
}

train::WarmupConfig warmup_from_json(const nlohmann::json& j) {
    train::WarmupConfig w;
    w.learning_rate = j.value("learning_rate", w.learning_rate);
    w.batch_size = j.value("batch_size", w.batch_size);
    w.steps = j.value("steps", w.steps);
    const std::string opt = j.value("optimizer", std::string("adam"));
    require(opt == "sgd" || opt == "adam", ErrorKind::Config, "warmup optimizer must be 'sgd' or 'adam'");
    w.optimizer = opt == "sgd" ? train::Optimizer::Sgd : train::Optimizer::Adam;
    const std::string sched = j.value("schedule", std::string("cosine"));
    require(sched == "constant" || sched == "cosine", ErrorKind::Config, "warmup schedule must be 'constant' or 'cosine'");
    w.schedule = sched == "constant" ? train::Schedule::Constant : train::Schedule::Cosine;
    return w;
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    for (const char* key : kPathKeys) j[key] = path_field(*this, key)->generic_string();
    j["seed"] = seed;
    j["jobs"] = jobs;
    j["data"] = data;
    j["stage"] = std::string(train::to_string(stage));
    j["stage_config"] = stage_config ? stage_config->to_json() : nlohmann::json();
    j["bundle"] = bundle ? bundle->to_json() : nlohmann::json();
    j["warmup"] = warmup_json(warmup);
    j["warmup_texts"] = warmup_texts;
    j["eval_count"] = eval_count ? nlohmann::json(*eval_count) : nlohmann::json();
    j["adapter"] = adapter;
    j["task"] = task ? nlohmann::json(std::string(bench::to_string(*task))) : nlohmann::json();
    j["prompt"] = prompt ? nlohmann::json(*prompt) : nlohmann::json();
    j["max_tokens"] = max_tokens;
    j["model"] = model;
    j["timeout_seconds"] = timeout_seconds;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    require(j.is_object(), ErrorKind::Config, "run config must be a JSON object");
    for (const auto& [key, value] : j.items())
        require(kKeys.contains(key), ErrorKind::Config, "unknown run config key '" + key + "'");
    RunConfig c;
    try {
        for (const char* key : kPathKeys) {
            if (!j.contains(key) || j[key].is_null()) continue;
            fs::path p = j[key].get<std::string>();
            if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
            *path_field(c, key) = p;
        }
        c.seed = j.value("seed", c.seed);
        c.jobs = j.value("jobs", c.jobs);
        c.data = j.value("data", c.data);
        if (j.contains("stage")) {
            const auto& s = j["stage"];
            c.stage = train::parse_stage(s.is_number() ? std::to_string(s.get<int>()) : s.get<std::string>());
        }
        if (j.contains("stage_config") && !j["stage_config"].is_null())
            c.stage_config = train::StageConfig::from_json(j["stage_config"]);
        if (c.stage_config && !j.contains("stage")) c.stage = c.stage_config->stage;
        if (j.contains("bundle") && !j["bundle"].is_null()) c.bundle = train::BundleConfig::from_json(j["bundle"]);
        if (j.contains("warmup")) c.warmup = warmup_from_json(j["warmup"]);
        c.warmup_texts = j.value("warmup_texts", c.warmup_texts);
        if (j.contains("eval_count") && !j["eval_count"].is_null()) c.eval_count = j["eval_count"].get<std::size_t>();
        c.adapter = j.value("adapter", c.adapter);
        if (j.contains("task") && !j["task"].is_null()) c.task = bench::parse_task(j["task"].get<std::string>());
        if (j.contains("prompt") && !j["prompt"].is_null()) c.prompt = j["prompt"].get<std::string>();
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.model = j.value("model", c.model);
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("run config: ") + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::Config, std::string("run config: ") + e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    require_existing(path, "config file");
    std::ifstream in(path);
    try {
        return from_json(nlohmann::json::parse(in), path.parent_path());
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Config, path.string() + ": " + e.what());
    }
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
    return buf;
}

void RunConfig::validate() const {
    require(data == "toy" || data == "files", ErrorKind::Config, "data must be 'toy' or 'files', got '" + data + "'");
    require(jobs >= 1, ErrorKind::Config, "jobs must be at least 1");
    require(timeout_seconds > 0, ErrorKind::Config, "timeout_seconds must be positive");
    require(!output.empty(), ErrorKind::Config, "output directory is empty");
    if (stage_config)
        require(stage_config->stage == stage, ErrorKind::Config, "stage_config is for stage '" +
                                                                     std::string(train::to_string(stage_config->stage)) +
                                                                     "' but stage '" +
                                                                     std::string(train::to_string(stage)) + "' is selected");
    (void)bench::adapter_by_name(adapter);
}

void require_existing(const fs::path& path, const std::string& what) {
    require(!path.empty(), ErrorKind::Config, what + " is not set");
    require(fs::exists(path), ErrorKind::Config, what + " " + path.string() + " does not exist");
}

}  // namespace fea::app
