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

#include "fea/data/generation.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "fea/common/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace fea::data {

namespace {

void require_safe_id(const std::string& id) {
    require(!id.empty() && id.find('/') == std::string::npos && id.find('\\') == std::string::npos && id != "." &&
                id != "..",
            ErrorKind::Validation, "image id '" + id + "' cannot be used as a file name");
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

FixtureGenerator::FixtureGenerator(std::filesystem::path dir) : dir_(std::move(dir)) {
    require(std::filesystem::is_directory(dir_), ErrorKind::Config, "fixture directory " + dir_.string() + " not found");
}

std::string FixtureGenerator::generate(const GenerationRequest& request) {
    require_safe_id(request.image_id);
    const auto path = dir_ / (request.image_id + ".txt");
    if (!std::filesystem::exists(path))
        fail(ErrorKind::ExternalService, "no fixture response for '" + request.image_id + "' in " + dir_.string());
    return read_file(path);
}

HttpGeneratorConfig HttpGeneratorConfig::from_env() {
    HttpGeneratorConfig cfg;
    const char* endpoint = std::getenv("FEA_GEN_ENDPOINT");
    require(endpoint && *endpoint, ErrorKind::Config,
            "FEA_GEN_ENDPOINT is not set; pass --fixture-dir to run offline");
    cfg.endpoint = endpoint;
    if (const char* key = std::getenv("FEA_GEN_API_KEY")) cfg.api_key = key;
    if (const char* model = std::getenv("FEA_GEN_MODEL"); model && *model) cfg.model = model;
    return cfg;
}

HttpChatGenerator::HttpChatGenerator(HttpGeneratorConfig config) : config_(std::move(config)) {
    const auto scheme = config_.endpoint.find("://");
    require(scheme != std::string::npos, ErrorKind::Config, "endpoint '" + config_.endpoint + "' lacks a scheme");
    const auto slash = config_.endpoint.find('/', scheme + 3);
    base_ = config_.endpoint.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
}

std::string HttpChatGenerator::generate(const GenerationRequest& request) {
    httplib::Client client(base_);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
    const nlohmann::json body{{"model", config_.model},
                              {"temperature", 0},
                              {"messages",
                               {{{"role", "system"}, {"content", request.system}},
                                {{"role", "user"}, {"content", request.prompt}}}}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) fail(ErrorKind::ExternalService, "request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        fail(ErrorKind::ExternalService, config_.endpoint + " returned HTTP " + std::to_string(res->status));
    try {
        return nlohmann::json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ExternalService, std::string("unexpected response body: ") + e.what());
    }
}

CachedGenerator::CachedGenerator(TextGenerator& inner, std::filesystem::path cache_dir, RetryPolicy policy,
                                 Sleeper sleeper)
    : inner_(inner), cache_dir_(std::move(cache_dir)), policy_(policy), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!cache_dir_.empty()) std::filesystem::create_directories(cache_dir_);
}

std::filesystem::path CachedGenerator::cache_file(const std::string& image_id) const {
    return cache_dir_ / (image_id + ".json");
}

std::string CachedGenerator::generate(const GenerationRequest& request) {
    require_safe_id(request.image_id);
    std::shared_ptr<std::mutex> key_lock;
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(request.image_id); it != memory_.end()) return it->second;
        auto& slot = key_locks_[request.image_id];
        if (!slot) slot = std::make_shared<std::mutex>();
        key_lock = slot;
    }
    std::lock_guard key_guard(*key_lock);
    {
        std::lock_guard lock(mutex_);
        if (auto it = memory_.find(request.image_id); it != memory_.end()) return it->second;
    }
    if (!cache_dir_.empty() && std::filesystem::exists(cache_file(request.image_id))) {
        try {
            const auto j = nlohmann::json::parse(read_file(cache_file(request.image_id)));
            std::string text = j.at("response").get<std::string>();
            std::lock_guard lock(mutex_);
            return memory_[request.image_id] = text;
        } catch (const nlohmann::json::exception&) {
            // Unreadable cache entry: fall through and regenerate it.
        }
    }

    auto backoff = policy_.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        ++inner_calls_;
        try {
            std::string text = inner_.generate(request);
            if (!cache_dir_.empty()) {
                const nlohmann::json entry{{"image_id", request.image_id},
                                           {"request", {{"system", request.system}, {"prompt", request.prompt}}},
                                           {"response", text}};
                const auto tmp = cache_file(request.image_id).string() + ".tmp";
                std::ofstream(tmp) << entry.dump(2) << '\n';
                std::filesystem::rename(tmp, cache_file(request.image_id));
            }
            std::lock_guard lock(mutex_);
            return memory_[request.image_id] = text;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ExternalService || attempt >= policy_.max_attempts)
                throw Error(e.kind(), "generation for '" + request.image_id + "' failed after " +
                                          std::to_string(attempt) + " attempt(s): " + e.what());
            sleeper_(backoff);
            backoff = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(backoff.count()) * policy_.multiplier));
        }
    }
}

}  // namespace fea::data
