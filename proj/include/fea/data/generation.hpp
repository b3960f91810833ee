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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace fea::data {

struct GenerationRequest {
    std::string image_id;
    std::string system;
    std::string prompt;
};

/// Chat-style text generation. Implementations throw ExternalService on failure.
class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Replays `<dir>/<image_id>.txt`.
class FixtureGenerator final : public TextGenerator {
public:
    explicit FixtureGenerator(std::filesystem::path dir);
    std::string generate(const GenerationRequest& request) override;

private:
    std::filesystem::path dir_;
};

struct HttpGeneratorConfig {
    std::string endpoint;  // e.g. http://localhost:8000/v1/chat/completions
    std::string api_key;
    std::string model = "gpt-4o";
    int timeout_seconds = 60;

    /// FEA_GEN_ENDPOINT, FEA_GEN_API_KEY, FEA_GEN_MODEL. Throws Config when
    /// the endpoint is unset.
    static HttpGeneratorConfig from_env();
};

/// Posts OpenAI-compatible chat-completion requests and returns the first
/// choice's message content.
class HttpChatGenerator final : public TextGenerator {
public:
    explicit HttpChatGenerator(HttpGeneratorConfig config);
    std::string generate(const GenerationRequest& request) override;

private:
    HttpGeneratorConfig config_;
    std::string base_;  // scheme://host[:port]
    std::string path_;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

/// Caches responses per image_id (in memory and, when `cache_dir` is set, as
/// `<cache_dir>/<image_id>.json` holding the request and response) and
/// retries ExternalService failures with exponential backoff.
class CachedGenerator final : public TextGenerator {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    CachedGenerator(TextGenerator& inner, std::filesystem::path cache_dir = {}, RetryPolicy policy = {},
                    Sleeper sleeper = {});

    std::string generate(const GenerationRequest& request) override;

    /// Calls forwarded to the wrapped generator, including failed attempts.
    std::size_t inner_calls() const { return inner_calls_.load(); }

private:
    std::filesystem::path cache_file(const std::string& image_id) const;

    TextGenerator& inner_;
    std::filesystem::path cache_dir_;
    RetryPolicy policy_;
    Sleeper sleeper_;
    std::mutex mutex_;
    std::map<std::string, std::string> memory_;
    std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
    std::atomic<std::size_t> inner_calls_{0};
};

}  // namespace fea::data
