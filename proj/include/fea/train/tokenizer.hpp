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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fea::train {

/// Word-level tokenizer over a vocabulary built from a corpus. Words are runs
/// of letters and digits joined by internal apostrophes or hyphens; every
/// other non-space character and each newline is its own token.
class Tokenizer {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kBos = 1;
    static constexpr std::size_t kEos = 2;
    static constexpr std::size_t kUnk = 3;

    Tokenizer();

    /// Specials first, then corpus tokens in order of first appearance.
    static Tokenizer build(const std::vector<std::string>& corpus);

    static std::vector<std::string> split(std::string_view text);

    /// Unknown words map to kUnk. No specials are added.
    std::vector<std::size_t> encode(std::string_view text) const;
    /// Joins tokens with spaces except before closing punctuation, after
    /// opening brackets and around newlines. Special tokens are dropped.
    std::string decode(const std::vector<std::size_t>& ids) const;

    std::size_t size() const { return tokens_.size(); }
    const std::string& token(std::size_t id) const;
    bool contains(const std::string& token) const { return ids_.contains(token); }

    nlohmann::json to_json() const;
    static Tokenizer from_json(const nlohmann::json& j);

    friend bool operator==(const Tokenizer& a, const Tokenizer& b) { return a.tokens_ == b.tokens_; }

private:
    void add(const std::string& token);

    std::vector<std::string> tokens_;
    std::map<std::string, std::size_t> ids_;
};

}  // namespace fea::train
