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

#include "fea/train/tokenizer.hpp"

#include <regex>

#include "fea/common/error.hpp"

namespace fea::train {

namespace {

const std::vector<std::string> kSpecials{"<pad>", "<bos>", "<eos>", "<unk>"};

bool no_space_before(const std::string& t) {
    return t.size() == 1 && std::string_view(",.;:!?)]").find(t[0]) != std::string_view::npos;
}
bool no_space_after(const std::string& t) { return t == "(" || t == "["; }

}  // namespace

Tokenizer::Tokenizer() {
    for (const auto& s : kSpecials) add(s);
}

void Tokenizer::add(const std::string& token) {
    if (ids_.emplace(token, tokens_.size()).second) tokens_.push_back(token);
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus) {
    Tokenizer tok;
    for (const auto& text : corpus)
        for (const auto& t : split(text)) tok.add(t);
    return tok;
}

std::vector<std::string> Tokenizer::split(std::string_view text) {
    static const std::regex pattern(R"(\n|[A-Za-z0-9]+(?:['-][A-Za-z0-9]+)*|[^\s])");
    std::vector<std::string> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it)
        out.push_back(it->str());
    return out;
}

std::vector<std::size_t> Tokenizer::encode(std::string_view text) const {
    std::vector<std::size_t> ids;
    for (const auto& t : split(text)) {
        const auto it = ids_.find(t);
        ids.push_back(it == ids_.end() ? kUnk : it->second);
    }
    return ids;
}

std::string Tokenizer::decode(const std::vector<std::size_t>& ids) const {
    std::string out;
    std::string prev;
    for (std::size_t id : ids) {
        if (id < kSpecials.size() && id != kUnk) continue;
        const std::string& t = token(id);
        const bool glue = out.empty() || prev == "\n" || t == "\n" || no_space_before(t) || no_space_after(prev);
        if (!glue) out += ' ';
        out += t;
        prev = t;
    }
    return out;
}

const std::string& Tokenizer::token(std::size_t id) const {
    require(id < tokens_.size(), ErrorKind::Validation,
            "token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(tokens_.size()));
    return tokens_[id];
}

nlohmann::json Tokenizer::to_json() const { return tokens_; }

Tokenizer Tokenizer::from_json(const nlohmann::json& j) {
    Tokenizer tok;
    try {
        const auto tokens = j.get<std::vector<std::string>>();
        require(tokens.size() >= kSpecials.size() &&
                    std::equal(kSpecials.begin(), kSpecials.end(), tokens.begin()),
                ErrorKind::Parse, "tokenizer vocabulary must start with the special tokens");
        for (const auto& t : tokens) tok.add(t);
        require(tok.size() == tokens.size(), ErrorKind::Parse, "duplicate vocabulary entries");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("tokenizer: ") + e.what());
    }
    return tok;
}

}  // namespace fea::train
