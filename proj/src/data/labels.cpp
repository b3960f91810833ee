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

#include "fea/data/labels.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

#include "fea/common/error.hpp"

namespace fea::data {

std::string_view to_string(Expression e) {
    switch (e) {
        case Expression::Neutral: return "Neutral";
        case Expression::Anger: return "Anger";
        case Expression::Disgust: return "Disgust";
        case Expression::Fear: return "Fear";
        case Expression::Happiness: return "Happiness";
        case Expression::Sadness: return "Sadness";
        case Expression::Surprise: return "Surprise";
    }
    return "?";
}

Expression parse_expression(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Expression e : kExpressions) {
        std::string candidate(to_string(e));
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (candidate == lower) return e;
    }
    fail(ErrorKind::Parse, "unknown expression label '" + std::string(name) + "'");
}

std::vector<ExpressionMention> find_expression_mentions(std::string_view text) {
    static const std::vector<std::pair<std::string, Expression>> lexicon{
        {"neutral", Expression::Neutral},     {"anger", Expression::Anger},
        {"angry", Expression::Anger},         {"disgusted", Expression::Disgust},
        {"disgust", Expression::Disgust},     {"fearful", Expression::Fear},
        {"fear", Expression::Fear},           {"happiness", Expression::Happiness},
        {"happy", Expression::Happiness},     {"sadness", Expression::Sadness},
        {"sad", Expression::Sadness},         {"surprised", Expression::Surprise},
        {"surprise", Expression::Surprise},
    };
    static const std::regex pattern = [] {
        std::string alt;
        for (const auto& [word, fe] : lexicon) alt += (alt.empty() ? "" : "|") + word;
        return std::regex("\\b(" + alt + ")", std::regex::icase | std::regex::ECMAScript);
    }();
    std::vector<ExpressionMention> out;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it) {
        std::string word = (*it)[1].str();
        std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
        for (const auto& [w, fe] : lexicon)
            if (w == word) {
                out.push_back({static_cast<std::size_t>(it->position(1)), fe});
                break;
            }
    }
    return out;
}

bool is_fea_au(int au) { return std::find(kFeaAus.begin(), kFeaAus.end(), au) != kFeaAus.end(); }

AuSet::AuSet(std::initializer_list<int> aus) {
    for (int au : aus) insert(au);
}

AuSet::AuSet(const std::vector<int>& aus) {
    for (int au : aus) insert(au);
}

AuSet AuSet::fea_vocabulary() {
    AuSet s;
    for (int au : kFeaAus) s.insert(au);
    return s;
}

void AuSet::insert(int au) {
    require(au >= 0 && au <= kMaxAu, ErrorKind::Validation, "action unit index " + std::to_string(au) + " out of range");
    bits_.set(static_cast<std::size_t>(au));
}

void AuSet::erase(int au) {
    if (au >= 0 && au <= kMaxAu) bits_.reset(static_cast<std::size_t>(au));
}

bool AuSet::contains(int au) const { return au >= 0 && au <= kMaxAu && bits_.test(static_cast<std::size_t>(au)); }

std::vector<int> AuSet::values() const {
    std::vector<int> out;
    for (int au = 0; au <= kMaxAu; ++au)
        if (bits_.test(static_cast<std::size_t>(au))) out.push_back(au);
    return out;
}

AuSet AuSet::operator&(const AuSet& o) const {
    AuSet s;
    s.bits_ = bits_ & o.bits_;
    return s;
}

AuSet AuSet::operator|(const AuSet& o) const {
    AuSet s;
    s.bits_ = bits_ | o.bits_;
    return s;
}

std::string render_aus(const AuSet& aus) {
    if (aus.empty()) return "none";
    std::string out;
    for (int au : aus.values()) {
        if (!out.empty()) out += ", ";
        out += "AU" + std::to_string(au);
    }
    return out;
}

std::optional<std::string_view> facs_name(int au) {
    static const std::map<int, std::string_view> names{
        {1, "inner brow raiser"},  {2, "outer brow raiser"}, {4, "brow lowerer"},
        {5, "upper lid raiser"},   {6, "cheek raiser"},      {7, "lid tightener"},
        {9, "nose wrinkler"},      {10, "upper lip raiser"}, {12, "lip corner puller"},
        {14, "dimpler"},           {15, "lip corner depressor"}, {17, "chin raiser"},
        {23, "lip tightener"},     {24, "lip pressor"},      {25, "lips part"},
        {26, "jaw drop"},
    };
    auto it = names.find(au);
    if (it == names.end()) return std::nullopt;
    return it->second;
}

}  // namespace fea::data
