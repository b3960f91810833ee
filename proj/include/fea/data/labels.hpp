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

#include <array>
#include <bitset>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fea::data {

enum class Expression { Neutral, Anger, Disgust, Fear, Happiness, Sadness, Surprise };

inline constexpr std::array<Expression, 7> kExpressions{Expression::Neutral,   Expression::Anger,
                                                        Expression::Disgust,   Expression::Fear,
                                                        Expression::Happiness, Expression::Sadness,
                                                        Expression::Surprise};

/// Capitalized class name, e.g. "Happiness".
std::string_view to_string(Expression e);
/// Case-insensitive exact class name. Throws Parse on anything else.
Expression parse_expression(std::string_view name);

struct ExpressionMention {
    std::size_t offset;
    Expression fe;
};

/// Case-insensitive occurrences of the class names and their adjective forms
/// (happy, sad, angry, fearful, disgusted, surprised, neutral), each starting
/// at a word boundary, ordered by character offset.
std::vector<ExpressionMention> find_expression_mentions(std::string_view text);

/// The twelve action units annotated in the instruction dataset.
inline constexpr std::array<int, 12> kFeaAus{1, 2, 4, 6, 7, 10, 12, 15, 23, 24, 25, 26};
inline constexpr int kMaxAu = 63;

bool is_fea_au(int au);

/// Set of FACS action-unit indices in [0, 63]. Iterates in ascending order.
class AuSet {
public:
    AuSet() = default;
    AuSet(std::initializer_list<int> aus);
    explicit AuSet(const std::vector<int>& aus);

    static AuSet fea_vocabulary();

    void insert(int au);
    void erase(int au);
    bool contains(int au) const;
    std::size_t size() const { return bits_.count(); }
    bool empty() const { return bits_.none(); }
    std::vector<int> values() const;

    AuSet operator&(const AuSet& o) const;
    AuSet operator|(const AuSet& o) const;
    bool subset_of(const AuSet& o) const { return (bits_ & ~o.bits_).none(); }
    friend bool operator==(const AuSet&, const AuSet&) = default;

private:
    std::bitset<kMaxAu + 1> bits_;
};

/// "AU6, AU12" in ascending order; "none" for the empty set.
std::string render_aus(const AuSet& aus);

/// Canonical FACS action name, e.g. 4 → "brow lowerer". Covers the twelve
/// dataset AUs plus 5, 9, 14 and 17 used by external AU datasets.
std::optional<std::string_view> facs_name(int au);

}  // namespace fea::data
