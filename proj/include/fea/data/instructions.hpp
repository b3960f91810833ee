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

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fea/common/error.hpp"
#include "fea/data/annotations.hpp"

namespace fea::data {

/// Formatting preamble sent as the system message so that responses can be
/// split into sections deterministically.
extern const std::string kFormatPreamble;

/// The annotation prompt with the record's label and AU list substituted.
std::string build_generation_prompt(const AnnotationRecord& record);

struct StructuredDescription {
    std::string emotion_summary;
    std::string facial_movement;
    std::string emotion_reasoning;
};

/// Splits generator output on the [SUMMARY], [MOVEMENT] and [REASONING]
/// headers, in any order. Throws Parse naming the offending header when one
/// is missing, repeated or empty.
StructuredDescription parse_structured_description(const std::string& text);

/// All AU indices written as "AU<k>" / "AU <k>" (case-insensitive), in order
/// of appearance, duplicates kept.
std::vector<int> find_au_tokens(const std::string& text);

/// AUs from `vocabulary` mentioned in `text` by token or by FACS name.
AuSet mentioned_aus(const std::string& text, const AuSet& vocabulary = AuSet::fea_vocabulary());

struct ValidationReport {
    bool fe_mentioned = false;     // label word (or an inflection) in the summary
    bool all_aus_mentioned = false;
    bool no_extraneous_aus = false;
    AuSet missing;                 // in au_set but not mentioned
    AuSet extraneous;              // mentioned but not in au_set

    bool passed() const { return fe_mentioned && all_aus_mentioned && no_extraneous_aus; }
    std::vector<std::string> reasons() const;
};

ValidationReport validate_description(const StructuredDescription& desc, const AnnotationRecord& record);

enum class InstructionType { Summary, Movement, Reasoning };
inline constexpr std::array<InstructionType, 3> kInstructionTypes{InstructionType::Summary, InstructionType::Movement,
                                                                  InstructionType::Reasoning};
std::string_view to_string(InstructionType t);
InstructionType parse_instruction_type(std::string_view s);

struct InstructionRecord {
    std::string image_id;
    InstructionType type = InstructionType::Summary;
    std::string question;
    std::string answer;

    friend bool operator==(const InstructionRecord&, const InstructionRecord&) = default;
};

nlohmann::json to_json(const InstructionRecord& r);
InstructionRecord instruction_from_json(const nlohmann::json& j);

/// Question templates per instruction type.
struct TemplateBank {
    std::map<InstructionType, std::vector<std::string>> questions;

    const std::vector<std::string>& of(InstructionType t) const;
    /// At least `min_per_type` non-empty, distinct templates per type, and the
    /// two canonical evaluation prompts present.
    void validate(std::size_t min_per_type = 10) const;

    static TemplateBank load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
    nlohmann::json to_json() const;
    static TemplateBank from_json(const nlohmann::json& j);
};

inline const std::string kCanonicalFerPrompt = "Please describe the expression in this face.";
inline const std::string kCanonicalAudPrompt = "Please describe the action units in this face.";

/// Built-in bank; the same content ships as config/templates.json.
const TemplateBank& default_template_bank();

/// Sentences that mention AUs, stably ordered by their smallest AU, followed
/// by the remaining sentences in their original order.
std::string reorder_reasoning(const std::string& text);

/// One record per type. Questions are drawn uniformly from the bank with a
/// stream derived from (seed, image_id).
std::array<InstructionRecord, 3> make_instructions(const StructuredDescription& desc, const AnnotationRecord& record,
                                                   const TemplateBank& bank, std::uint64_t seed);

/// Subjects placed on the evaluation side: visited largest first (ties in a
/// seed-shuffled order), each added only when it moves the evaluation size
/// closer to `target`.
std::set<std::string> choose_eval_subjects(const std::map<std::string, std::size_t>& subject_sizes,
                                           std::size_t target, std::uint64_t seed);

template <typename R>
struct DatasetSplit {
    std::vector<R> train;
    std::vector<R> eval;
};

/// Subject-disjoint partition of records carrying a `subject_id` member.
template <typename R>
DatasetSplit<R> split_dataset(const std::vector<R>& records, std::size_t eval_count, std::uint64_t seed) {
    std::map<std::string, std::size_t> sizes;
    for (const auto& r : records) {
        require(!r.subject_id.empty(), ErrorKind::Validation, "split_dataset: record without a subject id");
        ++sizes[r.subject_id];
    }
    require(sizes.size() >= 2, ErrorKind::Validation,
            "split_dataset: need at least two subjects for a subject-disjoint split, got " +
                std::to_string(sizes.size()));
    const auto eval_subjects = choose_eval_subjects(sizes, eval_count, seed);
    DatasetSplit<R> out;
    for (const auto& r : records) (eval_subjects.contains(r.subject_id) ? out.eval : out.train).push_back(r);
    return out;
}

}  // namespace fea::data
