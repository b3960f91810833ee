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

#include <filesystem>
#include <string>
#include <vector>

#include "fea/data/labels.hpp"
#include "json.hpp"

namespace fea::data {

/// Ground truth for one face image.
struct AnnotationRecord {
    std::string image_id;
    std::string subject_id;
    Expression fe_label = Expression::Neutral;
    AuSet au_set;

    /// Non-empty ids; AUs restricted to the twelve dataset AUs.
    void validate() const;
    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

nlohmann::json to_json(const AnnotationRecord& r);
/// Throws Parse on missing or mistyped fields, Validation on bad labels.
AnnotationRecord annotation_from_json(const nlohmann::json& j);

/// One JSON object per line; blank lines are skipped. Errors name the line.
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

/// Reads every non-blank line of a JSONL file as a JSON value.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);

}  // namespace fea::data
