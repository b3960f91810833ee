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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fea/common/error.hpp"
#include "fea/data/annotations.hpp"
#include "fea/data/instructions.hpp"
#include "fea/data/labels.hpp"
#include "json.hpp"

namespace fea::bench {

using data::AuSet;
using data::Expression;

enum class TaskKind { FER, AUD };

std::string_view to_string(TaskKind t);
/// "fer" / "aud", case-insensitive.
TaskKind parse_task(std::string_view s);

/// FER questions come from the summary templates, AUD from the movement ones.
data::InstructionType template_type(TaskKind t);

struct EvalTask {
    TaskKind kind = TaskKind::FER;
    AuSet vocabulary = AuSet::fea_vocabulary();

    void validate() const;
};

/// Uniform draw from a question list; throws Validation when it is empty.
std::string sample_prompt(const std::vector<std::string>& questions, std::uint64_t seed);
std::string sample_prompt(TaskKind task, const data::TemplateBank& bank, std::uint64_t seed);

/// Earliest class name or inflection in the text, or nothing.
std::optional<Expression> extract_fe(std::string_view text);

/// AU mentions ("AU12", "au 4") restricted to the vocabulary. Negation is not
/// understood: "no AU4" still yields AU4.
AuSet extract_aus(const std::string& text, const AuSet& vocabulary = AuSet::fea_vocabulary());

double score_fer(const std::vector<std::optional<Expression>>& predictions, const std::vector<Expression>& truth);

struct AuMetrics {
    int au = 0;
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0, f1 = 0;
    /// Some denominator was zero and the affected quantity was set to 0.
    bool degenerate = false;
};

/// Precision, recall and F1 from counts; zero denominators give 0 and set the flag.
AuMetrics au_metrics(int au, std::size_t tp, std::size_t fp, std::size_t fn);

/// Unweighted mean; throws Validation on an empty list.
double macro_average(const std::vector<double>& values);

struct MetricsReport {
    std::optional<double> accuracy;
    std::size_t fer_samples = 0;
    std::size_t no_prediction = 0;

    std::vector<AuMetrics> per_au;
    std::optional<double> macro_f1;
    std::size_t aud_samples = 0;

    /// Bounds on every metric and macro_f1 = mean of per-AU F1 to 1e-9.
    void validate() const;
    const AuMetrics& au(int k) const;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    /// Percentages to two decimals: Acc., then AU columns ascending, then Avg.
    std::string render_table() const;
};

MetricsReport score_aud(const std::vector<AuSet>& predictions, const std::vector<AuSet>& truth,
                        const AuSet& vocabulary = AuSet::fea_vocabulary());

/// Keeps every round(1/rate)-th element starting from the first.
template <typename T>
std::vector<T> uniform_sample(const std::vector<T>& frames, double rate) {
    require(rate > 0.0 && rate <= 1.0 && std::isfinite(rate), ErrorKind::Validation,
            "uniform_sample: rate must lie in (0, 1], got " + std::to_string(rate));
    const auto stride = static_cast<std::size_t>(std::llround(1.0 / rate));
    std::vector<T> out;
    for (std::size_t i = 0; i < frames.size(); i += stride) out.push_back(frames[i]);
    return out;
}

/// Intersection of the two vocabularies; throws Validation when empty.
AuSet filter_shared_aus(const AuSet& dataset_vocab, const AuSet& model_vocab = AuSet::fea_vocabulary());

/// How an evaluation dataset is scored.
struct DatasetAdapter {
    std::string name;
    std::vector<TaskKind> tasks;
    /// AUs annotated by the dataset; intersected with the model vocabulary.
    AuSet vocabulary;
    /// Video datasets are subsampled per sequence before scoring.
    bool frame_sequential = false;
    double sample_rate = 1.0;

    bool supports(TaskKind t) const;
};

/// feabench, rafdb, affectnet, bp4d, disfa. Throws Config on other names.
DatasetAdapter adapter_by_name(std::string_view name);
const std::vector<std::string>& adapter_names();

/// One line of a responses file.
struct ResponseRecord {
    std::string image_id;
    TaskKind task = TaskKind::FER;
    std::string prompt;
    std::string response_text;

    friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

nlohmann::json to_json(const ResponseRecord& r);
ResponseRecord response_from_json(const nlohmann::json& j);
std::vector<ResponseRecord> read_responses(const std::filesystem::path& path);
void write_responses(const std::filesystem::path& path, const std::vector<ResponseRecord>& rows);

/// Extracts and scores every response against the annotation with the same
/// image id. Unknown ids and duplicate (image, task) pairs are rejected.
MetricsReport score_responses(const std::vector<ResponseRecord>& responses,
                              const std::vector<data::AnnotationRecord>& truth, const AuSet& vocabulary);

}  // namespace fea::bench
