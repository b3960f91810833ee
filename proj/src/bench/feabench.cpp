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

#include "fea/bench/feabench.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "fea/common/rng.hpp"

namespace fea::bench {

std::string_view to_string(TaskKind t) { return t == TaskKind::FER ? "fer" : "aud"; }

TaskKind parse_task(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "fer") return TaskKind::FER;
    if (lower == "aud") return TaskKind::AUD;
    fail(ErrorKind::Parse, "unknown task '" + std::string(s) + "' (expected fer or aud)");
}

data::InstructionType template_type(TaskKind t) {
    return t == TaskKind::FER ? data::InstructionType::Summary : data::InstructionType::Movement;
}

void EvalTask::validate() const {
    require(vocabulary.subset_of(AuSet::fea_vocabulary()), ErrorKind::Validation,
            "task vocabulary " + data::render_aus(vocabulary) + " is not within the twelve annotated AUs");
    if (kind == TaskKind::AUD) require(!vocabulary.empty(), ErrorKind::Validation, "AUD task with empty vocabulary");
}

std::string sample_prompt(const std::vector<std::string>& questions, std::uint64_t seed) {
    require(!questions.empty(), ErrorKind::Validation, "sample_prompt: empty question bank");
    Rng rng(seed);
    return questions[rng.index(questions.size())];
}

std::string sample_prompt(TaskKind task, const data::TemplateBank& bank, std::uint64_t seed) {
    const auto it = bank.questions.find(template_type(task));
    require(it != bank.questions.end(), ErrorKind::Validation,
            "sample_prompt: no templates for task " + std::string(to_string(task)));
    return sample_prompt(it->second, seed);
}

std::optional<Expression> extract_fe(std::string_view text) {
    const auto mentions = data::find_expression_mentions(text);
    if (mentions.empty()) return std::nullopt;
    return mentions.front().fe;
}

AuSet extract_aus(const std::string& text, const AuSet& vocabulary) {
    AuSet out;
    for (int au : data::find_au_tokens(text))
        if (au <= data::kMaxAu && vocabulary.contains(au)) out.insert(au);
    return out;
}

double score_fer(const std::vector<std::optional<Expression>>& predictions, const std::vector<Expression>& truth) {
    require(predictions.size() == truth.size(), ErrorKind::Validation,
            "score_fer: " + std::to_string(predictions.size()) + " predictions for " + std::to_string(truth.size()) +
                " labels");
    require(!truth.empty(), ErrorKind::Validation, "score_fer: no samples");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (predictions[i] && *predictions[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

AuMetrics au_metrics(int au, std::size_t tp, std::size_t fp, std::size_t fn) {
    AuMetrics m{au, tp, fp, fn};
    const auto ratio = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    if (m.precision + m.recall == 0.0) {
        m.degenerate = true;
        m.f1 = 0.0;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

double macro_average(const std::vector<double>& values) {
    require(!values.empty(), ErrorKind::Validation, "macro_average: no values");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

MetricsReport score_aud(const std::vector<AuSet>& predictions, const std::vector<AuSet>& truth,
                        const AuSet& vocabulary) {
    require(predictions.size() == truth.size(), ErrorKind::Validation,
            "score_aud: " + std::to_string(predictions.size()) + " predictions for " + std::to_string(truth.size()) +
                " labels");
    require(!vocabulary.empty(), ErrorKind::Validation, "score_aud: empty vocabulary");
    MetricsReport report;
    report.aud_samples = truth.size();
    std::vector<double> f1s;
    for (int au : vocabulary.values()) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool p = predictions[i].contains(au), t = truth[i].contains(au);
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
        }
        report.per_au.push_back(au_metrics(au, tp, fp, fn));
        f1s.push_back(report.per_au.back().f1);
    }
    report.macro_f1 = macro_average(f1s);
    report.validate();
    return report;
}

void MetricsReport::validate() const {
    const auto unit = [](double v, const std::string& what) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::Validation, what + " outside [0, 1]: " + std::to_string(v));
    };
    if (accuracy) unit(*accuracy, "accuracy");
    require(no_prediction <= fer_samples, ErrorKind::Validation, "more missing predictions than FER samples");
    std::vector<double> f1s;
    for (const auto& m : per_au) {
        const std::string tag = "AU" + std::to_string(m.au);
        unit(m.precision, tag + " precision");
        unit(m.recall, tag + " recall");
        unit(m.f1, tag + " F1");
        f1s.push_back(m.f1);
    }
    require(macro_f1.has_value() == !per_au.empty(), ErrorKind::Validation, "macro F1 present without per-AU rows");
    if (macro_f1)
        require(std::abs(*macro_f1 - macro_average(f1s)) <= 1e-9, ErrorKind::Validation,
                "macro F1 does not equal the mean of per-AU F1");
}

const AuMetrics& MetricsReport::au(int k) const {
    for (const auto& m : per_au)
        if (m.au == k) return m;
    fail(ErrorKind::Validation, "AU" + std::to_string(k) + " is not in this report");
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json j;
    j["fer_samples"] = fer_samples;
    j["no_prediction"] = no_prediction;
    j["accuracy"] = accuracy ? nlohmann::json(*accuracy) : nlohmann::json(nullptr);
    j["aud_samples"] = aud_samples;
    j["macro_f1"] = macro_f1 ? nlohmann::json(*macro_f1) : nlohmann::json(nullptr);
    auto rows = nlohmann::json::array();
    for (const auto& m : per_au)
        rows.push_back({{"au", m.au},
                        {"tp", m.tp},
                        {"fp", m.fp},
                        {"fn", m.fn},
                        {"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1},
                        {"degenerate", m.degenerate}});
    j["per_au"] = rows;
    return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
    try {
        MetricsReport r;
        r.fer_samples = j.at("fer_samples").get<std::size_t>();
        r.no_prediction = j.at("no_prediction").get<std::size_t>();
        if (!j.at("accuracy").is_null()) r.accuracy = j["accuracy"].get<double>();
        r.aud_samples = j.at("aud_samples").get<std::size_t>();
        if (!j.at("macro_f1").is_null()) r.macro_f1 = j["macro_f1"].get<double>();
        for (const auto& row : j.at("per_au")) {
            AuMetrics m;
            m.au = row.at("au").get<int>();
            m.tp = row.at("tp").get<std::size_t>();
            m.fp = row.at("fp").get<std::size_t>();
            m.fn = row.at("fn").get<std::size_t>();
            m.precision = row.at("precision").get<double>();
            m.recall = row.at("recall").get<double>();
            m.f1 = row.at("f1").get<double>();
            m.degenerate = row.at("degenerate").get<bool>();
            r.per_au.push_back(m);
        }
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("metrics report: ") + e.what());
    }
}

namespace {

std::string percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return buf;
}

}  // namespace

std::string MetricsReport::render_table() const {
    std::vector<std::string> head, cells;
    if (accuracy) {
        head.emplace_back("Acc.");
        cells.push_back(percent(*accuracy));
    }
    for (const auto& m : per_au) {
        head.push_back("AU" + std::to_string(m.au));
        cells.push_back(percent(m.f1));
    }
    if (macro_f1) {
        head.emplace_back("Avg.");
        cells.push_back(percent(*macro_f1));
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < head.size(); ++i) {
        const std::size_t w = std::max(head[i].size(), cells[i].size());
        out << (i ? " | " : "") << std::string(w - head[i].size(), ' ') << head[i];
    }
    out << '\n';
    for (std::size_t i = 0; i < head.size(); ++i) {
        const std::size_t w = std::max(head[i].size(), cells[i].size());
        out << (i ? " | " : "") << std::string(w - cells[i].size(), ' ') << cells[i];
    }
    out << '\n';
    return out.str();
}

AuSet filter_shared_aus(const AuSet& dataset_vocab, const AuSet& model_vocab) {
    const AuSet shared = dataset_vocab & model_vocab;
    require(!shared.empty(), ErrorKind::Validation,
            "no shared AUs between dataset " + data::render_aus(dataset_vocab) + " and model " +
                data::render_aus(model_vocab));
    return shared;
}

bool DatasetAdapter::supports(TaskKind t) const { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); }

const std::vector<std::string>& adapter_names() {
    static const std::vector<std::string> names{"feabench", "rafdb", "affectnet", "bp4d", "disfa"};
    return names;
}

DatasetAdapter adapter_by_name(std::string_view name) {
    if (name == "feabench") return {"feabench", {TaskKind::FER, TaskKind::AUD}, AuSet::fea_vocabulary(), false, 1.0};
    if (name == "rafdb") return {"rafdb", {TaskKind::FER}, AuSet{}, false, 1.0};
    if (name == "affectnet") return {"affectnet", {TaskKind::FER}, AuSet{}, false, 1.0};
    if (name == "bp4d")
        return {"bp4d", {TaskKind::AUD}, AuSet{1, 2, 4, 6, 7, 10, 12, 14, 15, 17, 23, 24}, true, 0.02};
    if (name == "disfa") return {"disfa", {TaskKind::AUD}, AuSet{1, 2, 4, 5, 6, 9, 12, 25, 26}, true, 0.02};
    fail(ErrorKind::Config, "unknown dataset adapter '" + std::string(name) + "'");
}

nlohmann::json to_json(const ResponseRecord& r) {
    return {{"image_id", r.image_id},
            {"task", std::string(to_string(r.task))},
            {"prompt", r.prompt},
            {"response_text", r.response_text}};
}

ResponseRecord response_from_json(const nlohmann::json& j) {
    try {
        ResponseRecord r{j.at("image_id").get<std::string>(), parse_task(j.at("task").get<std::string>()),
                         j.at("prompt").get<std::string>(), j.at("response_text").get<std::string>()};
        require(!r.image_id.empty(), ErrorKind::Parse, "response record without image_id");
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("response record: ") + e.what());
    }
}

std::vector<ResponseRecord> read_responses(const std::filesystem::path& path) {
    std::vector<ResponseRecord> out;
    for (const auto& row : data::read_jsonl(path)) out.push_back(response_from_json(row));
    return out;
}

void write_responses(const std::filesystem::path& path, const std::vector<ResponseRecord>& rows) {
    std::vector<nlohmann::json> lines;
    for (const auto& r : rows) lines.push_back(to_json(r));
    data::write_jsonl(path, lines);
}

MetricsReport score_responses(const std::vector<ResponseRecord>& responses,
                              const std::vector<data::AnnotationRecord>& truth, const AuSet& vocabulary) {
    std::map<std::string, const data::AnnotationRecord*> by_id;
    for (const auto& r : truth)
        require(by_id.emplace(r.image_id, &r).second, ErrorKind::Validation,
                "duplicate ground-truth image id " + r.image_id);

    std::vector<std::optional<Expression>> fer_pred;
    std::vector<Expression> fer_truth;
    std::vector<AuSet> aud_pred, aud_truth;
    std::map<std::pair<std::string, TaskKind>, bool> seen;
    for (const auto& resp : responses) {
        const auto it = by_id.find(resp.image_id);
        require(it != by_id.end(), ErrorKind::Validation, "response for unknown image " + resp.image_id);
        require(seen.emplace(std::pair{resp.image_id, resp.task}, true).second, ErrorKind::Validation,
                "two " + std::string(to_string(resp.task)) + " responses for image " + resp.image_id);
        if (resp.task == TaskKind::FER) {
            fer_pred.push_back(extract_fe(resp.response_text));
            fer_truth.push_back(it->second->fe_label);
        } else {
            aud_pred.push_back(extract_aus(resp.response_text, vocabulary));
            aud_truth.push_back(it->second->au_set & vocabulary);
        }
    }

    MetricsReport report;
    if (!aud_truth.empty()) report = score_aud(aud_pred, aud_truth, vocabulary);
    if (!fer_truth.empty()) {
        report.accuracy = score_fer(fer_pred, fer_truth);
        report.fer_samples = fer_truth.size();
        report.no_prediction =
            static_cast<std::size_t>(std::count(fer_pred.begin(), fer_pred.end(), std::nullopt));
    }
    report.validate();
    return report;
}

}  // namespace fea::bench
