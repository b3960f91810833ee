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

#include "fea/data/pipeline.hpp"

#include <atomic>
#include <optional>
#include <thread>
#include <variant>

namespace fea::data {

nlohmann::json to_json(const QuarantineEntry& q) {
    return {{"image_id", q.image_id}, {"reasons", q.reasons}, {"response", q.response}};
}

namespace {

struct Outcome {
    std::optional<std::array<InstructionRecord, 3>> records;
    std::optional<QuarantineEntry> quarantine;
    std::optional<ClientFailure> failure;
};

Outcome process(const AnnotationRecord& record, TextGenerator& generator, const TemplateBank& bank,
                std::uint64_t seed) {
    Outcome out;
    std::string response;
    try {
        response = generator.generate({record.image_id, kFormatPreamble, build_generation_prompt(record)});
    } catch (const Error& e) {
        out.failure = ClientFailure{record.image_id, e.what()};
        return out;
    }
    StructuredDescription desc;
    try {
        desc = parse_structured_description(response);
    } catch (const Error& e) {
        out.quarantine = QuarantineEntry{record.image_id, {e.what()}, response};
        return out;
    }
    const ValidationReport report = validate_description(desc, record);
    if (!report.passed()) {
        out.quarantine = QuarantineEntry{record.image_id, report.reasons(), response};
        return out;
    }
    out.records = make_instructions(desc, record, bank, seed);
    return out;
}

}  // namespace

DatasetBuildResult build_dataset(const std::vector<AnnotationRecord>& annotations, TextGenerator& generator,
                                 const TemplateBank& bank, std::uint64_t seed, std::size_t jobs) {
    for (const auto& a : annotations) a.validate();
    std::vector<Outcome> outcomes(annotations.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < annotations.size(); i = next++)
            outcomes[i] = process(annotations[i], generator, bank, seed);
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, annotations.size()));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    DatasetBuildResult result;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& o = outcomes[i];
        if (o.records) {
            result.validated.push_back(annotations[i].image_id);
            for (auto& r : *o.records) result.instructions.push_back(std::move(r));
        } else if (o.quarantine) {
            result.quarantined.push_back(std::move(*o.quarantine));
        } else {
            result.failures.push_back(std::move(*o.failure));
        }
    }
    return result;
}

}  // namespace fea::data
