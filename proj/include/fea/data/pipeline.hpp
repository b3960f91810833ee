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

#include <cstdint>
#include <string>
#include <vector>

#include "fea/data/generation.hpp"
#include "fea/data/instructions.hpp"

namespace fea::data {

struct QuarantineEntry {
    std::string image_id;
    std::vector<std::string> reasons;
    std::string response;
};

nlohmann::json to_json(const QuarantineEntry& q);

struct ClientFailure {
    std::string image_id;
    std::string message;
};

struct DatasetBuildResult {
    std::vector<InstructionRecord> instructions;  // annotation order, 3 per validated image
    std::vector<std::string> validated;           // image ids
    std::vector<QuarantineEntry> quarantined;     // parse or consistency failures
    std::vector<ClientFailure> failures;          // generation failed after retries

    /// validated + quarantined + failed == input size.
    bool conserved(std::size_t input_size) const {
        return validated.size() + quarantined.size() + failures.size() == input_size;
    }
};

/// Prompt → generate → parse → validate → instructions for every record,
/// with up to `jobs` records in flight. Results are collected in input order.
DatasetBuildResult build_dataset(const std::vector<AnnotationRecord>& annotations, TextGenerator& generator,
                                 const TemplateBank& bank, std::uint64_t seed, std::size_t jobs = 1);

}  // namespace fea::data
