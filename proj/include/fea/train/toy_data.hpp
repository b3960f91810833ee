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

#include "fea/data/labels.hpp"
#include "fea/train/trainer.hpp"
#include "fea/vision/region_cropper.hpp"

namespace fea::train {

/// Procedural face: a tinted oval with one mark per active AU at that AU's
/// facial location. Deterministic in (aus, seed).
vision::Image<double> render_face(const data::AuSet& aus, std::uint64_t seed, std::size_t side = 64);

struct ToySample {
    std::string image_id;
    data::Expression fe = data::Expression::Neutral;
    data::AuSet aus;
    vision::Image<double> image;
    std::string question;
    std::string answer;
};

/// "<Label>. Activated action units: AU6, AU12." ("none" when empty).
std::string toy_answer(data::Expression fe, const data::AuSet& aus);

/// Eight labelled faces that together cover all twelve AUs and all seven
/// expressions. Every sample uses the canonical expression prompt, so only
/// the image tells them apart.
std::vector<ToySample> toy_corpus(std::uint64_t seed = 0);

/// Stage-1 alignment pairs: a face with random AUs and a caption listing them.
std::vector<ToySample> caption_corpus(std::size_t count, std::uint64_t seed);

struct WarmupText {
    std::string question;
    std::string answer;
    /// The label and AU names the answer restates, e.g. "Fear AU1 AU4".
    std::string context;
};

/// Answers in the toy format with random labels and AU sets (at most
/// `max_aus` AUs each), for warming up the base language model.
std::vector<WarmupText> warmup_text(std::size_t count, std::uint64_t seed, std::size_t max_aus = 8);

/// Every question and answer, for building a tokenizer.
std::vector<std::string> corpus_text(const std::vector<ToySample>& samples);

inline constexpr std::size_t kToyCaptionCount = 32;
inline constexpr std::uint64_t kToyCaptionSeed = 1;

/// Vocabulary of toy_corpus(0) plus the default caption set.
Tokenizer toy_tokenizer();

/// Warmup examples whose contexts fit the bundle's visual rows.
template <typename T>
std::vector<TrainingExample<T>> toy_warmup_examples(const Tokenizer& tok, const BundleConfig& cfg,
                                                    std::size_t count = 256, std::uint64_t seed = 11);

}  // namespace fea::train
