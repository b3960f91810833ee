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

#include "fea/train/toy_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fea/common/rng.hpp"
#include "fea/data/instructions.hpp"

namespace fea::train {

using data::AuSet;
using data::Expression;

namespace {

struct Mark {
    int au;
    double row, col, h, w;  // fractions of the side
    double r, g, b;
};

// Brows, eyes, nose, mouth corners, lips, jaw.
const std::vector<Mark> kMarks{
    {1, 0.22, 0.30, 0.05, 0.12, 0.20, 0.10, 0.10},  {2, 0.22, 0.58, 0.05, 0.12, 0.10, 0.20, 0.10},
    {4, 0.28, 0.42, 0.05, 0.16, 0.05, 0.05, 0.30},  {6, 0.44, 0.18, 0.08, 0.12, 0.95, 0.40, 0.40},
    {7, 0.34, 0.30, 0.05, 0.40, 0.30, 0.30, 0.05},  {10, 0.55, 0.42, 0.05, 0.16, 0.60, 0.10, 0.60},
    {12, 0.66, 0.22, 0.06, 0.10, 0.90, 0.90, 0.20}, {15, 0.72, 0.68, 0.06, 0.10, 0.20, 0.50, 0.90},
    {23, 0.66, 0.40, 0.04, 0.20, 0.50, 0.00, 0.00}, {24, 0.72, 0.40, 0.04, 0.20, 0.00, 0.50, 0.00},
    {25, 0.69, 0.44, 0.03, 0.12, 0.05, 0.05, 0.05}, {26, 0.82, 0.38, 0.07, 0.24, 0.70, 0.70, 0.95},
};

constexpr std::size_t kPrompts = 6;
constexpr double kMarkScale = 1.6;

}  // namespace

vision::Image<double> render_face(const AuSet& aus, std::uint64_t seed, std::size_t side) {
    require(side >= 16, ErrorKind::Validation, "render_face: side must be at least 16");
    Rng rng(seed);
    const double tint = rng.uniform(-0.08, 0.08);
    vision::Image<double> img({side, side, 3});
    const double s = static_cast<double>(side);
    for (std::size_t y = 0; y < side; ++y)
        for (std::size_t x = 0; x < side; ++x) {
            const double dy = (static_cast<double>(y) + 0.5) / s - 0.5, dx = (static_cast<double>(x) + 0.5) / s - 0.5;
            const bool face = dx * dx / 0.16 + dy * dy / 0.22 <= 1.0;
            const double noise = 0.02 * rng.uniform(-1, 1);
            img(y, x, 0) = face ? 0.80 + tint + noise : 0.15;
            img(y, x, 1) = face ? 0.62 + tint + noise : 0.15;
            img(y, x, 2) = face ? 0.50 + tint + noise : 0.20;
        }
    for (const auto& m : kMarks) {
        if (!aus.contains(m.au)) continue;
        const auto r0 = static_cast<std::size_t>(m.row * s), c0 = static_cast<std::size_t>(m.col * s);
        const auto r1 = std::min(side, r0 + std::max<std::size_t>(1, static_cast<std::size_t>(kMarkScale * m.h * s)));
        const auto c1 = std::min(side, c0 + std::max<std::size_t>(1, static_cast<std::size_t>(kMarkScale * m.w * s)));
        for (std::size_t y = r0; y < r1; ++y)
            for (std::size_t x = c0; x < c1; ++x) {
                img(y, x, 0) = m.r;
                img(y, x, 1) = m.g;
                img(y, x, 2) = m.b;
            }
    }
    for (auto& v : img.data()) v = std::clamp(v, 0.0, 1.0);
    return img;
}

std::string toy_answer(Expression fe, const AuSet& aus) {
    return std::string(data::to_string(fe)) + ". Activated action units: " + data::render_aus(aus) + ".";
}

std::vector<ToySample> toy_corpus(std::uint64_t seed) {
    const std::vector<std::pair<Expression, AuSet>> rows{
        {Expression::Happiness, {6, 12, 25}}, {Expression::Sadness, {1, 4, 15}},
        {Expression::Surprise, {1, 2, 25, 26}}, {Expression::Anger, {4, 7, 23, 24}},
        {Expression::Disgust, {4, 10}},         {Expression::Fear, {1, 2, 4, 7, 25}},
        {Expression::Neutral, {}},              {Expression::Happiness, {6, 7, 12, 26}},
    };
    std::vector<ToySample> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [fe, aus] = rows[i];
        out.push_back({"toy" + std::to_string(i + 1), fe, aus, render_face(aus, Rng::mix(seed, i)),
                       data::kCanonicalFerPrompt, toy_answer(fe, aus)});
    }
    return out;
}

std::vector<ToySample> caption_corpus(std::size_t count, std::uint64_t seed) {
    static const std::array<const char*, kPrompts> prompts{
        "Describe the image.", "What is visible in this picture?", "Give a short caption for this image.",
        "What marks appear on this face?", "Summarize the picture.", "Caption this face."};
    Rng rng(seed);
    std::vector<ToySample> out;
    for (std::size_t i = 0; i < count; ++i) {
        AuSet aus;
        for (int au : data::kFeaAus)
            if (rng.uniform() < 0.3) aus.insert(au);
        out.push_back({"caption" + std::to_string(i + 1), Expression::Neutral, aus,
                       render_face(aus, Rng::mix(seed, 1000 + i)), prompts[rng.index(kPrompts)],
                       "A face with marks for " + data::render_aus(aus) + "."});
    }
    return out;
}

std::vector<WarmupText> warmup_text(std::size_t count, std::uint64_t seed, std::size_t max_aus) {
    Rng rng(seed);
    std::vector<WarmupText> out;
    while (out.size() < count) {
        AuSet aus;
        for (int au : data::kFeaAus)
            if (rng.uniform() < 0.3) aus.insert(au);
        if (aus.size() > max_aus) continue;
        const Expression fe = data::kExpressions[rng.index(data::kExpressions.size())];
        std::string context(data::to_string(fe));
        for (int au : aus.values()) context += " AU" + std::to_string(au);
        if (aus.empty()) context += " none";
        out.push_back({data::kCanonicalFerPrompt, toy_answer(fe, aus), context});
    }
    return out;
}

std::vector<std::string> corpus_text(const std::vector<ToySample>& samples) {
    std::vector<std::string> text;
    for (const auto& s : samples) {
        text.push_back(s.question);
        text.push_back(s.answer);
    }
    return text;
}

Tokenizer toy_tokenizer() {
    auto text = corpus_text(toy_corpus(0));
    const auto captions = corpus_text(caption_corpus(kToyCaptionCount, kToyCaptionSeed));
    text.insert(text.end(), captions.begin(), captions.end());
    return Tokenizer::build(text);
}

template <typename T>
std::vector<TrainingExample<T>> toy_warmup_examples(const Tokenizer& tok, const BundleConfig& cfg, std::size_t count,
                                                    std::uint64_t seed) {
    std::vector<TrainingExample<T>> out;
    for (const auto& w : warmup_text(count, seed, cfg.encoder.tokens()))
        out.push_back(make_text_example<T>(tok, w.question, w.answer, w.context));
    return out;
}

template std::vector<TrainingExample<float>> toy_warmup_examples(const Tokenizer&, const BundleConfig&, std::size_t,
                                                                 std::uint64_t);
template std::vector<TrainingExample<double>> toy_warmup_examples(const Tokenizer&, const BundleConfig&, std::size_t,
                                                                  std::uint64_t);

}  // namespace fea::train
