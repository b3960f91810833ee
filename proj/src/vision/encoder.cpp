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

#include "fea/vision/encoder.hpp"

#include <cmath>

#include "fea/common/rng.hpp"
#include "fea/nn/ops.hpp"

namespace fea::vision {

void EncoderSpec::validate() const {
    require(grid > 0 && channels > 0, ErrorKind::Config, "encoder grid and channel width must be positive");
    require(taps.size() >= 2, ErrorKind::Config, "encoder needs at least one shallow tap and one deep tap");
    for (std::size_t i = 0; i < taps.size(); ++i) {
        require(taps[i] < total_layers, ErrorKind::Config,
                "encoder tap " + std::to_string(taps[i]) + " is beyond layer count " + std::to_string(total_layers));
        require(i == 0 || taps[i] > taps[i - 1], ErrorKind::Config, "encoder taps must be strictly increasing");
    }
}

template <typename T>
void FeaturePyramid<T>::validate() const {
    require(maps.size() >= 2, ErrorKind::Validation, "feature pyramid needs at least two maps");
    for (const auto& m : maps) {
        require(m.rank() == 2 && m.shape() == maps.front().shape(), ErrorKind::Shape,
                "feature pyramid maps must share one (N, c) shape");
        nn::require_finite(m, "feature pyramid");
    }
}

namespace {

// Gram-Schmidt on a Gaussian matrix, accumulated in double.
std::vector<double> random_orthogonal(std::size_t n, Rng& rng) {
    std::vector<double> q(n * n);
    for (auto& v : q) v = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
        double* row = &q[i * n];
        for (std::size_t j = 0; j < i; ++j) {
            const double* prev = &q[j * n];
            double dot = 0;
            for (std::size_t k = 0; k < n; ++k) dot += row[k] * prev[k];
            for (std::size_t k = 0; k < n; ++k) row[k] -= dot * prev[k];
        }
        double norm = 0;
        for (std::size_t k = 0; k < n; ++k) norm += row[k] * row[k];
        norm = std::sqrt(norm);
        for (std::size_t k = 0; k < n; ++k) row[k] /= norm;
    }
    return q;
}

}  // namespace

template <typename T>
SyntheticEncoder<T>::SyntheticEncoder(EncoderSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Rng rng(Rng::mix(spec_.seed, 0x656e63));
    const std::size_t c = spec_.channels;
    projection_ = nn::Tensor<T>({kImageChannels, c});
    for (auto& v : projection_.data()) v = static_cast<T>(rng.normal() / std::sqrt(3.0));
    for (std::size_t t = 0; t < spec_.taps.size(); ++t) {
        Rng tap_rng(Rng::mix(spec_.seed, 1000 + spec_.taps[t]));
        auto q = random_orthogonal(c, tap_rng);
        mixings_.emplace_back(nn::Shape{c, c}, std::vector<T>(q.begin(), q.end()));
    }
}

template <typename T>
nn::Tensor<T> SyntheticEncoder<T>::patch_means(const Image<T>& image) const {
    require(image.rank() == 3 && image.dim(2) == kImageChannels, ErrorKind::Validation,
            "encoder expects an (H, W, 3) image");
    const std::size_t H = image.dim(0), W = image.dim(1), g = spec_.grid;
    require(H >= g && W >= g, ErrorKind::Validation,
            "image " + nn::shape_str(image.shape()) + " is smaller than the " + std::to_string(g) + "x" +
                std::to_string(g) + " patch grid");
    nn::Tensor<T> means({g * g, kImageChannels});
    for (std::size_t py = 0; py < g; ++py)
        for (std::size_t px = 0; px < g; ++px) {
            const std::size_t r0 = py * H / g, r1 = (py + 1) * H / g;
            const std::size_t c0 = px * W / g, c1 = (px + 1) * W / g;
            double acc[kImageChannels] = {0, 0, 0};
            for (std::size_t y = r0; y < r1; ++y)
                for (std::size_t x = c0; x < c1; ++x)
                    for (std::size_t ch = 0; ch < kImageChannels; ++ch) acc[ch] += image(y, x, ch);
            const double count = static_cast<double>((r1 - r0) * (c1 - c0));
            for (std::size_t ch = 0; ch < kImageChannels; ++ch)
                means(py * g + px, ch) = static_cast<T>(acc[ch] / count);
        }
    return means;
}

template <typename T>
FeaturePyramid<T> SyntheticEncoder<T>::encode(const Image<T>& image) const {
    const nn::Tensor<T> lifted = nn::ops::matmul(patch_means(image), projection_);
    FeaturePyramid<T> pyramid;
    for (const auto& mix : mixings_) pyramid.maps.push_back(nn::ops::matmul(lifted, mix));
    return pyramid;
}

template struct FeaturePyramid<float>;
template struct FeaturePyramid<double>;
template class SyntheticEncoder<float>;
template class SyntheticEncoder<double>;

}  // namespace fea::vision
