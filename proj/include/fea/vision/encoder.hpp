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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fea/vision/region_cropper.hpp"

namespace fea::vision {

/// Where and how a visual encoder is tapped.
struct EncoderSpec {
    std::size_t grid = 3;          // g; the encoder emits N = g² tokens per map
    std::size_t channels = 8;      // c
    std::size_t total_layers = 24;
    std::vector<std::size_t> taps{3, 8, 13, 18, 23};  // shallow layers, then the deep layer
    std::uint64_t seed = 7;

    std::size_t tokens() const { return grid * grid; }
    std::size_t levels() const { return taps.size(); }
    /// Taps strictly increasing and below total_layers; grid, channels > 0.
    void validate() const;
};

/// L feature maps of shape (N, c); the last one is the deep map.
template <typename T>
struct FeaturePyramid {
    std::vector<nn::Tensor<T>> maps;

    std::size_t levels() const { return maps.size(); }
    std::size_t tokens() const { return maps.empty() ? 0 : maps.front().rows(); }
    std::size_t channels() const { return maps.empty() ? 0 : maps.front().cols(); }
    const nn::Tensor<T>& deep() const { return maps.back(); }

    /// At least two maps, identical (N, c) shapes, finite entries.
    void validate() const;
};

/// Adapter seam: anything that turns an image into a FeaturePyramid with a
/// fixed layout. A pretrained ViT wrapper implements this same interface.
template <typename T>
class VisualEncoder {
public:
    virtual ~VisualEncoder() = default;
    virtual FeaturePyramid<T> encode(const Image<T>& image) const = 0;
    virtual const EncoderSpec& spec() const = 0;
};

/// Deterministic, linear, untrained stand-in for a vision transformer.
/// Per-patch channel means are lifted to c channels by a seed-derived random
/// projection, then each tap applies its own fixed orthogonal c×c mixing.
template <typename T>
class SyntheticEncoder final : public VisualEncoder<T> {
public:
    explicit SyntheticEncoder(EncoderSpec spec);

    FeaturePyramid<T> encode(const Image<T>& image) const override;
    const EncoderSpec& spec() const override { return spec_; }

    /// (g², 3) per-patch channel means; patch i spans rows
    /// [floor(i·H/g), floor((i+1)·H/g)), likewise for columns.
    nn::Tensor<T> patch_means(const Image<T>& image) const;

    const nn::Tensor<T>& projection() const { return projection_; }
    const std::vector<nn::Tensor<T>>& mixings() const { return mixings_; }

private:
    EncoderSpec spec_;
    nn::Tensor<T> projection_;            // (3, c)
    std::vector<nn::Tensor<T>> mixings_;  // per tap, (c, c) orthogonal
};

}  // namespace fea::vision
