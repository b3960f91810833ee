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

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "fea/nn/tensor.hpp"

namespace fea::vision {

/// (height, width, 3) float image with values in [0, 1].
template <typename T>
using Image = nn::Tensor<T>;

inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kMinImageSide = 4;
inline constexpr std::size_t kRegionCount = 16;
inline constexpr std::size_t kRegionSide = 48;

/// Checks rank, channel count, minimum extent and the [0, 1] value range.
template <typename T>
void validate_image(const Image<T>& image);

enum class Direction { Top, Bottom, Left, Right, TopLeft, TopRight, BottomLeft, BottomRight };
enum class Fraction { Half, ThreeQuarters };

struct CropSpec {
    Direction direction;
    Fraction fraction;

    friend bool operator==(const CropSpec&, const CropSpec&) = default;
};

/// Edge crops either keep the full perpendicular extent (Strip, the default)
/// or take a centred square-ish window scaled on both axes (Square).
enum class CropMode { Strip, Square };

struct Window {
    std::size_t row_begin = 0, row_end = 0, col_begin = 0, col_end = 0;

    std::size_t height() const { return row_end - row_begin; }
    std::size_t width() const { return col_end - col_begin; }
    friend bool operator==(const Window&, const Window&) = default;
};

const char* to_string(Direction d);
const char* to_string(Fraction f);
/// e.g. "bottom-right_3-4"; used in file names and manifests.
std::string label(const CropSpec& spec);

/// The 16 specs in the frozen order: directions top, bottom, left, right,
/// top-left, top-right, bottom-left, bottom-right; 1/2 before 3/4 within each.
const std::array<CropSpec, kRegionCount>& canonical_crop_specs();

/// Mirror images of a spec: left↔right (horizontal) or top↔bottom (vertical).
CropSpec mirror_horizontal(const CropSpec& spec);
CropSpec mirror_vertical(const CropSpec& spec);

/// Pixel window for a spec on an H×W image. Extents are floor(fraction·side).
/// Throws Validation if either extent is < 1.
Window crop_window(std::size_t height, std::size_t width, const CropSpec& spec, CropMode mode = CropMode::Strip);

/// Copies the window out of the image.
template <typename T>
Image<T> crop_region(const Image<T>& image, const CropSpec& spec, CropMode mode = CropMode::Strip);

/// Bilinear resize with corner-aligned sampling. Constant inputs map to the
/// same constant exactly and a same-size resize is the identity.
template <typename T>
Image<T> resize_bilinear(const Image<T>& window, std::size_t out_height = kRegionSide,
                         std::size_t out_width = kRegionSide);

template <typename T>
struct LocalRegionSet {
    std::vector<Image<T>> regions;  // each (48, 48, 3)
    std::vector<CropSpec> specs;    // parallel to regions
};

/// All 16 regions in canonical order.
template <typename T>
LocalRegionSet<T> crop_regions(const Image<T>& image, CropMode mode = CropMode::Strip);

}  // namespace fea::vision
