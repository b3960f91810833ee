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

#include "fea/vision/region_cropper.hpp"

#include <cmath>

namespace fea::vision {

template <typename T>
void validate_image(const Image<T>& image) {
    require(image.rank() == 3 && image.dim(2) == kImageChannels, ErrorKind::Validation,
            "image must be (height, width, 3), got " + nn::shape_str(image.shape()));
    require(image.dim(0) >= kMinImageSide && image.dim(1) >= kMinImageSide, ErrorKind::Validation,
            "image must be at least 4x4, got " + nn::shape_str(image.shape()));
    for (T v : image.data()) {
        if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "image contains a non-finite value");
        if (v < T(0) || v > T(1)) fail(ErrorKind::Validation, "image values must lie in [0, 1]");
    }
}

const char* to_string(Direction d) {
    switch (d) {
        case Direction::Top: return "top";
        case Direction::Bottom: return "bottom";
        case Direction::Left: return "left";
        case Direction::Right: return "right";
        case Direction::TopLeft: return "top-left";
        case Direction::TopRight: return "top-right";
        case Direction::BottomLeft: return "bottom-left";
        case Direction::BottomRight: return "bottom-right";
    }
    return "?";
}

const char* to_string(Fraction f) { return f == Fraction::Half ? "1-2" : "3-4"; }

std::string label(const CropSpec& spec) {
    return std::string(to_string(spec.direction)) + "_" + to_string(spec.fraction);
}

const std::array<CropSpec, kRegionCount>& canonical_crop_specs() {
    static const std::array<CropSpec, kRegionCount> specs = [] {
        std::array<CropSpec, kRegionCount> out{};
        const Direction order[] = {Direction::Top,     Direction::Bottom,   Direction::Left,
                                   Direction::Right,   Direction::TopLeft,  Direction::TopRight,
                                   Direction::BottomLeft, Direction::BottomRight};
        std::size_t i = 0;
        for (Direction d : order) {
            out[i++] = {d, Fraction::Half};
            out[i++] = {d, Fraction::ThreeQuarters};
        }
        return out;
    }();
    return specs;
}

CropSpec mirror_horizontal(const CropSpec& spec) {
    Direction d = spec.direction;
    switch (d) {
        case Direction::Left: d = Direction::Right; break;
        case Direction::Right: d = Direction::Left; break;
        case Direction::TopLeft: d = Direction::TopRight; break;
        case Direction::TopRight: d = Direction::TopLeft; break;
        case Direction::BottomLeft: d = Direction::BottomRight; break;
        case Direction::BottomRight: d = Direction::BottomLeft; break;
        default: break;
    }
    return {d, spec.fraction};
}

CropSpec mirror_vertical(const CropSpec& spec) {
    Direction d = spec.direction;
    switch (d) {
        case Direction::Top: d = Direction::Bottom; break;
        case Direction::Bottom: d = Direction::Top; break;
        case Direction::TopLeft: d = Direction::BottomLeft; break;
        case Direction::BottomLeft: d = Direction::TopLeft; break;
        case Direction::TopRight: d = Direction::BottomRight; break;
        case Direction::BottomRight: d = Direction::TopRight; break;
        default: break;
    }
    return {d, spec.fraction};
}

namespace {

std::size_t scaled_extent(std::size_t side, Fraction f) {
    return f == Fraction::Half ? side / 2 : (3 * side) / 4;
}

}  // namespace

Window crop_window(std::size_t height, std::size_t width, const CropSpec& spec, CropMode mode) {
    const std::size_t h = scaled_extent(height, spec.fraction);
    const std::size_t w = scaled_extent(width, spec.fraction);
    require(h >= 1 && w >= 1, ErrorKind::Validation,
            "crop " + label(spec) + " is empty on a " + std::to_string(height) + "x" + std::to_string(width) +
                " image");

    const std::size_t top = 0, bottom = height - h, left = 0, right = width - w;
    const std::size_t mid_row = (height - h) / 2, mid_col = (width - w) / 2;
    const bool strip = mode == CropMode::Strip;

    auto rows = [&](std::size_t begin, std::size_t extent) { return std::pair{begin, begin + extent}; };
    std::pair<std::size_t, std::size_t> r, c;
    switch (spec.direction) {
        case Direction::Top:
            r = rows(top, h);
            c = strip ? rows(0, width) : rows(mid_col, w);
            break;
        case Direction::Bottom:
            r = rows(bottom, h);
            c = strip ? rows(0, width) : rows(mid_col, w);
            break;
        case Direction::Left:
            r = strip ? rows(0, height) : rows(mid_row, h);
            c = rows(left, w);
            break;
        case Direction::Right:
            r = strip ? rows(0, height) : rows(mid_row, h);
            c = rows(right, w);
            break;
        case Direction::TopLeft: r = rows(top, h); c = rows(left, w); break;
        case Direction::TopRight: r = rows(top, h); c = rows(right, w); break;
        case Direction::BottomLeft: r = rows(bottom, h); c = rows(left, w); break;
        case Direction::BottomRight: r = rows(bottom, h); c = rows(right, w); break;
    }
    return Window{r.first, r.second, c.first, c.second};
}

template <typename T>
Image<T> crop_region(const Image<T>& image, const CropSpec& spec, CropMode mode) {
    validate_image(image);
    const Window win = crop_window(image.dim(0), image.dim(1), spec, mode);
    Image<T> out({win.height(), win.width(), kImageChannels});
    for (std::size_t y = 0; y < win.height(); ++y)
        for (std::size_t x = 0; x < win.width(); ++x)
            for (std::size_t ch = 0; ch < kImageChannels; ++ch)
                out(y, x, ch) = image(win.row_begin + y, win.col_begin + x, ch);
    return out;
}

template <typename T>
Image<T> resize_bilinear(const Image<T>& window, std::size_t out_height, std::size_t out_width) {
    require(window.rank() == 3, ErrorKind::Shape, "resize_bilinear expects an (H, W, C) window");
    const std::size_t H = window.dim(0), W = window.dim(1), C = window.dim(2);
    Image<T> out({out_height, out_width, C});

    // Corner-aligned source coordinate; i·(in−1)/(out−1) is exact for
    // integral i when in == out, which makes same-size resizes the identity.
    auto source = [](std::size_t i, std::size_t in, std::size_t outn) {
        if (in == 1 || outn == 1) return 0.0;
        return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(outn - 1);
    };

    for (std::size_t oy = 0; oy < out_height; ++oy) {
        const double sy = source(oy, H, out_height);
        const std::size_t y0 = std::min(static_cast<std::size_t>(sy), H - 1);
        const std::size_t y1 = std::min(y0 + 1, H - 1);
        const T fy = static_cast<T>(sy - static_cast<double>(y0));
        for (std::size_t ox = 0; ox < out_width; ++ox) {
            const double sx = source(ox, W, out_width);
            const std::size_t x0 = std::min(static_cast<std::size_t>(sx), W - 1);
            const std::size_t x1 = std::min(x0 + 1, W - 1);
            const T fx = static_cast<T>(sx - static_cast<double>(x0));
            for (std::size_t ch = 0; ch < C; ++ch) {
                // a + f·(b − a) form: equal corners reproduce the value exactly.
                const T a = window(y0, x0, ch), b = window(y0, x1, ch);
                const T c = window(y1, x0, ch), d = window(y1, x1, ch);
                const T top = a + fx * (b - a);
                const T bottom = c + fx * (d - c);
                out(oy, ox, ch) = top + fy * (bottom - top);
            }
        }
    }
    return out;
}

template <typename T>
LocalRegionSet<T> crop_regions(const Image<T>& image, CropMode mode) {
    validate_image(image);
    LocalRegionSet<T> set;
    set.regions.reserve(kRegionCount);
    set.specs.reserve(kRegionCount);
    for (const CropSpec& spec : canonical_crop_specs()) {
        set.regions.push_back(resize_bilinear(crop_region(image, spec, mode)));
        set.specs.push_back(spec);
    }
    return set;
}

#define FEA_INSTANTIATE_CROPPER(T)                                                   \
    template void validate_image(const Image<T>&);                                   \
    template Image<T> crop_region(const Image<T>&, const CropSpec&, CropMode);       \
    template Image<T> resize_bilinear(const Image<T>&, std::size_t, std::size_t);    \
    template LocalRegionSet<T> crop_regions(const Image<T>&, CropMode);

FEA_INSTANTIATE_CROPPER(float)
FEA_INSTANTIATE_CROPPER(double)

#undef FEA_INSTANTIATE_CROPPER

}  // namespace fea::vision
