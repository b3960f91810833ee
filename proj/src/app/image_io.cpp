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

#include "fea/app/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fea/common/error.hpp"

namespace fea::app {

namespace fs = std::filesystem;

vision::Image<double> load_image(const fs::path& path) {
    require(fs::is_regular_file(path), ErrorKind::Config, "image " + path.string() + " does not exist");
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    require(!bgr.empty() && bgr.type() == CV_8UC3, ErrorKind::Parse, "cannot decode image " + path.string());
    const auto h = static_cast<std::size_t>(bgr.rows), w = static_cast<std::size_t>(bgr.cols);
    vision::Image<double> img({h, w, vision::kImageChannels});
    for (std::size_t r = 0; r < h; ++r) {
        const auto* px = bgr.ptr<cv::Vec3b>(static_cast<int>(r));
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t k = 0; k < 3; ++k) img(r, c, k) = px[c][2 - k] / 255.0;
    }
    return img;
}

void save_image(const fs::path& path, const vision::Image<double>& image) {
    vision::validate_image(image);
    const auto shape = image.shape();
    cv::Mat bgr(static_cast<int>(shape[0]), static_cast<int>(shape[1]), CV_8UC3);
    for (std::size_t r = 0; r < shape[0]; ++r) {
        auto* px = bgr.ptr<cv::Vec3b>(static_cast<int>(r));
        for (std::size_t c = 0; c < shape[1]; ++c)
            for (std::size_t k = 0; k < 3; ++k)
                px[c][2 - k] = static_cast<unsigned char>(std::lround(std::clamp(image(r, c, k), 0.0, 1.0) * 255.0));
    }
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    require(cv::imwrite(path.string(), bgr), ErrorKind::Config, "cannot write image " + path.string());
}

fs::path find_image(const fs::path& dir, const std::string& image_id) {
    require(image_id.find('/') == std::string::npos && image_id.find('\\') == std::string::npos && image_id != ".." &&
                !image_id.empty(),
            ErrorKind::Validation, "image id '" + image_id + "' cannot be used as a file name");
    for (const char* ext : {".png", ".jpg", ".jpeg", ".bmp"}) {
        const fs::path p = dir / (image_id + ext);
        if (fs::is_regular_file(p)) return p;
    }
    fail(ErrorKind::Config, "no image for '" + image_id + "' in " + dir.string());
}

}  // namespace fea::app
