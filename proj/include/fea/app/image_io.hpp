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

#include <filesystem>
#include <string>

#include "fea/vision/region_cropper.hpp"

namespace fea::app {

/// Decodes any format OpenCV reads into an RGB (H, W, 3) image in [0, 1].
/// Missing files throw Config; undecodable ones throw Parse.
vision::Image<double> load_image(const std::filesystem::path& path);

/// Writes 8-bit RGB; the format follows the extension.
void save_image(const std::filesystem::path& path, const vision::Image<double>& image);

/// `<dir>/<image_id>` with the first of .png, .jpg, .jpeg, .bmp that exists.
std::filesystem::path find_image(const std::filesystem::path& dir, const std::string& image_id);

}  // namespace fea::app
