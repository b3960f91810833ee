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

#include "fea/data/annotations.hpp"

#include <fstream>

#include "fea/common/error.hpp"

namespace fea::data {

void AnnotationRecord::validate() const {
    require(!image_id.empty(), ErrorKind::Validation, "annotation has an empty image_id");
    require(!subject_id.empty(), ErrorKind::Validation, "annotation '" + image_id + "' has an empty subject_id");
    for (int au : au_set.values())
        require(is_fea_au(au), ErrorKind::Validation,
                "annotation '" + image_id + "' lists AU" + std::to_string(au) + ", which is not annotated");
}

nlohmann::json to_json(const AnnotationRecord& r) {
    return {{"image_id", r.image_id},
            {"subject_id", r.subject_id},
            {"fe_label", std::string(to_string(r.fe_label))},
            {"au_set", r.au_set.values()}};
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Parse, "annotation must be a JSON object");
    AnnotationRecord r;
    try {
        r.image_id = j.at("image_id").get<std::string>();
        r.subject_id = j.at("subject_id").get<std::string>();
        r.fe_label = parse_expression(j.at("fe_label").get<std::string>());
        const auto aus = j.at("au_set").get<std::vector<int>>();
        for (std::size_t i = 0; i < aus.size(); ++i)
            for (std::size_t k = i + 1; k < aus.size(); ++k)
                require(aus[i] != aus[k], ErrorKind::Validation,
                        "annotation '" + r.image_id + "' repeats AU" + std::to_string(aus[i]));
        r.au_set = AuSet(aus);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed annotation: ") + e.what());
    }
    r.validate();
    return r;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Config, "cannot open " + path.string());
    std::vector<nlohmann::json> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            rows.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    require(out.good(), ErrorKind::Config, "cannot write " + path.string());
    for (const auto& row : rows) out << row.dump() << '\n';
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
    std::vector<AnnotationRecord> out;
    std::size_t index = 0;
    for (const auto& row : read_jsonl(path)) {
        ++index;
        try {
            out.push_back(annotation_from_json(row));
        } catch (const Error& e) {
            throw Error(e.kind(), path.string() + " record " + std::to_string(index) + ": " + e.what());
        }
    }
    return out;
}

void write_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records) {
    std::vector<nlohmann::json> rows;
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(path, rows);
}

}  // namespace fea::data
