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

#include "fea/data/instructions.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include "fea/common/error.hpp"
#include "fea/common/rng.hpp"

namespace fea::data {

const std::string kFormatPreamble =
    "You write annotations for a facial emotion dataset. Answer in exactly three sections, each starting on its own "
    "line with a header: [SUMMARY] holds the one-word emotional label followed by one sentence describing the "
    "expression; [MOVEMENT] describes the facial movements, naming every activated action unit as AU<number> and no "
    "other action units; [REASONING] explains how the emotion follows from the action units. Do not add any other "
    "text.";

namespace {

const std::string kPromptTemplate =
    "<Image> The facial image expresses the emotion of <fe_label>, and the following Action Units (AUs) are "
    "activated: <au_label>. Please directly state the emotional label of the image with only one word, and then "
    "briefly describe the facial expression of the person in the image in one sentence to help understand the "
    "emotion. And then describe the character's facial movements based on the image and the activation of the AUs. "
    "Finally, explain how to derive the character's emotions from the AUs.";

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

std::string build_generation_prompt(const AnnotationRecord& record) {
    record.validate();
    std::string prompt = kPromptTemplate;
    replace_all(prompt, "<fe_label>", std::string(to_string(record.fe_label)));
    replace_all(prompt, "<au_label>", render_aus(record.au_set));
    return prompt;
}

StructuredDescription parse_structured_description(const std::string& text) {
    static const std::regex header(R"(\[(SUMMARY|MOVEMENT|REASONING)\])", std::regex::icase);
    struct Hit {
        std::string name;
        std::size_t begin, end;
    };
    std::vector<Hit> hits;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), header); it != std::sregex_iterator(); ++it) {
        std::string name = (*it)[1].str();
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::toupper(c); });
        hits.push_back({name, static_cast<std::size_t>(it->position(0)),
                        static_cast<std::size_t>(it->position(0) + it->length(0))});
    }
    std::map<std::string, std::string> sections;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        require(!sections.contains(hits[i].name), ErrorKind::Parse, "duplicated section [" + hits[i].name + "]");
        const std::size_t stop = i + 1 < hits.size() ? hits[i + 1].begin : text.size();
        sections[hits[i].name] = trim(text.substr(hits[i].end, stop - hits[i].end));
    }
    for (const char* name : {"SUMMARY", "MOVEMENT", "REASONING"}) {
        require(sections.contains(name), ErrorKind::Parse, std::string("missing section [") + name + "]");
        require(!sections[name].empty(), ErrorKind::Parse, std::string("empty section [") + name + "]");
    }
    return {sections["SUMMARY"], sections["MOVEMENT"], sections["REASONING"]};
}

std::vector<int> find_au_tokens(const std::string& text) {
    static const std::regex pattern(R"(\bAU\s?(\d+))", std::regex::icase);
    std::vector<int> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it) {
        const std::string digits = (*it)[1].str();
        if (digits.size() > 3) continue;
        out.push_back(std::stoi(digits));
    }
    return out;
}

AuSet mentioned_aus(const std::string& text, const AuSet& vocabulary) {
    AuSet out;
    for (int au : find_au_tokens(text))
        if (vocabulary.contains(au)) out.insert(au);
    const std::string low = lower(text);
    for (int au : vocabulary.values()) {
        const auto name = facs_name(au);
        if (!name) continue;
        for (std::size_t pos = low.find(*name); pos != std::string::npos; pos = low.find(*name, pos + 1)) {
            if (pos == 0 || !std::isalnum(static_cast<unsigned char>(low[pos - 1]))) {
                out.insert(au);
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> ValidationReport::reasons() const {
    std::vector<std::string> out;
    if (!fe_mentioned) out.push_back("expression label not stated in the summary");
    if (!all_aus_mentioned) out.push_back("movement omits " + render_aus(missing));
    if (!no_extraneous_aus) out.push_back("movement mentions unlabelled " + render_aus(extraneous));
    return out;
}

ValidationReport validate_description(const StructuredDescription& desc, const AnnotationRecord& record) {
    ValidationReport report;
    for (const auto& m : find_expression_mentions(desc.emotion_summary))
        if (m.fe == record.fe_label) report.fe_mentioned = true;
    const AuSet mentioned = mentioned_aus(desc.facial_movement);
    for (int au : record.au_set.values())
        if (!mentioned.contains(au)) report.missing.insert(au);
    for (int au : mentioned.values())
        if (!record.au_set.contains(au)) report.extraneous.insert(au);
    report.all_aus_mentioned = report.missing.empty();
    report.no_extraneous_aus = report.extraneous.empty();
    return report;
}

std::string_view to_string(InstructionType t) {
    switch (t) {
        case InstructionType::Summary: return "summary";
        case InstructionType::Movement: return "movement";
        case InstructionType::Reasoning: return "reasoning";
    }
    return "?";
}

InstructionType parse_instruction_type(std::string_view s) {
    for (InstructionType t : kInstructionTypes)
        if (to_string(t) == s) return t;
    fail(ErrorKind::Parse, "unknown instruction type '" + std::string(s) + "'");
}

nlohmann::json to_json(const InstructionRecord& r) {
    return {{"image_id", r.image_id},
            {"type", std::string(to_string(r.type))},
            {"question", r.question},
            {"answer", r.answer}};
}

InstructionRecord instruction_from_json(const nlohmann::json& j) {
    try {
        InstructionRecord r;
        r.image_id = j.at("image_id").get<std::string>();
        r.type = parse_instruction_type(j.at("type").get<std::string>());
        r.question = j.at("question").get<std::string>();
        r.answer = j.at("answer").get<std::string>();
        require(!r.answer.empty(), ErrorKind::Validation, "instruction '" + r.image_id + "' has an empty answer");
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed instruction record: ") + e.what());
    }
}

const std::vector<std::string>& TemplateBank::of(InstructionType t) const {
    static const std::vector<std::string> empty;
    auto it = questions.find(t);
    return it == questions.end() ? empty : it->second;
}

void TemplateBank::validate(std::size_t min_per_type) const {
    for (InstructionType t : kInstructionTypes) {
        const auto& qs = of(t);
        require(qs.size() >= min_per_type, ErrorKind::Config,
                "template bank has " + std::to_string(qs.size()) + " " + std::string(to_string(t)) +
                    " templates, need at least " + std::to_string(min_per_type));
        std::set<std::string> seen;
        for (const auto& q : qs) {
            require(!trim(q).empty(), ErrorKind::Config, "template bank contains an empty question");
            require(seen.insert(q).second, ErrorKind::Config, "template bank repeats \"" + q + "\"");
        }
    }
    const auto& fer = of(InstructionType::Summary);
    const auto& aud = of(InstructionType::Movement);
    require(std::find(fer.begin(), fer.end(), kCanonicalFerPrompt) != fer.end(), ErrorKind::Config,
            "summary templates must include \"" + kCanonicalFerPrompt + "\"");
    require(std::find(aud.begin(), aud.end(), kCanonicalAudPrompt) != aud.end(), ErrorKind::Config,
            "movement templates must include \"" + kCanonicalAudPrompt + "\"");
}

nlohmann::json TemplateBank::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (InstructionType t : kInstructionTypes) j[std::string(to_string(t))] = of(t);
    return j;
}

TemplateBank TemplateBank::from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::Parse, "template bank must be a JSON object");
    TemplateBank bank;
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key().starts_with("_")) continue;  // comments
            bank.questions[parse_instruction_type(it.key())] = it.value().get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed template bank: ") + e.what());
    }
    return bank;
}

TemplateBank TemplateBank::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::Config, "cannot open template bank " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

void TemplateBank::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Config, "cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

const TemplateBank& default_template_bank() {
    static const TemplateBank bank = [] {
        TemplateBank b;
        b.questions[InstructionType::Summary] = {
            kCanonicalFerPrompt,
            "What emotion does this face show?",
            "Which emotion is expressed by the person in this image?",
            "Identify the facial expression of this person.",
            "What is the emotional state of the person in the picture?",
            "Summarize the emotion conveyed by this face.",
            "How does this person feel, judging by the face?",
            "Classify the expression shown in this face.",
            "Give the emotional label of this face and describe it briefly.",
            "What kind of expression is on this face?",
            "Tell me which basic emotion this facial image expresses.",
        };
        b.questions[InstructionType::Movement] = {
            kCanonicalAudPrompt,
            "Which action units are activated in this face?",
            "Describe the facial muscle movements visible in this image.",
            "List the action units you can observe on this face.",
            "What facial movements does this person make?",
            "Which facial action units are present in this picture?",
            "Describe how the facial features of this person are moving.",
            "Identify the activated AUs in this facial image.",
            "What muscle actions can be seen on this face?",
            "Explain which parts of this face are moving and the corresponding action units.",
            "Point out the action units that are active on this face.",
        };
        b.questions[InstructionType::Reasoning] = {
            "Explain how the emotion of this face can be inferred from its action units.",
            "Why does this face express this emotion? Reason from the action units.",
            "How do the facial movements in this image reveal the person's emotion?",
            "Derive the emotion of this person from the activated action units.",
            "What do the action units in this face tell us about the emotion?",
            "Walk through the facial cues that lead to the emotion shown here.",
            "Reason about the emotion in this image using the facial action units.",
            "Explain the link between the facial movements and the emotion of this person.",
            "Based on the action units, justify the emotion expressed by this face.",
            "How can the emotion of this face be derived step by step from its AUs?",
            "Interpret the activated action units to explain this person's emotion.",
        };
        return b;
    }();
    return bank;
}

std::string reorder_reasoning(const std::string& text) {
    static const std::regex sentence(R"([^.!?]+[.!?]*)");
    struct Sentence {
        std::string text;
        int key;
    };
    std::vector<Sentence> with_aus, without;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), sentence); it != std::sregex_iterator(); ++it) {
        std::string s = trim(it->str());
        if (s.empty()) continue;
        const AuSet aus = mentioned_aus(s, AuSet::fea_vocabulary());
        if (aus.empty())
            without.push_back({s, 0});
        else
            with_aus.push_back({s, aus.values().front()});
    }
    std::stable_sort(with_aus.begin(), with_aus.end(), [](const Sentence& a, const Sentence& b) { return a.key < b.key; });
    std::string out;
    for (const auto* group : {&with_aus, &without})
        for (const auto& s : *group) out += (out.empty() ? "" : " ") + s.text;
    return out;
}

std::array<InstructionRecord, 3> make_instructions(const StructuredDescription& desc, const AnnotationRecord& record,
                                                   const TemplateBank& bank, std::uint64_t seed) {
    record.validate();
    Rng rng(Rng::mix(seed, fnv1a(record.image_id)));
    std::array<InstructionRecord, 3> out;
    for (std::size_t i = 0; i < kInstructionTypes.size(); ++i) {
        const InstructionType t = kInstructionTypes[i];
        const auto& qs = bank.of(t);
        require(!qs.empty(), ErrorKind::Config, "template bank has no " + std::string(to_string(t)) + " questions");
        out[i].image_id = record.image_id;
        out[i].type = t;
        out[i].question = qs[rng.index(qs.size())];
    }
    out[0].answer = trim(desc.emotion_summary);
    out[1].answer = trim(desc.facial_movement);
    out[2].answer = reorder_reasoning(desc.emotion_reasoning);
    for (const auto& r : out)
        require(!r.answer.empty(), ErrorKind::Validation,
                "empty " + std::string(to_string(r.type)) + " answer for '" + record.image_id + "'");
    return out;
}

std::set<std::string> choose_eval_subjects(const std::map<std::string, std::size_t>& subject_sizes,
                                           std::size_t target, std::uint64_t seed) {
    std::vector<std::pair<std::string, std::size_t>> order(subject_sizes.begin(), subject_sizes.end());
    Rng rng(Rng::mix(seed, 0x73706c6974));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    auto distance = [&](std::size_t n) { return n > target ? n - target : target - n; };
    std::set<std::string> chosen;
    std::size_t eval = 0;
    for (const auto& [subject, size] : order) {
        if (chosen.size() + 1 == subject_sizes.size()) break;  // keep the training side non-empty
        if (distance(eval + size) < distance(eval)) {
            chosen.insert(subject);
            eval += size;
        }
    }
    return chosen;
}

}  // namespace fea::data
