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

#include "fea/app/commands.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "fea/app/image_io.hpp"
#include "fea/common/error.hpp"
#include "fea/common/rng.hpp"
#include "fea/data/annotations.hpp"
#include "fea/train/toy_data.hpp"

namespace fea::app {

namespace fs = std::filesystem;
using bench::ResponseRecord;
using data::AnnotationRecord;
using train::ModelBundle;
using train::TrainingExample;

namespace {

// Default evaluation share: 1,335 of 16,227 images.
constexpr double kEvalShare = 1335.0 / 16227.0;

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Config, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::Config, "cannot write " + path.string());
    out << text;
}

nlohmann::json stamp(nlohmann::json j, const RunConfig& cfg) {
    j["config_hash"] = cfg.hash();
    j["seed"] = cfg.seed;
    return j;
}

void write_stamped_jsonl(const fs::path& path, std::vector<nlohmann::json> rows, const RunConfig& cfg) {
    for (auto& r : rows) r = stamp(std::move(r), cfg);
    data::write_jsonl(path, rows);
}

data::TemplateBank load_bank(const RunConfig& cfg) {
    if (cfg.templates.empty()) return data::default_template_bank();
    require_existing(cfg.templates, "template bank");
    auto bank = data::TemplateBank::load(cfg.templates);
    bank.validate();
    return bank;
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(n);
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::vector<AnnotationRecord> toy_truth() {
    std::vector<AnnotationRecord> out;
    for (const auto& s : train::toy_corpus(0)) out.push_back({s.image_id, "toy", s.fe, s.aus});
    return out;
}

struct LabelledImage {
    std::string image_id;
    vision::Image<double> image;
    std::string question, answer;
};

std::vector<LabelledImage> training_images(const RunConfig& cfg) {
    std::vector<LabelledImage> out;
    if (cfg.toy()) {
        const auto samples = cfg.stage == train::Stage::Pretrain
                                 ? train::caption_corpus(train::kToyCaptionCount, train::kToyCaptionSeed)
                                 : train::toy_corpus(0);
        for (const auto& s : samples) out.push_back({s.image_id, s.image, s.question, s.answer});
        return out;
    }
    require_existing(cfg.instructions, "instruction file");
    require_existing(cfg.images, "image directory");
    std::map<std::string, vision::Image<double>> cache;
    for (const auto& row : data::read_jsonl(cfg.instructions)) {
        const auto rec = data::instruction_from_json(row);
        auto it = cache.find(rec.image_id);
        if (it == cache.end()) it = cache.emplace(rec.image_id, load_image(find_image(cfg.images, rec.image_id))).first;
        out.push_back({rec.image_id, it->second, rec.question, rec.answer});
    }
    require(!out.empty(), ErrorKind::Validation, "instruction file " + cfg.instructions.string() + " is empty");
    return out;
}

ModelBundle<double> fresh_bundle(const RunConfig& cfg, const std::vector<LabelledImage>& items,
                                 train::TrainingLog* warmup_log) {
    train::Tokenizer tok;
    if (cfg.toy()) {
        tok = train::toy_tokenizer();
    } else {
        std::vector<std::string> text;
        for (const auto& it : items) {
            text.push_back(it.question);
            text.push_back(it.answer);
        }
        for (const auto& [type, questions] : load_bank(cfg).questions) text.insert(text.end(), questions.begin(), questions.end());
        tok = train::Tokenizer::build(text);
    }
    auto bcfg = cfg.bundle.value_or(train::BundleConfig::toy(tok.size()));
    bcfg.lm.vocab = tok.size();
    ModelBundle<double> bundle(bcfg, tok, cfg.seed);
    if (cfg.warmup.steps == 0) return bundle;

    std::vector<TrainingExample<double>> texts;
    if (cfg.toy()) {
        texts = train::toy_warmup_examples<double>(tok, bcfg, cfg.warmup_texts, Rng::mix(cfg.seed, 11));
    } else {
        for (const auto& it : items) texts.push_back(train::make_text_example<double>(tok, it.question, it.answer));
    }
    *warmup_log = train::warmup_language_model(bundle, texts, cfg.warmup, Rng::mix(cfg.seed, 12));
    return bundle;
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json report_json(const bench::MetricsReport& report, const RunConfig& cfg,
                           const std::vector<bench::TaskKind>& tasks, std::size_t images) {
    nlohmann::json task_names = nlohmann::json::array();
    for (auto t : tasks) task_names.push_back(std::string(bench::to_string(t)));
    return stamp({{"adapter", cfg.adapter}, {"tasks", task_names}, {"images", images}, {"metrics", report.to_json()}},
                 cfg);
}

std::vector<bench::TaskKind> selected_tasks(const RunConfig& cfg, const bench::DatasetAdapter& adapter) {
    if (!cfg.task) return adapter.tasks;
    require(adapter.supports(*cfg.task), ErrorKind::Config,
            "adapter '" + adapter.name + "' has no " + std::string(bench::to_string(*cfg.task)) + " labels");
    return {*cfg.task};
}

void write_report(const bench::MetricsReport& report, const RunConfig& cfg, const std::vector<bench::TaskKind>& tasks,
                  std::size_t images) {
    write_json(cfg.output / "report.json", report_json(report, cfg, tasks, images));
    write_text(cfg.output / "report.txt", "config_hash " + cfg.hash() + "  seed " + std::to_string(cfg.seed) + "\n" +
                                              report.render_table() + "\n");
}

}  // namespace

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ExternalService: return 3;
        case ErrorKind::Config: return 4;
        default: return 2;
    }
}

int exit_code(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return exit_code(err->kind());
    return 1;
}

CropPreviewResult cmd_crop_preview(const fs::path& image_path, const fs::path& out_dir, const RunConfig& cfg) {
    const auto image = load_image(image_path);
    const auto shape = image.shape();
    const auto mode = cfg.bundle ? cfg.bundle->crop : vision::CropMode::Strip;
    const auto regions = vision::crop_regions(image, mode);
    fs::create_directories(out_dir);

    CropPreviewResult result;
    nlohmann::json entries = nlohmann::json::array();
    for (std::size_t i = 0; i < vision::kRegionCount; ++i) {
        const auto& spec = regions.specs[i];
        char prefix[8];
        std::snprintf(prefix, sizeof prefix, "%02zu_", i);
        const std::string file = prefix + vision::label(spec) + ".png";
        save_image(out_dir / file, regions.regions[i]);
        result.files.push_back(out_dir / file);
        const auto w = vision::crop_window(shape[0], shape[1], spec, mode);
        entries.push_back({{"index", i},
                           {"label", vision::label(spec)},
                           {"direction", vision::to_string(spec.direction)},
                           {"fraction", vision::to_string(spec.fraction)},
                           {"window",
                            {{"row_begin", w.row_begin},
                             {"row_end", w.row_end},
                             {"col_begin", w.col_begin},
                             {"col_end", w.col_end}}},
                           {"file", file}});
    }
    result.manifest = out_dir / "manifest.json";
    write_json(result.manifest, stamp({{"image", image_path.filename().generic_string()},
                                       {"height", shape[0]},
                                       {"width", shape[1]},
                                       {"crop_mode", mode == vision::CropMode::Strip ? "strip" : "square"},
                                       {"region_side", vision::kRegionSide},
                                       {"regions", entries}},
                                      cfg));
    return result;
}

BuildDatasetResult cmd_build_dataset(const RunConfig& cfg, data::TextGenerator* generator) {
    require_existing(cfg.annotations, "annotation file");
    const auto annotations = data::read_annotations(cfg.annotations);
    const auto bank = load_bank(cfg);
    fs::create_directories(cfg.output);

    std::unique_ptr<data::TextGenerator> owned;
    if (!generator) {
        if (!cfg.fixture_dir.empty()) {
            require_existing(cfg.fixture_dir, "fixture directory");
            owned = std::make_unique<data::FixtureGenerator>(cfg.fixture_dir);
        } else {
            auto http = data::HttpGeneratorConfig::from_env();
            http.model = cfg.model;
            http.timeout_seconds = cfg.timeout_seconds;
            owned = std::make_unique<data::HttpChatGenerator>(http);
        }
        generator = owned.get();
    }
    data::CachedGenerator cached(*generator, cfg.cache.empty() ? cfg.output / "cache" : cfg.cache);

    BuildDatasetResult result;
    result.build = data::build_dataset(annotations, cached, bank, cfg.seed, cfg.jobs);
    result.generator_calls = cached.inner_calls();
    const auto& build = result.build;

    std::vector<nlohmann::json> rows;
    for (const auto& r : build.instructions) rows.push_back(data::to_json(r));
    write_stamped_jsonl(cfg.output / "instructions.jsonl", rows, cfg);
    rows.clear();
    for (const auto& q : build.quarantined) rows.push_back(data::to_json(q));
    write_stamped_jsonl(cfg.output / "quarantine.jsonl", rows, cfg);
    rows.clear();
    for (const auto& f : build.failures) rows.push_back({{"image_id", f.image_id}, {"message", f.message}});
    write_stamped_jsonl(cfg.output / "failures.jsonl", rows, cfg);

    const std::set<std::string> validated(build.validated.begin(), build.validated.end());
    std::vector<AnnotationRecord> kept;
    for (const auto& a : annotations)
        if (validated.contains(a.image_id)) kept.push_back(a);
    std::set<std::string> subjects;
    for (const auto& a : kept) subjects.insert(a.subject_id);

    nlohmann::json split_info;
    if (subjects.size() >= 2) {
        const std::size_t target =
            cfg.eval_count.value_or(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(kept.size() * kEvalShare))));
        const auto split = data::split_dataset(kept, target, cfg.seed);
        std::set<std::string> eval_ids;
        std::vector<nlohmann::json> train_ann, eval_ann;
        for (const auto& a : split.train) {
            result.train_ids.push_back(a.image_id);
            train_ann.push_back(data::to_json(a));
        }
        for (const auto& a : split.eval) {
            result.eval_ids.push_back(a.image_id);
            eval_ids.insert(a.image_id);
            eval_ann.push_back(data::to_json(a));
        }
        std::vector<nlohmann::json> train_rows, eval_rows;
        for (const auto& r : build.instructions)
            (eval_ids.contains(r.image_id) ? eval_rows : train_rows).push_back(data::to_json(r));
        write_stamped_jsonl(cfg.output / "train_instructions.jsonl", train_rows, cfg);
        write_stamped_jsonl(cfg.output / "eval_instructions.jsonl", eval_rows, cfg);
        write_stamped_jsonl(cfg.output / "train_annotations.jsonl", train_ann, cfg);
        write_stamped_jsonl(cfg.output / "eval_annotations.jsonl", eval_ann, cfg);
        split_info = {{"eval_target", target}, {"train", result.train_ids}, {"eval", result.eval_ids}};
    } else {
        split_info = {{"skipped", "validated images come from fewer than two subjects"}};
        std::cerr << "warning: no subject-disjoint split; validated images come from " << subjects.size()
                  << " subject(s)\n";
    }
    write_json(cfg.output / "split.json", stamp(split_info, cfg));
    write_json(cfg.output / "report.json", stamp({{"annotations", annotations.size()},
                                                  {"validated", build.validated.size()},
                                                  {"quarantined", build.quarantined.size()},
                                                  {"failed", build.failures.size()},
                                                  {"instructions", build.instructions.size()},
                                                  {"generator_calls", result.generator_calls}},
                                                 cfg));
    if (!build.failures.empty())
        fail(ErrorKind::ExternalService, std::to_string(build.failures.size()) +
                                             " record(s) failed generation after retries (first: " +
                                             build.failures.front().image_id + ": " + build.failures.front().message +
                                             "); partial results are in " + cfg.output.string());
    return result;
}

TrainResult cmd_train(const RunConfig& cfg, const train::StepCallback& on_step) {
    const auto items = training_images(cfg);
    fs::create_directories(cfg.output);

    train::TrainingLog warmup_log;
    std::optional<ModelBundle<double>> bundle;
    std::string parent;
    if (!cfg.checkpoint.empty()) {
        require_existing(cfg.checkpoint, "checkpoint");
        bundle.emplace(train::load_checkpoint<double>(cfg.checkpoint).bundle);
        parent = cfg.checkpoint.filename().generic_string();
    } else {
        bundle.emplace(fresh_bundle(cfg, items, &warmup_log));
        if (!warmup_log.steps.empty()) {
            warmup_log.config_hash = cfg.hash();
            warmup_log.write_jsonl(cfg.output / "warmup_log.jsonl");
        }
    }

    std::vector<TrainingExample<double>> data;
    for (const auto& it : items) data.push_back(train::make_example(*bundle, it.image, it.question, it.answer));

    const auto stage = cfg.stage_config.value_or(cfg.toy() ? train::StageConfig::toy(cfg.stage)
                                                           : train::StageConfig::standard(cfg.stage));
    TrainResult result;
    result.log = train::train_stage(*bundle, data, stage, cfg.seed, on_step);
    result.log.config_hash = cfg.hash();

    const std::string k = cfg.stage == train::Stage::Pretrain ? "1" : "2";
    result.checkpoint = cfg.output / ("stage" + k + ".ckpt");
    nlohmann::json provenance = stamp({{"stage", std::string(train::to_string(cfg.stage))},
                                       {"stage_config", stage.to_json()},
                                       {"data", cfg.data},
                                       {"examples", data.size()},
                                       {"steps", result.log.steps.size()},
                                       {"aborted", result.log.aborted},
                                       {"bundle_hash", hex(bundle->config().hash())}},
                                      cfg);
    if (!result.log.steps.empty()) provenance["final_loss"] = result.log.final_loss();
    if (!parent.empty()) provenance["parent"] = parent;
    if (!warmup_log.steps.empty()) provenance["warmup_final_loss"] = warmup_log.final_loss();
    train::save_checkpoint(result.checkpoint, *bundle, provenance);
    result.log.write_jsonl(cfg.output / ("stage" + k + "_log.jsonl"));
    if (result.log.aborted)
        fail(ErrorKind::NonFinite, "training aborted: " + result.log.abort_reason + "; last-good parameters saved to " +
                                       result.checkpoint.string());
    return result;
}

std::vector<AnnotationRecord> read_ground_truth(const fs::path& path, const bench::DatasetAdapter& adapter) {
    const bool has_fe = adapter.supports(bench::TaskKind::FER);
    const bool has_au = adapter.supports(bench::TaskKind::AUD);
    std::vector<AnnotationRecord> out;
    std::size_t line = 0;
    for (auto row : data::read_jsonl(path)) {
        ++line;
        require(row.is_object(), ErrorKind::Parse, path.string() + ":" + std::to_string(line) + ": not an object");
        if (!row.contains("subject_id")) row["subject_id"] = "unknown";
        if (!has_fe && !row.contains("fe_label")) row["fe_label"] = "Neutral";
        if (!has_au && !row.contains("au_set")) row["au_set"] = nlohmann::json::array();
        if (row.contains("au_set") && row["au_set"].is_array()) {
            nlohmann::json kept = nlohmann::json::array();
            for (const auto& au : row["au_set"])
                if (!au.is_number_integer() || data::is_fea_au(au.get<int>())) kept.push_back(au);
            row["au_set"] = kept;
        }
        try {
            out.push_back(data::annotation_from_json(row));
        } catch (const Error& e) {
            fail(e.kind(), path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

EvaluateResult cmd_evaluate(const RunConfig& cfg) {
    const auto adapter = bench::adapter_by_name(cfg.adapter);
    const auto tasks = selected_tasks(cfg, adapter);
    const auto vocab = bench::filter_shared_aus(adapter.vocabulary);
    require_existing(cfg.checkpoint, "checkpoint");
    auto loaded = train::load_checkpoint<double>(cfg.checkpoint);
    auto& bundle = loaded.bundle;

    std::vector<AnnotationRecord> truth;
    std::map<std::string, vision::Image<double>> toy_images;
    if (cfg.toy()) {
        truth = toy_truth();
        for (const auto& s : train::toy_corpus(0)) toy_images.emplace(s.image_id, s.image);
    } else {
        require_existing(cfg.annotations, "ground-truth file");
        require_existing(cfg.images, "image directory");
        truth = read_ground_truth(cfg.annotations, adapter);
    }
    if (adapter.frame_sequential) truth = bench::uniform_sample(truth, adapter.sample_rate);
    require(!truth.empty(), ErrorKind::Validation, "no frames left to evaluate");
    const auto bank = load_bank(cfg);
    const std::string toy_prompt = train::toy_corpus(0).front().question;

    struct Job {
        std::size_t image;
        bench::TaskKind task;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < truth.size(); ++i)
        for (auto t : tasks) jobs.push_back({i, t});

    EvaluateResult result;
    result.responses.resize(jobs.size());
    std::vector<train::VisualInput<double>> visual(truth.size());
    std::vector<std::once_flag> prepared(truth.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t j) {
        const auto& job = jobs[j];
        const auto& rec = truth[job.image];
        std::call_once(prepared[job.image], [&] {
            visual[job.image] = bundle.prepare(cfg.toy() ? toy_images.at(rec.image_id)
                                                         : load_image(find_image(cfg.images, rec.image_id)));
        });
        std::string prompt;
        if (cfg.prompt)
            prompt = *cfg.prompt;
        else if (cfg.toy())
            prompt = toy_prompt;
        else
            prompt = bench::sample_prompt(job.task, bank,
                                          Rng::mix(Rng::mix(cfg.seed, fnv1a(rec.image_id)), static_cast<std::uint64_t>(job.task)));
        result.responses[j] = {rec.image_id, job.task, prompt,
                               train::generate(bundle, visual[job.image], prompt, cfg.max_tokens)};
    });

    result.report = bench::score_responses(result.responses, truth, vocab);
    fs::create_directories(cfg.output);
    std::vector<nlohmann::json> rows;
    for (const auto& r : result.responses) rows.push_back(bench::to_json(r));
    write_stamped_jsonl(cfg.output / "responses.jsonl", rows, cfg);
    write_report(result.report, cfg, tasks, truth.size());
    return result;
}

bench::MetricsReport cmd_score_responses(const RunConfig& cfg) {
    const auto adapter = bench::adapter_by_name(cfg.adapter);
    const auto vocab = bench::filter_shared_aus(adapter.vocabulary);
    require_existing(cfg.responses, "response file");
    auto responses = bench::read_responses(cfg.responses);
    if (cfg.task) std::erase_if(responses, [&](const ResponseRecord& r) { return r.task != *cfg.task; });
    std::vector<AnnotationRecord> truth;
    if (cfg.toy()) {
        truth = toy_truth();
    } else {
        require_existing(cfg.annotations, "ground-truth file");
        truth = read_ground_truth(cfg.annotations, adapter);
    }
    std::vector<bench::TaskKind> tasks;
    for (auto t : adapter.tasks)
        if (std::any_of(responses.begin(), responses.end(), [&](const ResponseRecord& r) { return r.task == t; }))
            tasks.push_back(t);
    for (const auto& r : responses)
        require(adapter.supports(r.task), ErrorKind::Validation,
                "adapter '" + adapter.name + "' has no " + std::string(bench::to_string(r.task)) + " labels");
    const auto report = bench::score_responses(responses, truth, vocab);
    std::set<std::string> images;
    for (const auto& r : responses) images.insert(r.image_id);
    fs::create_directories(cfg.output);
    write_report(report, cfg, tasks, images.size());
    return report;
}

}  // namespace fea::app
