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

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fea/app/commands.hpp"
#include "fea/common/error.hpp"

namespace {

using fea::app::RunConfig;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> fixture_dir, stage, task, adapter, output, data;
    std::optional<std::string> annotations, images, templates, instructions, checkpoint, responses, cache, prompt;
    std::optional<std::size_t> eval_count, max_tokens, steps, warmup_steps;
};

RunConfig effective_config(const Flags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : RunConfig::load(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (f.fixture_dir) cfg.fixture_dir = *f.fixture_dir;
    if (f.stage) cfg.stage = fea::train::parse_stage(*f.stage);
    if (f.task) cfg.task = fea::bench::parse_task(*f.task);
    if (f.adapter) cfg.adapter = *f.adapter;
    if (f.output) cfg.output = *f.output;
    if (f.data) cfg.data = *f.data;
    if (f.annotations) cfg.annotations = *f.annotations;
    if (f.images) cfg.images = *f.images;
    if (f.templates) cfg.templates = *f.templates;
    if (f.instructions) cfg.instructions = *f.instructions;
    if (f.checkpoint) cfg.checkpoint = *f.checkpoint;
    if (f.responses) cfg.responses = *f.responses;
    if (f.cache) cfg.cache = *f.cache;
    if (f.prompt) cfg.prompt = *f.prompt;
    if (f.eval_count) cfg.eval_count = *f.eval_count;
    if (f.max_tokens) cfg.max_tokens = *f.max_tokens;
    if (f.warmup_steps) cfg.warmup.steps = *f.warmup_steps;
    if (f.steps) {
        if (!cfg.stage_config)
            cfg.stage_config = cfg.toy() ? fea::train::StageConfig::toy(cfg.stage) : fea::train::StageConfig::standard(cfg.stage);
        cfg.stage_config->max_steps = *f.steps;
    }
    cfg.validate();
    return cfg;
}

void print_summary(const RunConfig& cfg) {
    std::cout << "config_hash " << cfg.hash() << "  seed " << cfg.seed << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Facial expression and action-unit instruction-tuning toolkit"};
    app.require_subcommand(1);
    Flags f;
    app.add_option("--config", f.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", f.seed, "Seed recorded into every output");
    app.add_option("--jobs", f.jobs, "Record-parallel workers")->check(CLI::PositiveNumber);
    app.add_option("--fixture-dir", f.fixture_dir, "Replay generator responses from <dir>/<image_id>.txt");
    app.add_option("--stage", f.stage, "Training stage")->check(CLI::IsMember({"1", "2", "pretrain", "finetune"}));
    app.add_option("--task", f.task, "Evaluation task")->check(CLI::IsMember({"fer", "aud"}, CLI::ignore_case));
    app.add_option("--adapter", f.adapter, "Dataset adapter")
        ->check(CLI::IsMember({"feabench", "rafdb", "affectnet", "bp4d", "disfa"}));
    app.add_option("--out", f.output, "Output directory");
    app.add_option("--data", f.data, "Data source")->check(CLI::IsMember({"toy", "files"}));

    std::string image, crop_out;
    auto* crop = app.add_subcommand("crop-preview", "Write the 16 local regions of an image and a geometry manifest");
    crop->add_option("image", image, "Input image")->required();
    crop->add_option("out_dir", crop_out, "Output directory")->required();

    auto* build = app.add_subcommand("build-dataset", "Generate, validate and split instruction data");
    build->add_option("--annotations", f.annotations, "Annotation file (JSONL)");
    build->add_option("--templates", f.templates, "Question template bank (JSON)");
    build->add_option("--cache", f.cache, "Generator cache directory");
    build->add_option("--eval-count", f.eval_count, "Target number of evaluation images");

    auto* train = app.add_subcommand("train", "Run one training stage and write a checkpoint");
    train->add_option("--instructions", f.instructions, "Instruction records (JSONL) for --data files");
    train->add_option("--images", f.images, "Image directory for --data files");
    train->add_option("--templates", f.templates, "Question template bank (JSON)");
    train->add_option("--checkpoint", f.checkpoint, "Continue from this checkpoint");
    train->add_option("--steps", f.steps, "Number of updates");
    train->add_option("--warmup-steps", f.warmup_steps, "Base language model warmup updates (0 disables)");

    auto* eval = app.add_subcommand("evaluate", "Generate, extract and score responses");
    eval->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
    eval->add_option("--annotations", f.annotations, "Ground truth (JSONL) for --data files");
    eval->add_option("--images", f.images, "Image directory for --data files");
    eval->add_option("--templates", f.templates, "Question template bank (JSON)");
    eval->add_option("--prompt", f.prompt, "Fixed prompt instead of sampled templates");
    eval->add_option("--max-tokens", f.max_tokens, "Generation limit");

    auto* score = app.add_subcommand("score-responses", "Score a saved response file");
    score->add_option("--responses", f.responses, "Response file (JSONL)");
    score->add_option("--annotations", f.annotations, "Ground truth (JSONL) for --data files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fea::app::exit_code(fea::ErrorKind::Config);
    }

    try {
        const RunConfig cfg = effective_config(f);
        if (*crop) {
            const auto r = fea::app::cmd_crop_preview(image, crop_out, cfg);
            std::cout << "wrote " << r.files.size() << " regions and " << r.manifest.string() << "\n";
        } else if (*build) {
            const auto r = fea::app::cmd_build_dataset(cfg);
            std::cout << "validated " << r.build.validated.size() << ", quarantined " << r.build.quarantined.size()
                      << ", instructions " << r.build.instructions.size() << ", train/eval images "
                      << r.train_ids.size() << "/" << r.eval_ids.size() << ", generator calls " << r.generator_calls
                      << "\n";
        } else if (*train) {
            const auto r = fea::app::cmd_train(cfg, [](const fea::train::StepRecord& s) {
                if (s.step % 25 == 0) std::cout << "step " << s.step << " loss " << s.loss << "\n";
            });
            std::cout << "final loss " << r.log.final_loss() << ", checkpoint " << r.checkpoint.string() << "\n";
        } else if (*eval) {
            const auto r = fea::app::cmd_evaluate(cfg);
            std::cout << r.report.render_table() << "\n";
        } else if (*score) {
            std::cout << fea::app::cmd_score_responses(cfg).render_table() << "\n";
        }
        print_summary(cfg);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fea::app::exit_code(e);
    }
}
