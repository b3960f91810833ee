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

#include "fea/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fea/common/rng.hpp"
#include "fea/data/annotations.hpp"

namespace fea::train {

using nn::Graph;
using nn::ParameterStore;
using nn::Tensor;
using nn::Var;

std::string_view to_string(Stage s) { return s == Stage::Pretrain ? "pretrain" : "finetune"; }

Stage parse_stage(std::string_view s) {
    if (s == "pretrain" || s == "1") return Stage::Pretrain;
    if (s == "finetune" || s == "2") return Stage::Finetune;
    fail(ErrorKind::Config, "unknown stage '" + std::string(s) + "' (expected 1, 2, pretrain or finetune)");
}

std::vector<std::string> StageConfig::trainable_groups() const {
    if (stage == Stage::Pretrain) return {model::kLcaGroup, model::kMppGroup};
    return {model::kLcaGroup, model::kMppGroup, kLoraGroup};
}

void StageConfig::validate() const {
    require(batch_size > 0, ErrorKind::Config, "batch_size must be positive");
    require(epochs > 0 || max_steps > 0, ErrorKind::Config, "need epochs or max_steps");
    for (const auto& group : trainable_groups()) {
        const auto it = learning_rates.find(group);
        require(it != learning_rates.end(), ErrorKind::Config,
                "stage " + std::string(to_string(stage)) + " has no learning rate for group '" + group + "'");
        require(std::isfinite(it->second) && it->second >= 0, ErrorKind::Config,
                "learning rate for '" + group + "' must be finite and non-negative");
    }
    for (const auto& [group, lr] : learning_rates)
        require(group != kLmGroup, ErrorKind::Config, "the base language model is frozen in every stage");
    require(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0,
            ErrorKind::Config, "invalid Adam hyperparameters");
}

StageConfig StageConfig::standard(Stage stage) {
    StageConfig c;
    c.stage = stage;
    c.epochs = 1;
    if (stage == Stage::Pretrain) {
        c.learning_rates = {{model::kLcaGroup, 1e-3}, {model::kMppGroup, 1e-3}};
        c.batch_size = 64;
    } else {
        c.learning_rates = {{model::kLcaGroup, 2e-5}, {model::kMppGroup, 2e-5}, {kLoraGroup, 2e-4}};
        c.batch_size = 16;
    }
    return c;
}

StageConfig StageConfig::toy(Stage stage) {
    StageConfig c;
    c.stage = stage;
    c.batch_size = 8;
    c.optimizer = Optimizer::Adam;
    c.schedule = Schedule::Cosine;
    if (stage == Stage::Pretrain) {
        c.learning_rates = {{model::kLcaGroup, 2e-3}, {model::kMppGroup, 2e-3}};
        c.max_steps = 200;
    } else {
        c.learning_rates = {{model::kLcaGroup, 2e-3}, {model::kMppGroup, 2e-3}, {kLoraGroup, 1e-2}};
        c.max_steps = 500;
    }
    return c;
}

nlohmann::json StageConfig::to_json() const {
    return {{"stage", std::string(to_string(stage))},
            {"learning_rates", learning_rates},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"max_steps", max_steps},
            {"optimizer", optimizer == Optimizer::Sgd ? "sgd" : "adam"},
            {"schedule", schedule == Schedule::Constant ? "constant" : "cosine"},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"adam_eps", adam_eps}};
}

StageConfig StageConfig::from_json(const nlohmann::json& j) {
    try {
        StageConfig c = standard(parse_stage(j.at("stage").get<std::string>()));
        if (j.contains("learning_rates")) c.learning_rates = j["learning_rates"].get<std::map<std::string, double>>();
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.max_steps = j.value("max_steps", c.max_steps);
        const std::string opt = j.value("optimizer", std::string("sgd"));
        require(opt == "sgd" || opt == "adam", ErrorKind::Config, "optimizer must be 'sgd' or 'adam'");
        c.optimizer = opt == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
        const std::string sched = j.value("schedule", std::string("constant"));
        require(sched == "constant" || sched == "cosine", ErrorKind::Config, "schedule must be 'constant' or 'cosine'");
        c.schedule = sched == "constant" ? Schedule::Constant : Schedule::Cosine;
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.adam_eps = j.value("adam_eps", c.adam_eps);
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("stage config: ") + e.what());
    }
}

template <typename T>
TrainingExample<T> make_example(const ModelBundle<T>& bundle, const vision::Image<T>& image,
                                const std::string& question, const std::string& answer) {
    return {bundle.prepare(image), instruction_ids(bundle.tokenizer(), question),
            response_ids(bundle.tokenizer(), answer), {}};
}

template <typename T>
T masked_lm_loss(const Tensor<T>& logits, const std::vector<std::size_t>& targets,
                 const std::vector<std::uint8_t>& mask) {
    return nn::ops::masked_cross_entropy(logits, targets, mask);
}

template <typename T>
Var example_loss(Graph<T>& g, ModelBundle<T>& bundle, const TrainingExample<T>& ex) {
    const SequenceLayout layout{ex.visual.pyramid.tokens(), ex.instruction.size(), ex.response.size()};
    require(layout.input_length() <= bundle.config().lm.context, ErrorKind::Validation,
            "training example needs a context of " + std::to_string(layout.input_length()) + ", model has " +
                std::to_string(bundle.config().lm.context));
    std::vector<std::size_t> tokens = ex.instruction;
    tokens.insert(tokens.end(), ex.response.begin(), ex.response.end() - 1);
    const auto [f_vision, f_local] = bundle.visual_tokens(g, ex.visual);
    const Var logits = bundle.logits(g, f_vision, f_local, tokens);
    return g.masked_cross_entropy(logits, layout.targets(ex.response), layout.loss_mask());
}

template <typename T>
void apply_stage(ParameterStore<T>& store, const StageConfig& stage) {
    const auto groups = stage.trainable_groups();
    store.for_each([&](nn::Parameter<T>& p) {
        p.trainable = std::find(groups.begin(), groups.end(), p.group) != groups.end();
    });
}

double TrainingLog::final_loss() const {
    require(!steps.empty(), ErrorKind::Validation, "training log is empty");
    return steps.back().loss;
}

void TrainingLog::write_jsonl(const std::filesystem::path& path) const {
    auto row = [&] {
        nlohmann::json j{{"stage", std::string(to_string(stage))}, {"seed", seed}};
        if (!config_hash.empty()) j["config_hash"] = config_hash;
        return j;
    };
    std::vector<nlohmann::json> rows;
    for (const auto& s : steps) {
        rows.push_back(row());
        rows.back()["step"] = s.step;
        rows.back()["loss"] = s.loss;
    }
    if (aborted) {
        rows.push_back(row());
        rows.back()["aborted"] = abort_reason;
    }
    data::write_jsonl(path, rows);
}

namespace {

template <typename T>
struct AdamState {
    Tensor<T> m, v;
};

template <typename T>
bool grads_finite(ParameterStore<T>& store) {
    bool ok = true;
    store.for_each([&](nn::Parameter<T>& p) {
        if (p.trainable && !p.grad.all_finite()) ok = false;
    });
    return ok;
}

struct LoopSettings {
    std::map<std::string, double> learning_rates;
    std::size_t batch_size = 1;
    std::size_t steps = 0;
    Optimizer optimizer = Optimizer::Sgd;
    Schedule schedule = Schedule::Constant;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

/// Shared mini-batch loop over the currently trainable parameters.
template <typename T, typename LossFn>
void run_loop(ParameterStore<T>& store, std::size_t n, const LoopSettings& cfg, std::uint64_t seed, LossFn&& loss_of,
              TrainingLog& log, const StepCallback& on_step) {
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::size_t cursor = n;
    const std::size_t per_batch = std::min(cfg.batch_size, n);

    std::map<std::string, Tensor<T>> last_good;
    std::map<std::string, AdamState<T>> adam;

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        store.zero_grads();
        double loss = 0;
        for (std::size_t k = 0; k < per_batch; ++k) {
            if (cursor == n) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
                cursor = 0;
            }
            const std::size_t index = order[cursor++];
            if (!std::isfinite(loss)) continue;
            try {
                Graph<T> g;
                const Var l = loss_of(g, index);
                loss += static_cast<double>(g.value(l)[0]);
                g.backward(g.scale(l, T{1} / static_cast<T>(per_batch)));
            } catch (const Error& e) {
                // Overflow inside a kernel surfaces as a NonFinite error.
                if (e.kind() != ErrorKind::NonFinite) throw;
                loss = std::numeric_limits<double>::quiet_NaN();
            }
        }
        loss /= static_cast<double>(per_batch);

        if (!std::isfinite(loss) || !grads_finite(store)) {
            store.for_each([&](nn::Parameter<T>& p) {
                if (p.trainable && last_good.contains(p.name)) p.value = last_good.at(p.name);
            });
            log.aborted = true;
            log.abort_reason = (std::isfinite(loss) ? "non-finite gradient" : "non-finite loss") +
                               std::string(" at step ") + std::to_string(step);
            return;
        }
        store.for_each([&](nn::Parameter<T>& p) {
            if (p.trainable) last_good[p.name] = p.value;
        });
        const StepRecord rec{step, loss};
        log.steps.push_back(rec);
        if (on_step) on_step(rec);

        const double t = static_cast<double>(step + 1);
        const double factor = cfg.schedule == Schedule::Constant
                                  ? 1.0
                                  : 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                                          static_cast<double>(cfg.steps)));
        const T c1 = static_cast<T>(1 - std::pow(cfg.beta1, t)), c2 = static_cast<T>(1 - std::pow(cfg.beta2, t));
        const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2), eps = static_cast<T>(cfg.eps);
        store.for_each([&](nn::Parameter<T>& p) {
            if (!p.trainable) return;
            const T lr = static_cast<T>(cfg.learning_rates.at(p.group) * factor);
            if (cfg.optimizer == Optimizer::Sgd) {
                for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
                return;
            }
            auto& st = adam[p.name];
            if (st.m.empty()) st = {Tensor<T>(p.value.shape()), Tensor<T>(p.value.shape())};
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                st.m[i] = b1 * st.m[i] + (T{1} - b1) * p.grad[i];
                st.v[i] = b2 * st.v[i] + (T{1} - b2) * p.grad[i] * p.grad[i];
                p.value[i] -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
            }
        });
    }
}

}  // namespace

template <typename T>
TrainingLog train_stage(ModelBundle<T>& bundle, const std::vector<TrainingExample<T>>& data,
                        const StageConfig& stage, std::uint64_t seed, const StepCallback& on_step) {
    stage.validate();
    require(!data.empty(), ErrorKind::Validation, "train_stage: empty dataset");
    apply_stage(bundle.params(), stage);

    TrainingLog log;
    log.stage = stage.stage;
    log.seed = seed;
    const std::size_t per_epoch = (data.size() + stage.batch_size - 1) / stage.batch_size;
    const LoopSettings cfg{stage.learning_rates,
                           stage.batch_size,
                           stage.max_steps > 0 ? stage.max_steps : stage.epochs * per_epoch,
                           stage.optimizer,
                           stage.schedule,
                           stage.adam_beta1,
                           stage.adam_beta2,
                           stage.adam_eps};
    run_loop(bundle.params(), data.size(), cfg, seed,
             [&](Graph<T>& g, std::size_t i) { return example_loss(g, bundle, data[i]); }, log, on_step);
    return log;
}

template <typename T>
Var text_loss(Graph<T>& g, ModelBundle<T>& bundle, const TrainingExample<T>& ex) {
    const std::size_t visual = bundle.config().encoder.tokens();
    const std::size_t d = bundle.config().lm.width;
    require(ex.context.size() <= visual + 1, ErrorKind::Validation,
            "text example context of " + std::to_string(ex.context.size()) + " ids exceeds the " +
                std::to_string(visual + 1) + " prefix rows");
    std::vector<Var> rows;
    if (!ex.context.empty()) rows.push_back(embed_tokens(g, bundle.params(), ex.context));
    if (ex.context.size() < visual + 1) rows.push_back(g.input(Tensor<T>({visual + 1 - ex.context.size(), d})));
    const Var prefix = g.concat_rows(rows);
    const SequenceLayout layout{visual, ex.instruction.size(), ex.response.size()};
    std::vector<std::size_t> tokens = ex.instruction;
    tokens.insert(tokens.end(), ex.response.begin(), ex.response.end() - 1);
    const Var logits =
        bundle.logits(g, g.slice_rows(prefix, 0, visual), g.slice_rows(prefix, visual, visual + 1), tokens);
    return g.masked_cross_entropy(logits, layout.targets(ex.response), layout.loss_mask());
}

template <typename T>
TrainingLog warmup_language_model(ModelBundle<T>& bundle, const std::vector<TrainingExample<T>>& texts,
                                  const WarmupConfig& warmup, std::uint64_t seed, const StepCallback& on_step) {
    require(!texts.empty(), ErrorKind::Validation, "warmup_language_model: empty corpus");
    require(warmup.steps > 0 && warmup.batch_size > 0 && std::isfinite(warmup.learning_rate) &&
                warmup.learning_rate >= 0,
            ErrorKind::Config, "warmup_language_model: invalid settings");
    auto& store = bundle.params();
    store.for_each([](nn::Parameter<T>& p) { p.trainable = p.group == kLmGroup; });
    TrainingLog log;
    log.seed = seed;
    const LoopSettings cfg{{{kLmGroup, warmup.learning_rate}}, warmup.batch_size, warmup.steps, warmup.optimizer,
                            warmup.schedule};
    run_loop(store, texts.size(), cfg, seed, [&](Graph<T>& g, std::size_t i) { return text_loss(g, bundle, texts[i]); },
             log, on_step);
    store.set_all_trainable(false);
    return log;
}

#define FEA_INSTANTIATE_TRAINER(T)                                                                               \
    template TrainingExample<T> make_example(const ModelBundle<T>&, const vision::Image<T>&, const std::string&,  \
                                             const std::string&);                                               \
    template T masked_lm_loss(const Tensor<T>&, const std::vector<std::size_t>&, const std::vector<std::uint8_t>&); \
    template Var example_loss(Graph<T>&, ModelBundle<T>&, const TrainingExample<T>&);                            \
    template void apply_stage(ParameterStore<T>&, const StageConfig&);                                          \
    template TrainingLog train_stage(ModelBundle<T>&, const std::vector<TrainingExample<T>>&, const StageConfig&, \
                                     std::uint64_t, const StepCallback&);                                       \
    template Var text_loss(Graph<T>&, ModelBundle<T>&, const TrainingExample<T>&);                               \
    template TrainingLog warmup_language_model(ModelBundle<T>&, const std::vector<TrainingExample<T>>&,          \
                                               const WarmupConfig&, std::uint64_t, const StepCallback&);

FEA_INSTANTIATE_TRAINER(float)
FEA_INSTANTIATE_TRAINER(double)

#undef FEA_INSTANTIATE_TRAINER

}  // namespace fea::train
