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

#include "fea/train/toy_lm.hpp"

#include <algorithm>

#include "fea/nn/init.hpp"

namespace fea::train {

using nn::Graph;
using nn::ParameterStore;
using nn::Tensor;
using nn::Var;

void ToyLMConfig::validate() const {
    require(vocab > 4, ErrorKind::Config, "toy LM vocabulary must exceed the four special tokens");
    require(width > 0 && layers > 0 && heads > 0 && context > 0 && mlp_hidden > 0, ErrorKind::Config,
            "toy LM extents must be positive");
    require(width % heads == 0, ErrorKind::Config,
            "toy LM width " + std::to_string(width) + " does not divide into " + std::to_string(heads) + " heads");
    require(norm_eps > 0, ErrorKind::Config, "toy LM norm_eps must be positive");
}

void LoraConfig::validate(const ToyLMConfig& lm) const {
    require(rank > 0, ErrorKind::Config, "LoRA rank must be positive");
    require(rank <= lm.width, ErrorKind::Config,
            "LoRA rank " + std::to_string(rank) + " exceeds layer width " + std::to_string(lm.width));
    require(init_std >= 0, ErrorKind::Config, "LoRA init_std must be non-negative");
}

template <typename T>
void init_toy_lm(ParameterStore<T>& store, const ToyLMConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t d = cfg.width, h = cfg.mlp_hidden;
    auto add = [&](const std::string& name, Tensor<T> t) { store.add("lm." + name, kLmGroup, std::move(t)); };
    add("tok_emb", nn::normal_tensor<T>({cfg.vocab, d}, 1.0, rng));
    add("pos_emb", nn::normal_tensor<T>({cfg.context, d}, 0.1, rng));
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        const std::string l = "layer" + std::to_string(i) + ".";
        add(l + "norm1.gain", Tensor<T>({d}, T{1}));
        for (const char* m : {"q", "k", "v", "o"}) {
            add(l + "attn." + m + ".weight", nn::scaled_normal<T>({d, d}, d, rng));
            add(l + "attn." + m + ".bias", Tensor<T>({d}));
        }
        add(l + "norm2.gain", Tensor<T>({d}, T{1}));
        add(l + "mlp.w1", nn::scaled_normal<T>({d, h}, d, rng));
        add(l + "mlp.b1", Tensor<T>({h}));
        add(l + "mlp.w2", nn::scaled_normal<T>({h, d}, h, rng));
        add(l + "mlp.b2", Tensor<T>({d}));
    }
    add("final_norm.gain", Tensor<T>({d}, T{1}));
    add("head.weight", nn::scaled_normal<T>({d, cfg.vocab}, d, rng));
    add("head.bias", Tensor<T>({cfg.vocab}));
}

template <typename T>
void init_lora(ParameterStore<T>& store, const ToyLMConfig& lm, const LoraConfig& cfg, Rng& rng) {
    cfg.validate(lm);
    for (std::size_t i = 0; i < lm.layers; ++i)
        for (const auto& target : kLoraTargets) {
            const std::string p = "lora.layer" + std::to_string(i) + "." + target + ".";
            store.add(p + "A", kLoraGroup, nn::normal_tensor<T>({cfg.rank, lm.width}, cfg.init_std, rng));
            store.add(p + "B", kLoraGroup, Tensor<T>({lm.width, cfg.rank}));
        }
}

template <typename T>
Var lora_linear(Graph<T>& g, Var x, Var w, Var b, Var a, Var bmat, T scale) {
    const Var base = g.linear(x, w, b);
    const Var delta = g.matmul_nt(g.matmul_nt(x, a), bmat);
    return g.add(base, g.scale(delta, scale));
}

template <typename T>
Tensor<T> lora_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, const Tensor<T>& a,
                       const Tensor<T>& b, double scale) {
    require(w.rank() == 2 && a.rank() == 2 && b.rank() == 2, ErrorKind::Shape, "lora_forward: matrices expected");
    const std::size_t d_in = w.rows(), d_out = w.cols(), r = a.rows();
    require(r <= std::min(d_in, d_out), ErrorKind::Validation,
            "lora_forward: rank " + std::to_string(r) + " exceeds min(d_in, d_out) = " +
                std::to_string(std::min(d_in, d_out)));
    require(a.cols() == d_in && b.rows() == d_out && b.cols() == r, ErrorKind::Shape,
            "lora_forward: adapter shapes A " + nn::shape_str(a.shape()) + ", B " + nn::shape_str(b.shape()) +
                " do not fit W " + nn::shape_str(w.shape()));
    Tensor<T> y = nn::ops::linear(x, w, bias);
    const Tensor<T> delta = nn::ops::matmul_nt(nn::ops::matmul_nt(x, a), b);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += static_cast<T>(scale) * delta[i];
    return y;
}

template <typename T>
Var embed_tokens(Graph<T>& g, ParameterStore<T>& store, const std::vector<std::size_t>& ids) {
    return g.gather_rows(g.param(store.get("lm.tok_emb")), ids);
}

template <typename T>
Var lm_forward(Graph<T>& g, ParameterStore<T>& store, const ToyLMConfig& cfg, const LoraConfig* lora, Var embeddings) {
    const auto& e = g.value(embeddings);
    require(e.rank() == 2 && e.cols() == cfg.width, ErrorKind::Shape,
            "lm_forward: embeddings " + nn::shape_str(e.shape()) + " do not have width " + std::to_string(cfg.width));
    const std::size_t n = e.rows();
    require(n <= cfg.context, ErrorKind::Validation,
            "lm_forward: sequence of " + std::to_string(n) + " exceeds context " + std::to_string(cfg.context));
    auto p = [&](const std::string& name) { return g.param(store.get("lm." + name)); };
    const T eps = static_cast<T>(cfg.norm_eps);

    std::vector<std::size_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = i;
    Var x = g.add(embeddings, g.gather_rows(p("pos_emb"), positions));

    for (std::size_t i = 0; i < cfg.layers; ++i) {
        const std::string l = "layer" + std::to_string(i) + ".";
        const Var h = g.rms_norm(x, p(l + "norm1.gain"), eps);
        auto proj = [&](const std::string& m) {
            const Var w = p(l + "attn." + m + ".weight"), b = p(l + "attn." + m + ".bias");
            if (lora && std::find(kLoraTargets.begin(), kLoraTargets.end(), m) != kLoraTargets.end()) {
                const std::string a = "lora.layer" + std::to_string(i) + "." + m + ".";
                return lora_linear(g, h, w, b, g.param(store.get(a + "A")), g.param(store.get(a + "B")),
                                   static_cast<T>(lora->scale()));
            }
            return g.linear(h, w, b);
        };
        const Var att = g.attention(proj("q"), proj("k"), proj("v"), {cfg.heads, true});
        x = g.add(x, g.linear(att, p(l + "attn.o.weight"), p(l + "attn.o.bias")));
        const Var h2 = g.rms_norm(x, p(l + "norm2.gain"), eps);
        const Var m = g.linear(g.gelu(g.linear(h2, p(l + "mlp.w1"), p(l + "mlp.b1"))), p(l + "mlp.w2"), p(l + "mlp.b2"));
        x = g.add(x, m);
    }
    x = g.rms_norm(x, p("final_norm.gain"), eps);
    return g.linear(x, p("head.weight"), p("head.bias"));
}

nlohmann::json to_json(const ToyLMConfig& c) {
    return {{"vocab", c.vocab},   {"width", c.width},           {"layers", c.layers},    {"heads", c.heads},
            {"context", c.context}, {"mlp_hidden", c.mlp_hidden}, {"norm_eps", c.norm_eps}};
}

ToyLMConfig toy_lm_config_from_json(const nlohmann::json& j) {
    ToyLMConfig c;
    c.vocab = j.value("vocab", c.vocab);
    c.width = j.value("width", c.width);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.context = j.value("context", c.context);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.norm_eps = j.value("norm_eps", c.norm_eps);
    return c;
}

nlohmann::json to_json(const LoraConfig& c) {
    return {{"rank", c.rank},
            {"alpha", c.alpha ? nlohmann::json(*c.alpha) : nlohmann::json(nullptr)},
            {"init_std", c.init_std}};
}

LoraConfig lora_config_from_json(const nlohmann::json& j) {
    LoraConfig c;
    c.rank = j.value("rank", c.rank);
    if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = j["alpha"].get<double>();
    c.init_std = j.value("init_std", c.init_std);
    return c;
}

#define FEA_INSTANTIATE_LM(T)                                                                                    \
    template void init_toy_lm(ParameterStore<T>&, const ToyLMConfig&, Rng&);                                    \
    template void init_lora(ParameterStore<T>&, const ToyLMConfig&, const LoraConfig&, Rng&);                  \
    template Var lora_linear(Graph<T>&, Var, Var, Var, Var, Var, T);                                            \
    template Tensor<T> lora_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                    const Tensor<T>&, double);                                                  \
    template Var embed_tokens(Graph<T>&, ParameterStore<T>&, const std::vector<std::size_t>&);                  \
    template Var lm_forward(Graph<T>&, ParameterStore<T>&, const ToyLMConfig&, const LoraConfig*, Var);

FEA_INSTANTIATE_LM(float)
FEA_INSTANTIATE_LM(double)

#undef FEA_INSTANTIATE_LM

}  // namespace fea::train
