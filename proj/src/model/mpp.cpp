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

#include "fea/model/mpp.hpp"

#include "fea/nn/init.hpp"

namespace fea::model {

using nn::Var;

void MppConfig::validate() const {
    require(!shallow_layers.empty(), ErrorKind::Config, "MPP needs at least one shallow layer");
    for (std::size_t i = 0; i < shallow_layers.size(); ++i) {
        require(i == 0 || shallow_layers[i] > shallow_layers[i - 1], ErrorKind::Config,
                "MPP shallow layer indices must be strictly increasing");
        require(shallow_layers[i] < deep_layer, ErrorKind::Config, "MPP shallow layers must precede the deep layer");
    }
    require(channels > 0 && local_dim > 0 && token_dim > 0 && mlp_hidden > 0 && heads > 0, ErrorKind::Config,
            "MPP widths must be positive");
    require(channels % heads == 0, ErrorKind::Config, "MPP width must divide by the head count");
}

namespace {

template <typename T>
void add_block(nn::ParameterStore<T>& store, const std::string& prefix, std::size_t c, bool with_query, Rng& rng) {
    if (with_query) store.add(prefix + ".q.weight", kMppGroup, nn::scaled_normal<T>({c, c}, c, rng));
    store.add(prefix + ".k.weight", kMppGroup, nn::scaled_normal<T>({c, c}, c, rng));
    store.add(prefix + ".v.weight", kMppGroup, nn::scaled_normal<T>({c, c}, c, rng));
    store.add(prefix + ".v.bias", kMppGroup, nn::Tensor<T>({c}));
    store.add(prefix + ".o.weight", kMppGroup, nn::scaled_normal<T>({c, c}, c, rng));
    store.add(prefix + ".o.bias", kMppGroup, nn::Tensor<T>({c}));
}

template <typename T>
void require_width(const nn::Graph<T>& g, Var x, std::size_t cols, const char* where) {
    const auto& s = g.value(x).shape();
    require(s.size() == 2 && s[1] == cols, ErrorKind::Shape,
            std::string(where) + ": expected (n, " + std::to_string(cols) + "), got " + nn::shape_str(s));
}

template <typename T>
void require_rows(const nn::Graph<T>& g, Var x, std::size_t rows, const char* where) {
    require(g.value(x).rows() == rows, ErrorKind::Shape,
            std::string(where) + ": token count changed to " + std::to_string(g.value(x).rows()));
}

}  // namespace

template <typename T>
void init_mpp(nn::ParameterStore<T>& store, const MppConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::size_t c = cfg.channels;
    add_block(store, "mpp.shallow", c, cfg.project_query, rng);
    store.add("mpp.local_proj.weight", kMppGroup, nn::scaled_normal<T>({cfg.local_dim, c}, cfg.local_dim, rng));
    store.add("mpp.local_proj.bias", kMppGroup, nn::Tensor<T>({c}));
    add_block(store, "mpp.local", c, true, rng);
    add_block(store, "mpp.self", c, true, rng);
    store.add("mpp.gamma1", kMppGroup, nn::Tensor<T>({1}, static_cast<T>(cfg.gamma1_init)));
    store.add("mpp.gamma2", kMppGroup, nn::Tensor<T>({1}, static_cast<T>(cfg.gamma2_init)));
    store.add("mpp.mlp.w1", kMppGroup, nn::scaled_normal<T>({c, cfg.mlp_hidden}, c, rng));
    store.add("mpp.mlp.b1", kMppGroup, nn::Tensor<T>({cfg.mlp_hidden}));
    store.add("mpp.mlp.w2", kMppGroup, nn::scaled_normal<T>({cfg.mlp_hidden, cfg.token_dim}, cfg.mlp_hidden, rng));
    store.add("mpp.mlp.b2", kMppGroup, nn::Tensor<T>({cfg.token_dim}));
}

template <typename T>
Var attention_block(nn::Graph<T>& g, nn::ParameterStore<T>& store, const std::string& prefix, Var query,
                    Var context, std::size_t heads, bool project_query) {
    auto p = [&](const char* name) { return g.param(store.get(prefix + "." + name)); };
    const Var q = project_query ? g.matmul(query, p("q.weight")) : query;
    const Var k = g.matmul(context, p("k.weight"));
    const Var v = g.linear(context, p("v.weight"), p("v.bias"));
    const Var a = g.attention(q, k, v, {heads, false});
    return g.linear(a, p("o.weight"), p("o.bias"));
}

template <typename T>
Var mpp_fuse_shallow(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg,
                     const std::vector<Var>& pyramid) {
    require(pyramid.size() == cfg.levels(), ErrorKind::Shape,
            "MPP expects " + std::to_string(cfg.levels()) + " feature maps, got " + std::to_string(pyramid.size()));
    for (Var m : pyramid) require_width(g, m, cfg.channels, "fuse_shallow");
    const Var deep = pyramid.back();
    const std::vector<Var> shallow(pyramid.begin(), pyramid.end() - 1);
    const Var f_s = g.concat_rows(shallow);
    const Var out = attention_block(g, store, "mpp.shallow", deep, f_s, cfg.heads, cfg.project_query);
    require_rows(g, out, g.value(deep).rows(), "fuse_shallow");
    return out;
}

template <typename T>
Var mpp_project_local(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, Var f_attn) {
    require_width(g, f_attn, cfg.local_dim, "project_local");
    return g.linear(f_attn, g.param(store.get("mpp.local_proj.weight")), g.param(store.get("mpp.local_proj.bias")));
}

template <typename T>
Var mpp_fuse_local(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, Var x, Var local) {
    require_width(g, x, cfg.channels, "fuse_local");
    require_width(g, local, cfg.channels, "fuse_local");
    const Var cross = attention_block(g, store, "mpp.local", x, local, cfg.heads);
    const Var out = g.add(cross, g.scale_by(x, g.param(store.get("mpp.gamma1"))));
    require_rows(g, out, g.value(x).rows(), "fuse_local");
    return out;
}

template <typename T>
Var mpp_refine(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, Var x) {
    require_width(g, x, cfg.channels, "refine");
    const Var self = attention_block(g, store, "mpp.self", x, x, cfg.heads);
    const Var out = g.add(self, g.scale_by(x, g.param(store.get("mpp.gamma2"))));
    require_rows(g, out, g.value(x).rows(), "refine");
    return out;
}

template <typename T>
Var mpp_to_token_space(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, Var x) {
    require_width(g, x, cfg.channels, "to_token_space");
    auto p = [&](const char* name) { return g.param(store.get(std::string("mpp.mlp.") + name)); };
    const Var h = g.gelu(g.linear(x, p("w1"), p("b1")));
    return g.linear(h, p("w2"), p("b2"));
}

template <typename T>
Var mpp_forward(nn::Graph<T>& g, nn::ParameterStore<T>& store, const MppConfig& cfg, const std::vector<Var>& pyramid,
                Var f_attn) {
    const Var shallow = mpp_fuse_shallow(g, store, cfg, pyramid);
    const Var local = mpp_project_local(g, store, cfg, f_attn);
    const Var fused = mpp_fuse_local(g, store, cfg, shallow, local);
    const Var refined = mpp_refine(g, store, cfg, fused);
    const Var out = mpp_to_token_space(g, store, cfg, refined);
    require_rows(g, out, g.value(pyramid.back()).rows(), "mpp_forward");
    return out;
}

namespace {

template <typename T>
std::vector<Var> bind_pyramid(nn::Graph<T>& g, const vision::FeaturePyramid<T>& pyramid) {
    pyramid.validate();
    std::vector<Var> vars;
    for (const auto& m : pyramid.maps) vars.push_back(g.input(m));
    return vars;
}

}  // namespace

template <typename T>
nn::Tensor<T> fuse_shallow(const vision::FeaturePyramid<T>& pyramid, nn::ParameterStore<T>& store,
                           const MppConfig& cfg) {
    nn::Graph<T> g;
    return g.value(mpp_fuse_shallow(g, store, cfg, bind_pyramid(g, pyramid)));
}

template <typename T>
nn::Tensor<T> project_local(const nn::Tensor<T>& f_attn, nn::ParameterStore<T>& store, const MppConfig& cfg) {
    nn::Graph<T> g;
    return g.value(mpp_project_local(g, store, cfg, g.input(f_attn)));
}

template <typename T>
nn::Tensor<T> fuse_local(const nn::Tensor<T>& x, const nn::Tensor<T>& local, nn::ParameterStore<T>& store,
                         const MppConfig& cfg) {
    nn::Graph<T> g;
    return g.value(mpp_fuse_local(g, store, cfg, g.input(x), g.input(local)));
}

template <typename T>
nn::Tensor<T> refine(const nn::Tensor<T>& x, nn::ParameterStore<T>& store, const MppConfig& cfg) {
    nn::require_finite(x, "refine");
    nn::Graph<T> g;
    return g.value(mpp_refine(g, store, cfg, g.input(x)));
}

template <typename T>
nn::Tensor<T> to_token_space(const nn::Tensor<T>& x, nn::ParameterStore<T>& store, const MppConfig& cfg) {
    nn::Graph<T> g;
    return g.value(mpp_to_token_space(g, store, cfg, g.input(x)));
}

template <typename T>
nn::Tensor<T> mpp_forward(const vision::FeaturePyramid<T>& pyramid, const nn::Tensor<T>& f_attn,
                          nn::ParameterStore<T>& store, const MppConfig& cfg) {
    nn::Graph<T> g;
    return g.value(mpp_forward(g, store, cfg, bind_pyramid(g, pyramid), g.input(f_attn)));
}

#define FEA_INSTANTIATE_MPP(T)                                                                                      \
    template void init_mpp(nn::ParameterStore<T>&, const MppConfig&, Rng&);                                        \
    template Var attention_block(nn::Graph<T>&, nn::ParameterStore<T>&, const std::string&, Var, Var, std::size_t, \
                                 bool);                                                                             \
    template Var mpp_fuse_shallow(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, const std::vector<Var>&); \
    template Var mpp_project_local(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, Var);                  \
    template Var mpp_fuse_local(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, Var, Var);                \
    template Var mpp_refine(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, Var);                         \
    template Var mpp_to_token_space(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, Var);                 \
    template Var mpp_forward(nn::Graph<T>&, nn::ParameterStore<T>&, const MppConfig&, const std::vector<Var>&, Var); \
    template nn::Tensor<T> fuse_shallow(const vision::FeaturePyramid<T>&, nn::ParameterStore<T>&, const MppConfig&); \
    template nn::Tensor<T> project_local(const nn::Tensor<T>&, nn::ParameterStore<T>&, const MppConfig&);          \
    template nn::Tensor<T> fuse_local(const nn::Tensor<T>&, const nn::Tensor<T>&, nn::ParameterStore<T>&,          \
                                      const MppConfig&);                                                            \
    template nn::Tensor<T> refine(const nn::Tensor<T>&, nn::ParameterStore<T>&, const MppConfig&);                 \
    template nn::Tensor<T> to_token_space(const nn::Tensor<T>&, nn::ParameterStore<T>&, const MppConfig&);         \
    template nn::Tensor<T> mpp_forward(const vision::FeaturePyramid<T>&, const nn::Tensor<T>&,                     \
                                       nn::ParameterStore<T>&, const MppConfig&);

FEA_INSTANTIATE_MPP(float)
FEA_INSTANTIATE_MPP(double)

#undef FEA_INSTANTIATE_MPP

}  // namespace fea::model
