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

#include "fea/model/lca.hpp"

#include <cmath>

#include "fea/nn/init.hpp"

namespace fea::model {

using nn::Var;

void LcaConfig::validate() const {
    require(d > 0 && token_dim > 0, ErrorKind::Config, "LCA widths must be positive");
    require(conv_layers > 0 && kernel > 0 && stride > 0, ErrorKind::Config, "LCA conv geometry must be positive");
    (void)spatial_schedule();
}

std::vector<std::size_t> LcaConfig::spatial_schedule(std::size_t side) const {
    std::vector<std::size_t> sides{side};
    const nn::ops::ConvGeometry geo{stride, padding};
    for (std::size_t i = 0; i < conv_layers; ++i) {
        require(sides.back() + 2 * padding >= kernel, ErrorKind::Config,
                "LCA conv stack reduces a " + std::to_string(side) + "-pixel region below one pixel");
        sides.push_back(nn::ops::conv_output_extent(sides.back(), kernel, geo));
    }
    return sides;
}

namespace {

std::string conv_name(std::size_t i, const char* what) {
    return "lca.conv" + std::to_string(i) + "." + what;
}

}  // namespace

template <typename T>
void init_lca(nn::ParameterStore<T>& store, const LcaConfig& cfg, Rng& rng) {
    cfg.validate();
    std::size_t cin = vision::kImageChannels;
    for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
        store.add(conv_name(i, "weight"), kLcaGroup,
                  nn::scaled_normal<T>({cfg.kernel, cfg.kernel, cin, cfg.d}, cfg.kernel * cfg.kernel * cin, rng));
        store.add(conv_name(i, "bias"), kLcaGroup, nn::Tensor<T>({cfg.d}));
        cin = cfg.d;
    }
    if (cfg.learned_qkv)
        for (const char* p : {"q", "k", "v"})
            store.add(std::string("lca.attn.") + p + ".weight", kLcaGroup,
                      nn::scaled_normal<T>({cfg.d, cfg.d}, cfg.d, rng));
    const std::size_t flat = vision::kRegionCount * cfg.d;
    store.add("lca.out.weight", kLcaGroup, nn::scaled_normal<T>({flat, cfg.token_dim}, flat, rng));
    store.add("lca.out.bias", kLcaGroup, nn::Tensor<T>({cfg.token_dim}));
}

template <typename T>
Var lca_region_features(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg,
                        const std::vector<Var>& regions) {
    require(regions.size() == vision::kRegionCount, ErrorKind::Shape,
            "LCA expects 16 regions, got " + std::to_string(regions.size()));
    std::vector<Var> kernels, biases;
    for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
        kernels.push_back(g.param(store.get(conv_name(i, "weight"))));
        biases.push_back(g.param(store.get(conv_name(i, "bias"))));
    }
    const nn::ops::ConvGeometry geo{cfg.stride, cfg.padding};
    std::vector<Var> pooled;
    pooled.reserve(regions.size());
    for (Var x : regions) {
        const auto& shape = g.value(x).shape();
        require(shape.size() == 3 && shape[2] == vision::kImageChannels, ErrorKind::Shape,
                "LCA region must be (H, W, 3), got " + nn::shape_str(shape));
        for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
            x = g.conv2d(x, kernels[i], biases[i], geo);
            if (i + 1 < cfg.conv_layers || cfg.activate_last) x = g.gelu(x);
        }
        pooled.push_back(g.avgpool_global(x));
    }
    return g.concat_rows(pooled);
}

template <typename T>
Var lca_reweight(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg, Var r_local) {
    const auto& shape = g.value(r_local).shape();
    require(shape == nn::Shape{vision::kRegionCount, cfg.d}, ErrorKind::Shape,
            "LCA re-weighting expects (16, d), got " + nn::shape_str(shape));
    if (!cfg.learned_qkv) return g.attention(r_local, r_local, r_local);
    const Var q = g.matmul(r_local, g.param(store.get("lca.attn.q.weight")));
    const Var k = g.matmul(r_local, g.param(store.get("lca.attn.k.weight")));
    const Var v = g.matmul(r_local, g.param(store.get("lca.attn.v.weight")));
    return g.attention(q, k, v);
}

template <typename T>
Var lca_project(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg, Var f_attn) {
    const auto& shape = g.value(f_attn).shape();
    require(shape == nn::Shape{vision::kRegionCount, cfg.d}, ErrorKind::Shape,
            "LCA projection expects (16, d), got " + nn::shape_str(shape));
    const Var flat = g.reshape(f_attn, {1, vision::kRegionCount * cfg.d});
    return g.linear(flat, g.param(store.get("lca.out.weight")), g.param(store.get("lca.out.bias")));
}

template <typename T>
LcaVars<T> lca_forward(nn::Graph<T>& g, nn::ParameterStore<T>& store, const LcaConfig& cfg,
                       const vision::LocalRegionSet<T>& regions) {
    std::vector<Var> inputs;
    inputs.reserve(regions.regions.size());
    for (const auto& r : regions.regions) inputs.push_back(g.input(r));
    const Var r_local = lca_region_features(g, store, cfg, inputs);
    const Var f_attn = lca_reweight(g, store, cfg, r_local);
    return {f_attn, lca_project(g, store, cfg, f_attn)};
}

template <typename T>
nn::Tensor<T> extract_region_features(const vision::LocalRegionSet<T>& regions, nn::ParameterStore<T>& store,
                                      const LcaConfig& cfg) {
    nn::Graph<T> g;
    std::vector<Var> inputs;
    for (const auto& r : regions.regions) inputs.push_back(g.input(r));
    return g.value(lca_region_features(g, store, cfg, inputs));
}

template <typename T>
nn::Tensor<T> reweight_regions(const nn::Tensor<T>& r_local, nn::ParameterStore<T>& store, const LcaConfig& cfg) {
    nn::require_finite(r_local, "reweight_regions");
    nn::Graph<T> g;
    return g.value(lca_reweight(g, store, cfg, g.input(r_local)));
}

template <typename T>
nn::Tensor<T> project_local_token(const nn::Tensor<T>& f_attn, nn::ParameterStore<T>& store, const LcaConfig& cfg) {
    nn::Graph<T> g;
    return g.value(lca_project(g, store, cfg, g.input(f_attn))).reshaped({cfg.token_dim});
}

template <typename T>
LcaOutput<T> lca_forward(const vision::LocalRegionSet<T>& regions, nn::ParameterStore<T>& store,
                         const LcaConfig& cfg) {
    nn::Graph<T> g;
    const auto vars = lca_forward(g, store, cfg, regions);
    return {g.value(vars.f_attn), g.value(vars.f_local).reshaped({cfg.token_dim})};
}

#define FEA_INSTANTIATE_LCA(T)                                                                                \
    template void init_lca(nn::ParameterStore<T>&, const LcaConfig&, Rng&);                                  \
    template Var lca_region_features(nn::Graph<T>&, nn::ParameterStore<T>&, const LcaConfig&,                 \
                                     const std::vector<Var>&);                                                \
    template Var lca_reweight(nn::Graph<T>&, nn::ParameterStore<T>&, const LcaConfig&, Var);                  \
    template Var lca_project(nn::Graph<T>&, nn::ParameterStore<T>&, const LcaConfig&, Var);                   \
    template LcaVars<T> lca_forward(nn::Graph<T>&, nn::ParameterStore<T>&, const LcaConfig&,                  \
                                    const vision::LocalRegionSet<T>&);                                        \
    template nn::Tensor<T> extract_region_features(const vision::LocalRegionSet<T>&, nn::ParameterStore<T>&, \
                                                   const LcaConfig&);                                         \
    template nn::Tensor<T> reweight_regions(const nn::Tensor<T>&, nn::ParameterStore<T>&, const LcaConfig&);  \
    template nn::Tensor<T> project_local_token(const nn::Tensor<T>&, nn::ParameterStore<T>&, const LcaConfig&); \
    template LcaOutput<T> lca_forward(const vision::LocalRegionSet<T>&, nn::ParameterStore<T>&, const LcaConfig&);

FEA_INSTANTIATE_LCA(float)
FEA_INSTANTIATE_LCA(double)

#undef FEA_INSTANTIATE_LCA

}  // namespace fea::model
