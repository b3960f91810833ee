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

#include <gtest/gtest.h>

#include "fea/model/mpp.hpp"
#include "fea/nn/grad_check.hpp"
#include "test_util.hpp"

using namespace fea;
using namespace fea::model;
using fea::testing::random_tensor;
namespace oracle = fea::testing::oracle;

namespace {

MppConfig small_config(std::size_t c = 8, std::size_t local_dim = 5, std::size_t token_dim = 6) {
    MppConfig cfg;
    cfg.channels = c;
    cfg.local_dim = local_dim;
    cfg.token_dim = token_dim;
    cfg.mlp_hidden = 7;
    return cfg;
}

template <typename T = double>
nn::ParameterStore<T> make_store(const MppConfig& cfg, std::uint64_t seed) {
    nn::ParameterStore<T> store;
    Rng rng(seed);
    init_mpp(store, cfg, rng);
    store.for_each([&](nn::Parameter<T>& p) {
        if (p.name.ends_with("bias") || p.name.ends_with(".b1") || p.name.ends_with(".b2"))
            for (auto& v : p.value.data()) v = static_cast<T>(rng.normal() * 0.1);
    });
    return store;
}

vision::FeaturePyramid<double> random_pyramid(std::size_t levels, std::size_t n, std::size_t c,
                                              std::uint64_t seed) {
    vision::FeaturePyramid<double> p;
    for (std::size_t l = 0; l < levels; ++l) p.maps.push_back(random_tensor({n, c}, seed * 31 + l));
    return p;
}

nn::Tensor<double> identity(std::size_t n) {
    nn::Tensor<double> t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

void set(nn::ParameterStore<double>& store, const std::string& name, double value) {
    store.get(name).value.fill(value);
}

// Attention block from nested-vector loops, one head at a time.
oracle::Mat block_oracle(nn::ParameterStore<double>& s, const std::string& prefix, const oracle::Mat& query,
                         const oracle::Mat& ctx, std::size_t heads, bool project_query = true) {
    auto w = [&](const char* n) { return oracle::to_mat(s.get(prefix + "." + n).value); };
    auto b = [&](const char* n) { return oracle::to_vec(s.get(prefix + "." + n).value); };
    const oracle::Mat q = project_query ? oracle::matmul(query, w("q.weight")) : query;
    const oracle::Mat k = oracle::matmul(ctx, w("k.weight"));
    const oracle::Mat v = oracle::linear(ctx, w("v.weight"), b("v.bias"));
    const std::size_t c = v[0].size(), dh = c / heads;
    oracle::Mat joined(q.size());
    for (std::size_t h = 0; h < heads; ++h) {
        const auto part = oracle::attention(oracle::columns(q, h * dh, (h + 1) * dh),
                                            oracle::columns(k, h * dh, (h + 1) * dh),
                                            oracle::columns(v, h * dh, (h + 1) * dh));
        for (std::size_t i = 0; i < q.size(); ++i) joined[i].insert(joined[i].end(), part[i].begin(), part[i].end());
    }
    return oracle::linear(joined, w("o.weight"), b("o.bias"));
}

oracle::Mat mlp_oracle(nn::ParameterStore<double>& s, const oracle::Mat& x) {
    auto w = [&](const char* n) { return oracle::to_mat(s.get(std::string("mpp.mlp.") + n).value); };
    auto b = [&](const char* n) { return oracle::to_vec(s.get(std::string("mpp.mlp.") + n).value); };
    return oracle::linear(oracle::gelu(oracle::linear(x, w("w1"), b("b1"))), w("w2"), b("b2"));
}

double gamma(nn::ParameterStore<double>& s, const char* name) { return s.get(name).value[0]; }

}  // namespace

TEST(MppConfig, Validation) {
    EXPECT_NO_THROW(MppConfig{}.validate());
    auto cfg = small_config();
    cfg.shallow_layers = {3, 8, 8, 18};
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config();
    cfg.deep_layer = 18;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config();
    cfg.heads = 3;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(MppFuseShallow, ShapeContract) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 1);
    EXPECT_EQ(fuse_shallow(random_pyramid(5, 9, 8, 1), store, cfg).shape(), (nn::Shape{9, 8}));
    EXPECT_THROW(fuse_shallow(random_pyramid(4, 9, 8, 1), store, cfg), Error);
    EXPECT_THROW(fuse_shallow(random_pyramid(5, 9, 6, 1), store, cfg), Error);
}

TEST(MppFuseShallow, IdenticalShallowRowsAreReproduced) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 2);
    store.get("mpp.shallow.v.weight").value = identity(8);
    store.get("mpp.shallow.o.weight").value = identity(8);
    set(store, "mpp.shallow.v.bias", 0);
    set(store, "mpp.shallow.o.bias", 0);
    const auto v = random_tensor({8}, 3);
    auto pyr = random_pyramid(5, 9, 8, 4);
    for (std::size_t l = 0; l < 4; ++l)
        for (std::size_t i = 0; i < 9; ++i)
            for (std::size_t c = 0; c < 8; ++c) pyr.maps[l](i, c) = v[c];
    const auto out = fuse_shallow(pyr, store, cfg);
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(out(i, c), v[c], 1e-14);
}

TEST(MppFuseShallow, MatchesConcatAttentionOracle) {
    for (std::size_t heads : {1, 2}) {
        auto cfg = small_config();
        cfg.heads = heads;
        auto store = make_store(cfg, 5);
        const auto pyr = random_pyramid(5, 9, 8, 6);
        std::vector<oracle::Mat> shallow;
        for (std::size_t l = 0; l < 4; ++l) shallow.push_back(oracle::to_mat(pyr.maps[l]));
        const auto expected =
            block_oracle(store, "mpp.shallow", oracle::to_mat(pyr.deep()), oracle::concat(shallow), heads);
        EXPECT_LT(oracle::max_diff(fuse_shallow(pyr, store, cfg), expected), 1e-8);
    }
}

TEST(MppFuseShallow, UnprojectedQueryOption) {
    auto cfg = small_config();
    cfg.project_query = false;
    auto store = make_store(cfg, 7);
    EXPECT_FALSE(store.contains("mpp.shallow.q.weight"));
    EXPECT_TRUE(store.contains("mpp.local.q.weight"));
    const auto pyr = random_pyramid(5, 9, 8, 8);
    std::vector<oracle::Mat> shallow;
    for (std::size_t l = 0; l < 4; ++l) shallow.push_back(oracle::to_mat(pyr.maps[l]));
    const auto expected =
        block_oracle(store, "mpp.shallow", oracle::to_mat(pyr.deep()), oracle::concat(shallow), 1, false);
    EXPECT_LT(oracle::max_diff(fuse_shallow(pyr, store, cfg), expected), 1e-8);
}

TEST(MppProjectLocal, ZeroInputZeroBias) {
    const auto cfg = small_config();
    nn::ParameterStore<double> store;
    Rng rng(9);
    init_mpp(store, cfg, rng);
    const auto out = project_local(nn::Tensor<double>({16, 5}), store, cfg);
    ASSERT_EQ(out.shape(), (nn::Shape{16, 8}));
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(MppProjectLocal, IdentityWeightsPassThrough) {
    const auto cfg = small_config(8, 8);
    auto store = make_store(cfg, 10);
    store.get("mpp.local_proj.weight").value = identity(8);
    set(store, "mpp.local_proj.bias", 0);
    const auto x = random_tensor({16, 8}, 11);
    EXPECT_EQ(project_local(x, store, cfg), x);
}

TEST(MppProjectLocal, MatchesLoopOracle) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 12);
    const auto x = random_tensor({16, 5}, 13);
    const auto expected = oracle::linear(oracle::to_mat(x), oracle::to_mat(store.get("mpp.local_proj.weight").value),
                                         oracle::to_vec(store.get("mpp.local_proj.bias").value));
    EXPECT_LT(oracle::max_diff(project_local(x, store, cfg), expected), 1e-10);
    EXPECT_THROW(project_local(random_tensor({16, 4}, 13), store, cfg), Error);
}

TEST(MppFuseLocal, GammaZeroIsPureCrossAttention) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 14);
    set(store, "mpp.gamma1", 0.0);
    const auto x = random_tensor({9, 8}, 15), local = random_tensor({16, 8}, 16);
    nn::Graph<double> g;
    const auto cross = g.value(attention_block(g, store, "mpp.local", g.input(x), g.input(local), cfg.heads));
    EXPECT_EQ(fuse_local(x, local, store, cfg), cross);
}

TEST(MppFuseLocal, ZeroValueProjectionLeavesScaledResidual) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 17);
    set(store, "mpp.gamma1", 0.75);
    set(store, "mpp.local.v.weight", 0);
    set(store, "mpp.local.v.bias", 0);
    set(store, "mpp.local.o.bias", 0);
    const auto x = random_tensor({9, 8}, 18), local = random_tensor({16, 8}, 19);
    const auto out = fuse_local(x, local, store, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(out[i], 0.75 * x[i]);
}

TEST(MppFuseLocal, MatchesOracle) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 20);
    set(store, "mpp.gamma1", 0.3);
    const auto x = random_tensor({9, 8}, 21), local = random_tensor({16, 8}, 22);
    const auto xm = oracle::to_mat(x);
    const auto expected = oracle::add(block_oracle(store, "mpp.local", xm, oracle::to_mat(local), 1), xm, 0.3);
    EXPECT_LT(oracle::max_diff(fuse_local(x, local, store, cfg), expected), 1e-8);
    EXPECT_THROW(fuse_local(x, random_tensor({16, 7}, 22), store, cfg), Error);
}

TEST(MppRefine, GammaZeroIsPureSelfAttention) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 23);
    set(store, "mpp.gamma2", 0.0);
    const auto x = random_tensor({9, 8}, 24);
    nn::Graph<double> g;
    const nn::Var xv = g.input(x);
    const auto self = g.value(attention_block(g, store, "mpp.self", xv, xv, cfg.heads));
    EXPECT_EQ(refine(x, store, cfg), self);
}

TEST(MppRefine, SingleTokenScalesByOnePlusGamma) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 25);
    set(store, "mpp.gamma2", 0.5);
    store.get("mpp.self.v.weight").value = identity(8);
    store.get("mpp.self.o.weight").value = identity(8);
    set(store, "mpp.self.v.bias", 0);
    set(store, "mpp.self.o.bias", 0);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto x = random_tensor({1, 8}, 26 + seed);
        const auto out = refine(x, store, cfg);
        for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(out[c], 1.5 * x[c]);
    }
}

TEST(MppRefine, MatchesOracle) {
    auto cfg = small_config();
    cfg.heads = 2;
    auto store = make_store(cfg, 27);
    set(store, "mpp.gamma2", -0.4);
    const auto x = random_tensor({9, 8}, 28);
    const auto xm = oracle::to_mat(x);
    const auto expected = oracle::add(block_oracle(store, "mpp.self", xm, xm, 2), xm, -0.4);
    EXPECT_LT(oracle::max_diff(refine(x, store, cfg), expected), 1e-8);
}

TEST(MppTokenSpace, ZeroWeightsGiveFinalBias) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 29);
    set(store, "mpp.mlp.w1", 0);
    set(store, "mpp.mlp.w2", 0);
    const auto out = to_token_space(random_tensor({9, 8}, 30), store, cfg);
    ASSERT_EQ(out.shape(), (nn::Shape{9, 6}));
    const auto& b2 = store.get("mpp.mlp.b2").value;
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(out(i, j), b2[j]);
}

TEST(MppTokenSpace, MatchesComposedOracle) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 31);
    const auto x = random_tensor({9, 8}, 32);
    EXPECT_LT(oracle::max_diff(to_token_space(x, store, cfg), mlp_oracle(store, oracle::to_mat(x))), 1e-8);
}

TEST(MppForward, ShapesAndTokenCount) {
    MppConfig cfg;
    auto store = make_store(cfg, 33);
    const auto out = mpp_forward(random_pyramid(5, 9, 8, 34), random_tensor({16, 64}, 35), store, cfg);
    EXPECT_EQ(out.shape(), (nn::Shape{9, 64}));
}

TEST(MppForward, MatchesFullOracle) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 36);
    set(store, "mpp.gamma1", 0.6);
    set(store, "mpp.gamma2", 1.3);
    const auto pyr = random_pyramid(5, 9, 8, 37);
    const auto f_attn = random_tensor({16, 5}, 38);
    std::vector<oracle::Mat> shallow;
    for (std::size_t l = 0; l < 4; ++l) shallow.push_back(oracle::to_mat(pyr.maps[l]));
    const auto s = block_oracle(store, "mpp.shallow", oracle::to_mat(pyr.deep()), oracle::concat(shallow), 1);
    const auto local = oracle::linear(oracle::to_mat(f_attn), oracle::to_mat(store.get("mpp.local_proj.weight").value),
                                      oracle::to_vec(store.get("mpp.local_proj.bias").value));
    const auto fused = oracle::add(block_oracle(store, "mpp.local", s, local, 1), s, 0.6);
    const auto refined = oracle::add(block_oracle(store, "mpp.self", fused, fused, 1), fused, 1.3);
    EXPECT_LT(oracle::max_diff(mpp_forward(pyr, f_attn, store, cfg), mlp_oracle(store, refined)), 1e-8);
}

TEST(MppForward, ZeroPropagation) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 39);
    set(store, "mpp.gamma1", 0);
    set(store, "mpp.gamma2", 0);
    for (const char* b : {"mpp.shallow", "mpp.local", "mpp.self"}) {
        set(store, std::string(b) + ".v.weight", 0);
        set(store, std::string(b) + ".v.bias", 0);
        set(store, std::string(b) + ".o.bias", 0);
    }
    for (const char* m : {"mpp.mlp.w1", "mpp.mlp.b1", "mpp.mlp.w2", "mpp.mlp.b2"}) set(store, m, 0);
    const auto out = mpp_forward(random_pyramid(5, 9, 8, 40), random_tensor({16, 5}, 41), store, cfg);
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(MppForward, ReducesToMlpOfShallowFusionWhenBlocksZeroed) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 42);
    set(store, "mpp.gamma1", 1);
    set(store, "mpp.gamma2", 1);
    for (const char* b : {"mpp.local", "mpp.self"})
        for (const char* m : {".v.weight", ".v.bias", ".o.weight", ".o.bias"}) set(store, std::string(b) + m, 0);
    const auto pyr = random_pyramid(5, 9, 8, 43);
    const auto out = mpp_forward(pyr, random_tensor({16, 5}, 44), store, cfg);
    EXPECT_EQ(out, to_token_space(fuse_shallow(pyr, store, cfg), store, cfg));
}

TEST(MppForward, GradCheckAllParameters64) {
    auto cfg = small_config();
    cfg.heads = 2;
    auto store = make_store(cfg, 45);
    set(store, "mpp.gamma1", 0.8);
    set(store, "mpp.gamma2", 1.1);
    const auto pyr = random_pyramid(5, 4, 8, 46);
    const auto f_attn = random_tensor({16, 5}, 47);
    auto build = [&](nn::Graph<double>& g, nn::ParameterStore<double>& s) {
        std::vector<nn::Var> maps;
        for (const auto& m : pyr.maps) maps.push_back(g.input(m));
        return g.sum(mpp_forward(g, s, cfg, maps, g.input(f_attn)));
    };
    const auto report = nn::grad_check(build, store);
    EXPECT_LT(report.max_rel_error, 1e-6);
    EXPECT_EQ(report.params.size(), store.size());
    EXPECT_GT(report.param("mpp.gamma1").max_abs_analytic, 0.0);
    EXPECT_GT(report.param("mpp.gamma2").max_abs_analytic, 0.0);
}

TEST(MppForward, GradCheck32AgainstWideReference) {
    const auto cfg = small_config();
    auto store = make_store<float>(cfg, 48);
    const auto pyr = random_pyramid(5, 4, 8, 49);
    const auto f_attn = random_tensor({16, 5}, 50);
    auto build = [&]<typename T>(nn::Graph<T>& g, nn::ParameterStore<T>& s) {
        std::vector<nn::Var> maps;
        for (const auto& m : pyr.maps) maps.push_back(g.input(m.template cast<T>()));
        return g.sum(mpp_forward(g, s, cfg, maps, g.input(f_attn.template cast<T>())));
    };
    EXPECT_LT(nn::grad_check_reference(build, store).max_rel_error, 1e-4);
}

TEST(MppForward, GammaGradientsNonzeroAcrossSeeds) {
    const auto cfg = small_config();
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto store = make_store(cfg, 60 + seed);
        const auto pyr = random_pyramid(5, 9, 8, 70 + seed);
        const auto f_attn = random_tensor({16, 5}, 80 + seed);
        const auto weights = random_tensor({9, 6}, 90 + seed);
        nn::Graph<double> g;
        std::vector<nn::Var> maps;
        for (const auto& m : pyr.maps) maps.push_back(g.input(m));
        const nn::Var out = mpp_forward(g, store, cfg, maps, g.input(f_attn));
        const nn::Var loss = g.sum(g.matmul_nt(g.reshape(out, {1, 54}), g.input(weights.reshaped({1, 54}))));
        store.zero_grads();
        g.backward(loss);
        EXPECT_NE(store.get("mpp.gamma1").grad[0], 0.0) << seed;
        EXPECT_NE(store.get("mpp.gamma2").grad[0], 0.0) << seed;
        EXPECT_TRUE(std::isfinite(gamma(store, "mpp.gamma1")));
    }
}
