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

#include <algorithm>
#include <numeric>

#include "fea/model/lca.hpp"
#include "fea/nn/grad_check.hpp"
#include "test_util.hpp"

using namespace fea;
using namespace fea::model;
using fea::testing::random_tensor;
using fea::testing::uniform_tensor;
namespace oracle = fea::testing::oracle;

namespace {

LcaConfig small_config(std::size_t d = 4, std::size_t token_dim = 6) {
    LcaConfig cfg;
    cfg.d = d;
    cfg.token_dim = token_dim;
    return cfg;
}

template <typename T = double>
vision::LocalRegionSet<T> random_regions(std::uint64_t seed) {
    vision::LocalRegionSet<T> set;
    for (std::size_t i = 0; i < vision::kRegionCount; ++i) {
        set.regions.push_back(uniform_tensor<T>({48, 48, 3}, seed * 100 + i));
        set.specs.push_back(vision::canonical_crop_specs()[i]);
    }
    return set;
}

template <typename T = double>
nn::ParameterStore<T> make_store(const LcaConfig& cfg, std::uint64_t seed) {
    nn::ParameterStore<T> store;
    Rng rng(seed);
    init_lca(store, cfg, rng);
    // Nonzero biases so they take part in every oracle comparison.
    store.for_each([&](nn::Parameter<T>& p) {
        if (p.name.ends_with("bias"))
            for (auto& v : p.value.data()) v = static_cast<T>(rng.normal() * 0.1);
    });
    return store;
}

// Region feature of one (48, 48, 3) image from direct loops.
std::vector<double> region_oracle(const nn::Tensor<double>& region, nn::ParameterStore<double>& store,
                                  const LcaConfig& cfg) {
    nn::Tensor<double> x = region;
    for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
        const std::string p = "lca.conv" + std::to_string(i);
        x = oracle::conv2d(x, store.get(p + ".weight").value, store.get(p + ".bias").value,
                           cfg.stride, cfg.padding);
        if (i + 1 < cfg.conv_layers)
            for (auto& v : x.data()) v = oracle::gelu(v);
    }
    std::vector<double> mean(x.dim(2), 0.0);
    for (std::size_t y = 0; y < x.dim(0); ++y)
        for (std::size_t xx = 0; xx < x.dim(1); ++xx)
            for (std::size_t c = 0; c < x.dim(2); ++c) mean[c] += x(y, xx, c);
    for (auto& v : mean) v /= static_cast<double>(x.dim(0) * x.dim(1));
    return mean;
}

}  // namespace

TEST(LcaConfig, SpatialScheduleIsHalvedFourTimes) {
    EXPECT_EQ(LcaConfig{}.spatial_schedule(), (std::vector<std::size_t>{48, 24, 12, 6, 3}));
    LcaConfig deep;
    deep.conv_layers = 9;
    EXPECT_EQ(deep.spatial_schedule().back(), 1u);
    LcaConfig bad;
    bad.padding = 0;
    bad.conv_layers = 6;
    EXPECT_THROW(bad.validate(), Error);
    bad = LcaConfig{};
    bad.d = 0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(LcaConfig, IntermediateShapesFollowSchedule) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 1);
    nn::Tensor<double> x = uniform_tensor({48, 48, 3}, 2);
    const auto sides = cfg.spatial_schedule();
    for (std::size_t i = 0; i < cfg.conv_layers; ++i) {
        const std::string p = "lca.conv" + std::to_string(i);
        x = nn::ops::conv2d(x, store.get(p + ".weight").value, store.get(p + ".bias").value,
                            {cfg.stride, cfg.padding});
        EXPECT_EQ(x.shape(), (nn::Shape{sides[i + 1], sides[i + 1], cfg.d}));
    }
    EXPECT_EQ(nn::ops::avgpool_global(x).shape(), (nn::Shape{1, cfg.d}));
}

TEST(LcaForward, DefaultShapes) {
    LcaConfig cfg;
    auto store = make_store(cfg, 3);
    const auto r_local = extract_region_features(random_regions(1), store, cfg);
    EXPECT_EQ(r_local.shape(), (nn::Shape{16, 64}));
    const auto out = lca_forward(random_regions(1), store, cfg);
    EXPECT_EQ(out.f_attn.shape(), (nn::Shape{16, 64}));
    EXPECT_EQ(out.f_local.shape(), (nn::Shape{64}));
}

TEST(LcaForward, RegionFeaturesMatchLoopOracle) {
    const auto cfg = small_config(5);
    auto store = make_store(cfg, 4);
    const auto regions = random_regions(2);
    const auto r_local = extract_region_features(regions, store, cfg);
    for (std::size_t i = 0; i < 16; i += 5) {
        const auto expected = region_oracle(regions.regions[i], store, cfg);
        for (std::size_t c = 0; c < cfg.d; ++c) EXPECT_NEAR(r_local(i, c), expected[c], 1e-12);
    }
}

TEST(LcaForward, ZeroRegionsAndBiasesGiveZeroFeatures) {
    const auto cfg = small_config();
    nn::ParameterStore<double> store;
    Rng rng(5);
    init_lca(store, cfg, rng);
    vision::LocalRegionSet<double> zeros;
    for (std::size_t i = 0; i < 16; ++i) zeros.regions.emplace_back(nn::Shape{48, 48, 3});
    const auto r_local = extract_region_features(zeros, store, cfg);
    for (double v : r_local.data()) EXPECT_EQ(v, 0.0);
}

TEST(LcaForward, IdenticalRegionsGiveIdenticalRows) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 6);
    auto regions = random_regions(3);
    regions.regions[11] = regions.regions[2];
    const auto r_local = extract_region_features(regions, store, cfg);
    for (std::size_t c = 0; c < cfg.d; ++c) EXPECT_EQ(r_local(2, c), r_local(11, c));
}

TEST(LcaForward, RejectsWrongRegionCount) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 7);
    auto regions = random_regions(4);
    regions.regions.pop_back();
    EXPECT_THROW(extract_region_features(regions, store, cfg), Error);
    regions = random_regions(4);
    regions.regions[3] = uniform_tensor({48, 48, 4}, 1);
    EXPECT_THROW(extract_region_features(regions, store, cfg), Error);
}

TEST(LcaReweight, IdenticalRowsAreFixedPoints) {
    const auto cfg = small_config(6);
    auto store = make_store(cfg, 8);
    nn::Tensor<double> r({16, 6});
    const auto v = random_tensor({6}, 9);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t c = 0; c < 6; ++c) r(i, c) = v[c];
    const auto out = reweight_regions(r, store, cfg);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(out(i, c), v[c], 1e-14);
}

TEST(LcaReweight, PermutationEquivariant) {
    const auto cfg = small_config(8);
    auto store = make_store(cfg, 10);
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const auto r = random_tensor({16, 8}, 200 + static_cast<std::uint64_t>(trial));
        std::vector<std::size_t> perm(16);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 15; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
        nn::Tensor<double> rp({16, 8});
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t c = 0; c < 8; ++c) rp(i, c) = r(perm[i], c);
        const auto out = reweight_regions(r, store, cfg);
        const auto outp = reweight_regions(rp, store, cfg);
        // Equal up to the reordering of floating-point sums.
        for (std::size_t i = 0; i < 16; ++i)
            for (std::size_t c = 0; c < 8; ++c) EXPECT_NEAR(outp(i, c), out(perm[i], c), 1e-13);
    }
}

TEST(LcaReweight, RowsInConvexHull) {
    LcaConfig cfg;
    auto store = make_store(cfg, 12);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = random_tensor({16, 64}, 300 + seed, 3.0);
        const auto out = reweight_regions(r, store, cfg);
        for (std::size_t c = 0; c < 64; ++c) {
            double lo = 1e300, hi = -1e300;
            for (std::size_t i = 0; i < 16; ++i) {
                lo = std::min(lo, r(i, c));
                hi = std::max(hi, r(i, c));
            }
            for (std::size_t i = 0; i < 16; ++i) {
                EXPECT_GE(out(i, c), lo - 1e-12);
                EXPECT_LE(out(i, c), hi + 1e-12);
            }
        }
    }
}

TEST(LcaReweight, MatchesLoopOracle) {
    LcaConfig cfg;
    auto store = make_store(cfg, 13);
    const auto r = random_tensor({16, 64}, 14);
    const auto m = oracle::to_mat(r);
    EXPECT_LT(oracle::max_diff(reweight_regions(r, store, cfg), oracle::attention(m, m, m)), 1e-8);
}

TEST(LcaReweight, LearnedProjectionsBehindFlag) {
    auto cfg = small_config(4);
    cfg.learned_qkv = true;
    auto store = make_store(cfg, 15);
    ASSERT_TRUE(store.contains("lca.attn.q.weight"));
    const auto r = random_tensor({16, 4}, 16);
    const auto m = oracle::to_mat(r);
    auto proj = [&](const char* n) { return oracle::matmul(m, oracle::to_mat(store.get(n).value)); };
    const auto expected =
        oracle::attention(proj("lca.attn.q.weight"), proj("lca.attn.k.weight"), proj("lca.attn.v.weight"));
    EXPECT_LT(oracle::max_diff(reweight_regions(r, store, cfg), expected), 1e-12);
    EXPECT_FALSE(make_store(small_config(4), 15).contains("lca.attn.q.weight"));
}

TEST(LcaProject, ZeroInputZeroBias) {
    const auto cfg = small_config();
    nn::ParameterStore<double> store;
    Rng rng(17);
    init_lca(store, cfg, rng);
    const auto out = project_local_token(nn::Tensor<double>({16, cfg.d}), store, cfg);
    ASSERT_EQ(out.shape(), (nn::Shape{cfg.token_dim}));
    for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(LcaProject, DefaultTokenWidth) {
    LcaConfig cfg;
    auto store = make_store(cfg, 18);
    EXPECT_EQ(project_local_token(random_tensor({16, 64}, 19), store, cfg).shape(), (nn::Shape{64}));
}

TEST(LcaProject, MatchesFlattenThenLinear) {
    const auto cfg = small_config(5, 7);
    auto store = make_store(cfg, 20);
    const auto f = random_tensor({16, 5}, 21);
    oracle::Mat flat(1);
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t c = 0; c < 5; ++c) flat[0].push_back(f(i, c));
    const auto expected = oracle::linear(flat, oracle::to_mat(store.get("lca.out.weight").value),
                                         oracle::to_vec(store.get("lca.out.bias").value));
    const auto out = project_local_token(f, store, cfg);
    for (std::size_t j = 0; j < 7; ++j) EXPECT_NEAR(out[j], expected[0][j], 1e-10);
}

TEST(LcaForward, Deterministic) {
    const auto cfg = small_config();
    auto store = make_store(cfg, 22);
    const auto regions = random_regions(5);
    const auto a = lca_forward(regions, store, cfg), b = lca_forward(regions, store, cfg);
    EXPECT_EQ(a.f_attn, b.f_attn);
    EXPECT_EQ(a.f_local, b.f_local);
}

TEST(LcaForward, GradCheckSumOfLocalToken64) {
    const auto cfg = small_config(3, 4);
    auto store = make_store(cfg, 23);
    const auto regions = random_regions(6);
    auto build = [&](nn::Graph<double>& g, nn::ParameterStore<double>& s) {
        return g.sum(lca_forward(g, s, cfg, regions).f_local);
    };
    nn::GradCheckOptions opts;
    opts.max_probes_per_param = 24;
    const auto report = nn::grad_check(build, store, opts);
    EXPECT_LT(report.max_rel_error, 1e-6);
    EXPECT_EQ(report.params.size(), store.size());
}

TEST(LcaForward, GradCheckWeightedOutputs32) {
    auto cfg = small_config(3, 4);
    cfg.learned_qkv = true;
    auto store = make_store<float>(cfg, 24);
    const auto regions = random_regions<double>(7);
    const auto weights = random_tensor({1, 4}, 25);
    auto build = [&]<typename T>(nn::Graph<T>& g, nn::ParameterStore<T>& s) {
        vision::LocalRegionSet<T> r;
        for (const auto& x : regions.regions) r.regions.push_back(x.template cast<T>());
        const auto vars = lca_forward(g, s, cfg, r);
        const nn::Var w = g.input(weights.template cast<T>());
        return g.sum(g.matmul_nt(vars.f_local, w));
    };
    nn::GradCheckOptions opts;
    opts.max_probes_per_param = 16;
    EXPECT_LT(nn::grad_check_reference(build, store, opts).max_rel_error, 1e-4);
}
