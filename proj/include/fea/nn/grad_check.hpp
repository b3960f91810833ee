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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fea/common/rng.hpp"
#include "fea/nn/graph.hpp"

namespace fea::nn {

struct GradCheckOptions {
    /// Central-difference step; <= 0 selects 1e-5 at 64-bit and 1e-3 at 32-bit.
    double eps = 0.0;
    /// Denominator floor in |a − n| / max(|a|, |n|, floor).
    double floor = 1e-3;
    /// 0 probes every entry; otherwise a seeded random subset per parameter.
    std::size_t max_probes_per_param = 0;
    std::uint64_t seed = 0;
};

struct ParamCheck {
    std::string name;
    bool frozen = false;
    std::size_t probes = 0;
    double max_rel_error = 0.0;
    double max_abs_analytic = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::vector<ParamCheck> params;

    const ParamCheck& param(const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p;
        fail(ErrorKind::Config, "grad_check: no report entry for '" + name + "'");
    }
};

namespace detail {

template <typename T, typename Build>
double evaluate(Build& build, ParameterStore<T>& store) {
    Graph<T> g;
    Var loss = build(g, store);
    require(g.value(loss).size() == 1, ErrorKind::Shape, "grad_check: function must return a scalar");
    return static_cast<double>(g.value(loss)[0]);
}

inline std::vector<std::size_t> probe_indices(std::size_t n, const GradCheckOptions& opts, std::uint64_t salt) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (opts.max_probes_per_param == 0 || opts.max_probes_per_param >= n) return idx;
    Rng rng(Rng::mix(opts.seed, salt));
    for (std::size_t i = 0; i + 1 < n; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
    idx.resize(opts.max_probes_per_param);
    return idx;
}

/// Analytic pass over `store`, numeric pass over `probe_store`, which must
/// hold the same parameter names (possibly at a different precision).
template <typename T, typename U, typename Build>
GradCheckReport run_grad_check(Build& build, ParameterStore<T>& store, ParameterStore<U>& probe_store,
                               const GradCheckOptions& opts) {
    store.zero_grads();
    {
        Graph<T> g;
        Var loss = build(g, store);
        require(g.value(loss).size() == 1, ErrorKind::Shape, "grad_check: function must return a scalar");
        g.backward(loss);
    }
    const double f0 = evaluate(build, store);
    const double f1 = evaluate(build, store);
    require(f0 == f1, ErrorKind::Validation,
            "grad_check: function is non-deterministic (two evaluations disagree)");

    const double eps = opts.eps > 0 ? opts.eps : (sizeof(U) >= 8 ? 1e-5 : 1e-3);
    GradCheckReport report;
    std::uint64_t salt = 0;
    for (const auto& name : store.names()) {
        Parameter<T>& p = store.get(name);
        ParamCheck pc;
        pc.name = name;
        pc.frozen = !p.trainable;
        for (std::size_t i = 0; i < p.grad.size(); ++i)
            pc.max_abs_analytic = std::max(pc.max_abs_analytic, std::abs(static_cast<double>(p.grad[i])));
        if (!p.trainable) {
            report.params.push_back(pc);
            ++salt;
            continue;
        }
        Parameter<U>& q = probe_store.get(name);
        for (std::size_t i : probe_indices(p.value.size(), opts, salt++)) {
            const U saved = q.value[i];
            q.value[i] = saved + static_cast<U>(eps);
            const double fp = evaluate(build, probe_store);
            q.value[i] = saved - static_cast<U>(eps);
            const double fm = evaluate(build, probe_store);
            q.value[i] = saved;
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = static_cast<double>(p.grad[i]);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
            pc.max_rel_error = std::max(pc.max_rel_error, std::abs(analytic - numeric) / denom);
            ++pc.probes;
        }
        report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
        report.params.push_back(pc);
    }
    return report;
}

}  // namespace detail

/// Compares hand-derived gradients against central differences.
/// `build(Graph<T>&, ParameterStore<T>&)` must bind parameters through
/// `Graph::param` and return a one-element loss node.
/// Frozen parameters are not probed; their analytic gradient is reported
/// (and is exactly zero by construction of the tape).
template <typename T, typename Build>
GradCheckReport grad_check(Build&& build, ParameterStore<T>& store, const GradCheckOptions& opts = {}) {
    return detail::run_grad_check<T, T>(build, store, store, opts);
}

/// 32-bit analytic gradients checked against 64-bit central differences of
/// the same function at the same (exactly widened) parameter values.
/// `build` must be generic over the scalar type.
template <typename Build>
GradCheckReport grad_check_reference(Build&& build, ParameterStore<float>& store, const GradCheckOptions& opts = {}) {
    ParameterStore<double> wide = store.template cast<double>();
    return detail::run_grad_check<float, double>(build, store, wide, opts);
}

}  // namespace fea::nn
