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

// One generic builder per differentiable graph op, usable at both precisions.

#include <array>
#include <string>

#include "fea/nn/graph.hpp"
#include "test_util.hpp"

namespace fea::testing {

/// sum(y ⊙ w) for a fixed random w, via reshape and matmul.
template <typename T>
nn::Var weighted_sum(nn::Graph<T>& g, nn::Var y, std::uint64_t seed) {
    const auto& v = g.value(y);
    const auto w = random_tensor<T>(v.shape(), seed);
    nn::Var flat = g.reshape(y, {1, v.size()});
    nn::Var col = g.input(w.reshaped({v.size(), 1}));
    return g.reshape(g.matmul(flat, col), {1});
}

template <typename T>
nn::Var build_op(const std::string& op, nn::Graph<T>& g, nn::ParameterStore<T>& s) {
    auto p = [&](const char* name) { return g.param(s.get(name)); };
    if (op == "matmul") return weighted_sum(g, g.matmul(p("x"), p("w")), 1);
    if (op == "matmul_nt") return weighted_sum(g, g.matmul_nt(p("x"), p("y")), 11);
    if (op == "add") return weighted_sum(g, g.add(p("x"), p("y")), 12);
    if (op == "scale") return weighted_sum(g, g.scale(p("x"), T(-1.75)), 13);
    if (op == "linear") return weighted_sum(g, g.linear(p("x"), p("w"), p("b")), 1);
    if (op == "softmax") return weighted_sum(g, g.softmax_rows(p("x")), 2);
    if (op == "gelu") return weighted_sum(g, g.gelu(p("x")), 3);
    if (op == "attention") return weighted_sum(g, g.attention(p("q"), p("k"), p("v")), 4);
    if (op == "attention_mh_causal") return weighted_sum(g, g.attention(p("q"), p("k"), p("v"), {2, true}), 5);
    if (op == "conv2d") return weighted_sum(g, g.conv2d(p("img"), p("ker"), p("kb"), {2, 1}), 6);
    if (op == "avgpool") return weighted_sum(g, g.avgpool_global(p("img")), 7);
    if (op == "mlp2") {
        auto h = g.gelu(g.linear(p("x"), p("w"), p("b")));
        return weighted_sum(g, g.linear(h, p("w2"), p("b2")), 8);
    }
    if (op == "rms_norm") return weighted_sum(g, g.rms_norm(p("x"), p("gain"), T(1e-6)), 9);
    if (op == "scale_by") return weighted_sum(g, g.scale_by(p("x"), p("gamma")), 10);
    if (op == "reshape") return weighted_sum(g, g.gelu(g.reshape(p("x"), {5, 4})), 14);
    if (op == "concat_rows") {
        const std::array<nn::Var, 2> parts{p("x"), p("y")};
        return weighted_sum(g, g.gelu(g.concat_rows(parts)), 15);
    }
    if (op == "slice_rows") return weighted_sum(g, g.slice_rows(p("x"), 1, 3), 16);
    if (op == "gather_rows") return weighted_sum(g, g.gather_rows(p("x"), {3, 0, 3, 2}), 17);
    if (op == "sum") return g.sum(g.gelu(p("x")));
    if (op == "cross_entropy") return g.masked_cross_entropy(p("x"), {0, 2, 1, 3}, {1, 0, 1, 1});
    fail(ErrorKind::Config, "unknown op " + op);
}

inline nn::ParameterStore<double> op_store(const std::string& op) {
    nn::ParameterStore<double> s;
    auto add = [&](const char* n, nn::Shape sh, std::uint64_t seed) {
        s.add(n, "test", random_tensor(sh, seed, 0.8));
    };
    if (op == "linear" || op == "mlp2" || op == "matmul") {
        add("x", {3, 4}, 1);
        add("w", {4, 5}, 2);
        if (op != "matmul") add("b", {5}, 3);
        if (op == "mlp2") {
            add("w2", {5, 2}, 4);
            add("b2", {2}, 5);
        }
    } else if (op == "matmul_nt") {
        add("x", {3, 4}, 17);
        add("y", {5, 4}, 18);
    } else if (op == "add" || op == "concat_rows") {
        add("x", {3, 4}, 19);
        add("y", {op == "add" ? 3u : 2u, 4}, 20);
    } else if (op == "softmax" || op == "gelu" || op == "cross_entropy" || op == "scale" || op == "reshape" ||
               op == "slice_rows" || op == "gather_rows" || op == "sum") {
        add("x", {4, 5}, 6);
    } else if (op.rfind("attention", 0) == 0) {
        add("q", {4, 4}, 7);
        add("k", {4, 4}, 8);
        add("v", {4, 6}, 9);
    } else if (op == "conv2d" || op == "avgpool") {
        add("img", {6, 5, 2}, 10);
        add("ker", {3, 3, 2, 3}, 11);
        add("kb", {3}, 12);
    } else if (op == "rms_norm") {
        add("x", {3, 5}, 13);
        add("gain", {5}, 14);
    } else if (op == "scale_by") {
        add("x", {3, 2}, 15);
        add("gamma", {1}, 16);
    }
    return s;
}

inline constexpr std::array<const char*, 20> kGradOps{
    "matmul",      "matmul_nt", "add",        "scale",       "linear",   "softmax",  "gelu",
    "attention",   "attention_mh_causal",     "conv2d",      "avgpool",  "mlp2",     "rms_norm",
    "scale_by",    "reshape",   "concat_rows", "slice_rows", "gather_rows", "sum",   "cross_entropy"};

}  // namespace fea::testing
