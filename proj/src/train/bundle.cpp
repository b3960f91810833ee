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

#include "fea/train/bundle.hpp"

#include <bit>
#include <cstdio>
#include <fstream>

#include "fea/common/rng.hpp"

namespace fea::train {

using nn::Graph;
using nn::ParameterStore;
using nn::Tensor;
using nn::Var;

namespace {

nlohmann::json encoder_json(const vision::EncoderSpec& e) {
    return {{"grid", e.grid}, {"channels", e.channels}, {"total_layers", e.total_layers}, {"taps", e.taps},
            {"seed", e.seed}};
}

vision::EncoderSpec encoder_from_json(const nlohmann::json& j) {
    vision::EncoderSpec e;
    e.grid = j.value("grid", e.grid);
    e.channels = j.value("channels", e.channels);
    e.total_layers = j.value("total_layers", e.total_layers);
    e.taps = j.value("taps", e.taps);
    e.seed = j.value("seed", e.seed);
    return e;
}

nlohmann::json lca_json(const model::LcaConfig& c) {
    return {{"d", c.d},           {"conv_layers", c.conv_layers}, {"kernel", c.kernel},
            {"stride", c.stride}, {"padding", c.padding},         {"token_dim", c.token_dim},
            {"activate_last", c.activate_last}, {"learned_qkv", c.learned_qkv}};
}

model::LcaConfig lca_from_json(const nlohmann::json& j) {
    model::LcaConfig c;
    c.d = j.value("d", c.d);
    c.conv_layers = j.value("conv_layers", c.conv_layers);
    c.kernel = j.value("kernel", c.kernel);
    c.stride = j.value("stride", c.stride);
    c.padding = j.value("padding", c.padding);
    c.token_dim = j.value("token_dim", c.token_dim);
    c.activate_last = j.value("activate_last", c.activate_last);
    c.learned_qkv = j.value("learned_qkv", c.learned_qkv);
    return c;
}

nlohmann::json mpp_json(const model::MppConfig& c) {
    return {{"shallow_layers", c.shallow_layers}, {"deep_layer", c.deep_layer},   {"channels", c.channels},
            {"local_dim", c.local_dim},           {"token_dim", c.token_dim},     {"mlp_hidden", c.mlp_hidden},
            {"heads", c.heads},                   {"gamma1_init", c.gamma1_init}, {"gamma2_init", c.gamma2_init},
            {"project_query", c.project_query}};
}

model::MppConfig mpp_from_json(const nlohmann::json& j) {
    model::MppConfig c;
    c.shallow_layers = j.value("shallow_layers", c.shallow_layers);
    c.deep_layer = j.value("deep_layer", c.deep_layer);
    c.channels = j.value("channels", c.channels);
    c.local_dim = j.value("local_dim", c.local_dim);
    c.token_dim = j.value("token_dim", c.token_dim);
    c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
    c.heads = j.value("heads", c.heads);
    c.gamma1_init = j.value("gamma1_init", c.gamma1_init);
    c.gamma2_init = j.value("gamma2_init", c.gamma2_init);
    c.project_query = j.value("project_query", c.project_query);
    return c;
}

constexpr char kMagic[8] = {'F', 'E', 'A', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void BundleConfig::validate() const {
    encoder.validate();
    lca.validate();
    mpp.validate();
    lm.validate();
    lora.validate(lm);
    require(lca.token_dim == lm.width && mpp.token_dim == lm.width, ErrorKind::Config,
            "token widths disagree: LCA " + std::to_string(lca.token_dim) + ", MPP " +
                std::to_string(mpp.token_dim) + ", LM " + std::to_string(lm.width));
    require(mpp.channels == encoder.channels, ErrorKind::Config,
            "MPP channels " + std::to_string(mpp.channels) + " differ from encoder channels " +
                std::to_string(encoder.channels));
    require(mpp.local_dim == lca.d, ErrorKind::Config,
            "MPP local width " + std::to_string(mpp.local_dim) + " differs from LCA width " + std::to_string(lca.d));
    std::vector<std::size_t> layers = mpp.shallow_layers;
    layers.push_back(mpp.deep_layer);
    require(layers == encoder.taps, ErrorKind::Config, "MPP layers do not match the encoder taps");
    require(encoder.tokens() + 2 <= lm.context, ErrorKind::Config,
            "LM context " + std::to_string(lm.context) + " cannot hold " + std::to_string(encoder.tokens()) +
                " visual tokens, the local token and one text token");
}

nlohmann::json BundleConfig::to_json() const {
    return {{"encoder", encoder_json(encoder)},
            {"lca", lca_json(lca)},
            {"mpp", mpp_json(mpp)},
            {"lm", train::to_json(lm)},
            {"lora", train::to_json(lora)},
            {"crop", crop == vision::CropMode::Strip ? "strip" : "square"}};
}

BundleConfig BundleConfig::from_json(const nlohmann::json& j) {
    try {
        BundleConfig c;
        if (j.contains("encoder")) c.encoder = encoder_from_json(j["encoder"]);
        if (j.contains("lca")) c.lca = lca_from_json(j["lca"]);
        if (j.contains("mpp")) c.mpp = mpp_from_json(j["mpp"]);
        if (j.contains("lm")) c.lm = toy_lm_config_from_json(j["lm"]);
        if (j.contains("lora")) c.lora = lora_config_from_json(j["lora"]);
        const std::string crop = j.value("crop", std::string("strip"));
        require(crop == "strip" || crop == "square", ErrorKind::Config, "crop must be 'strip' or 'square'");
        c.crop = crop == "strip" ? vision::CropMode::Strip : vision::CropMode::Square;
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Config, std::string("bundle config: ") + e.what());
    }
}

std::uint64_t BundleConfig::hash() const { return fnv1a(to_json().dump()); }

BundleConfig BundleConfig::toy(std::size_t vocab) {
    BundleConfig c;
    c.encoder.grid = 3;
    c.encoder.channels = 8;
    c.lca.d = 8;
    c.lca.token_dim = 32;
    c.mpp.channels = 8;
    c.mpp.local_dim = 8;
    c.mpp.token_dim = 32;
    c.mpp.mlp_hidden = 32;
    c.lm.vocab = vocab;
    c.lm.width = 32;
    c.lm.layers = 2;
    c.lm.heads = 2;
    c.lm.context = 64;
    c.lm.mlp_hidden = 64;
    c.lora.rank = 16;
    return c;
}

std::vector<std::uint8_t> SequenceLayout::loss_mask() const {
    require(response > 0, ErrorKind::Validation, "sequence layout: empty response");
    std::vector<std::uint8_t> mask(input_length(), 0);
    for (std::size_t i = prefix() - 1; i < input_length(); ++i) mask[i] = 1;
    return mask;
}

std::vector<std::size_t> SequenceLayout::targets(const std::vector<std::size_t>& response_ids) const {
    require(response_ids.size() == response, ErrorKind::Shape, "sequence layout: response length mismatch");
    std::vector<std::size_t> t(input_length(), 0);
    for (std::size_t k = 0; k < response; ++k) t[prefix() - 1 + k] = response_ids[k];
    return t;
}

template <typename T>
ModelBundle<T>::ModelBundle(BundleConfig config, Tokenizer tokenizer, std::uint64_t seed)
    : config_(std::move(config)), tokenizer_(std::move(tokenizer)), seed_(seed), encoder_(config_.encoder) {
    config_.validate();
    require(config_.lm.vocab == tokenizer_.size(), ErrorKind::Config,
            "LM vocabulary " + std::to_string(config_.lm.vocab) + " differs from tokenizer size " +
                std::to_string(tokenizer_.size()));
    Rng lca_rng(Rng::mix(seed, 1)), mpp_rng(Rng::mix(seed, 2)), lm_rng(Rng::mix(seed, 3)), lora_rng(Rng::mix(seed, 4));
    model::init_lca(params_, config_.lca, lca_rng);
    model::init_mpp(params_, config_.mpp, mpp_rng);
    init_toy_lm(params_, config_.lm, lm_rng);
    init_lora(params_, config_.lm, config_.lora, lora_rng);
}

template <typename T>
VisualInput<T> ModelBundle<T>::prepare(const vision::Image<T>& image) const {
    return {encoder_.encode(image), vision::crop_regions(image, config_.crop)};
}

template <typename T>
std::pair<Var, Var> ModelBundle<T>::visual_tokens(Graph<T>& g, const VisualInput<T>& input) {
    const auto lca = model::lca_forward(g, params_, config_.lca, input.regions);
    std::vector<Var> pyramid;
    for (const auto& m : input.pyramid.maps) pyramid.push_back(g.input(m));
    const Var f_vision = model::mpp_forward(g, params_, config_.mpp, pyramid, lca.f_attn);
    return {f_vision, lca.f_local};
}

template <typename T>
Var ModelBundle<T>::logits(Graph<T>& g, Var f_vision, Var f_local, const std::vector<std::size_t>& tokens) {
    Var seq;
    if (tokens.empty()) {
        seq = assemble_tokens(g, f_vision, f_local, nullptr);
    } else {
        const Var emb = embed_tokens(g, params_, tokens);
        seq = assemble_tokens(g, f_vision, f_local, &emb);
    }
    return lm_forward(g, params_, config_.lm, &config_.lora, seq);
}

template <typename T>
Tensor<T> assemble_tokens(const Tensor<T>& f_vision, const Tensor<T>& f_local, const Tensor<T>& instruction) {
    const std::size_t d = f_vision.cols();
    require(f_local.size() == d, ErrorKind::Shape,
            "assemble_tokens: local token has " + std::to_string(f_local.size()) + " entries, expected " +
                std::to_string(d));
    require(instruction.empty() || (instruction.rank() == 2 && instruction.cols() == d), ErrorKind::Shape,
            "assemble_tokens: instruction width " + nn::shape_str(instruction.shape()) + " differs from " +
                std::to_string(d));
    const std::size_t t = instruction.empty() ? 0 : instruction.rows();
    Tensor<T> out({f_vision.rows() + 1 + t, d});
    auto it = std::copy(f_vision.data().begin(), f_vision.data().end(), out.data().begin());
    it = std::copy(f_local.data().begin(), f_local.data().end(), it);
    std::copy(instruction.data().begin(), instruction.data().end(), it);
    return out;
}

template <typename T>
Var assemble_tokens(Graph<T>& g, Var f_vision, Var f_local, const Var* instruction) {
    const std::size_t d = g.value(f_vision).cols();
    require(g.value(f_local).size() == d, ErrorKind::Shape, "assemble_tokens: local token width differs");
    std::vector<Var> parts{f_vision, g.reshape(f_local, {1, d})};
    if (instruction) {
        require(g.value(*instruction).cols() == d, ErrorKind::Shape, "assemble_tokens: instruction width differs");
        parts.push_back(*instruction);
    }
    return g.concat_rows(parts);
}

std::vector<std::size_t> instruction_ids(const Tokenizer& tok, const std::string& question) {
    std::vector<std::size_t> ids{Tokenizer::kBos};
    for (auto id : tok.encode(question)) ids.push_back(id);
    return ids;
}

std::vector<std::size_t> response_ids(const Tokenizer& tok, const std::string& answer) {
    auto ids = tok.encode(answer);
    ids.push_back(Tokenizer::kEos);
    return ids;
}

template <typename T>
std::vector<std::size_t> generate_ids(ModelBundle<T>& bundle, const VisualInput<T>& input,
                                      const std::string& question, std::size_t max_tokens) {
    if (max_tokens == 0) return {};
    const auto prompt = instruction_ids(bundle.tokenizer(), question);
    const std::size_t prefix = input.pyramid.tokens() + 1 + prompt.size();
    const std::size_t needed = prefix + max_tokens - 1;
    const std::size_t context = bundle.config().lm.context;
    require(needed <= context, ErrorKind::Validation,
            "generate: " + std::to_string(max_tokens) + " new tokens after a prefix of " + std::to_string(prefix) +
                " need a context of " + std::to_string(needed) + ", model has " + std::to_string(context));

    Tensor<T> f_vision, f_local;
    {
        Graph<T> g;
        const auto [fv, fl] = bundle.visual_tokens(g, input);
        f_vision = g.value(fv);
        f_local = g.value(fl);
    }
    std::vector<std::size_t> tokens = prompt, out;
    while (out.size() < max_tokens) {
        Graph<T> g;
        const Var logits = bundle.logits(g, g.input(f_vision), g.input(f_local), tokens);
        const auto last = g.value(logits).row(g.value(logits).rows() - 1);
        const std::size_t next =
            static_cast<std::size_t>(std::max_element(last.begin(), last.end()) - last.begin());
        if (next == Tokenizer::kEos) break;
        out.push_back(next);
        tokens.push_back(next);
    }
    return out;
}

template <typename T>
std::string generate(ModelBundle<T>& bundle, const VisualInput<T>& input, const std::string& question,
                     std::size_t max_tokens) {
    return bundle.tokenizer().decode(generate_ids(bundle, input, question, max_tokens));
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ModelBundle<T>& bundle,
                     const nlohmann::json& provenance) {
    static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["config"] = bundle.config().to_json();
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(bundle.config().hash()));
    manifest["config_hash"] = hash;
    manifest["seed"] = bundle.seed();
    manifest["tokenizer"] = bundle.tokenizer().to_json();
    manifest["provenance"] = provenance;
    auto tensors = nlohmann::json::array();
    std::vector<double> payload;
    bundle.params().for_each([&](const nn::Parameter<T>& p) {
        tensors.push_back({{"name", p.name}, {"group", p.group}, {"shape", p.value.shape()}, {"trainable", p.trainable}});
        payload.insert(payload.end(), p.value.data().begin(), p.value.data().end());
    });
    manifest["tensors"] = tensors;
    const std::string text = manifest.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Config, "cannot write checkpoint " + path.string());
    const std::uint64_t len = text.size();
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(double)));
    require(out.good(), ErrorKind::Config, "failed writing checkpoint " + path.string());
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::Config, "cannot open checkpoint " + path.string());
    char magic[sizeof kMagic];
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    require(in.good() && std::equal(magic, magic + sizeof magic, kMagic), ErrorKind::Parse,
            path.string() + " is not a checkpoint (bad magic)");
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    require(in.good() && len < (1ULL << 32), ErrorKind::Parse, "checkpoint manifest length is corrupt");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    require(in.good(), ErrorKind::Parse, "checkpoint manifest is truncated");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("checkpoint manifest: ") + e.what());
    }
    LoadedCheckpoint<T> loaded{ModelBundle<T>(BundleConfig::from_json(manifest.at("config")),
                                              Tokenizer::from_json(manifest.at("tokenizer")),
                                              manifest.at("seed").get<std::uint64_t>()),
                               manifest.value("provenance", nlohmann::json::object())};
    auto& store = loaded.bundle.params();
    const auto& tensors = manifest.at("tensors");
    require(tensors.size() == store.size(), ErrorKind::Parse,
            "checkpoint holds " + std::to_string(tensors.size()) + " tensors, configuration expects " +
                std::to_string(store.size()));
    for (const auto& t : tensors) {
        auto& p = store.get(t.at("name").get<std::string>());
        const auto shape = t.at("shape").get<nn::Shape>();
        require(shape == p.value.shape(), ErrorKind::Parse,
                "checkpoint tensor " + p.name + " has shape " + nn::shape_str(shape) + ", expected " +
                    nn::shape_str(p.value.shape()));
        std::vector<double> buf(p.value.size());
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
        require(in.good(), ErrorKind::Parse, "checkpoint payload is truncated at " + p.name);
        for (std::size_t i = 0; i < buf.size(); ++i) p.value[i] = static_cast<T>(buf[i]);
        p.trainable = t.value("trainable", true);
    }
    in.peek();
    require(in.eof(), ErrorKind::Parse, "checkpoint has trailing bytes");
    return loaded;
}

#define FEA_INSTANTIATE_BUNDLE(T)                                                                                \
    template class ModelBundle<T>;                                                                              \
    template Tensor<T> assemble_tokens(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                   \
    template Var assemble_tokens(Graph<T>&, Var, Var, const Var*);                                              \
    template std::vector<std::size_t> generate_ids(ModelBundle<T>&, const VisualInput<T>&, const std::string&,  \
                                                   std::size_t);                                                \
    template std::string generate(ModelBundle<T>&, const VisualInput<T>&, const std::string&, std::size_t);     \
    template void save_checkpoint(const std::filesystem::path&, const ModelBundle<T>&, const nlohmann::json&);  \
    template LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path&);

FEA_INSTANTIATE_BUNDLE(float)
FEA_INSTANTIATE_BUNDLE(double)

#undef FEA_INSTANTIATE_BUNDLE

}  // namespace fea::train
