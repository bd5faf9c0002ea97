#include "rsr/weights.hpp"

#include <cmath>
#include <string>

#include <json.hpp>

#include "random.hpp"
#include "rsr/errors.hpp"
#include "rsr/numerics.hpp"
#include "rsr/tensor_io.hpp"

namespace rsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Tensor random_kernel(Shape shape, detail::Rng& rng) {
    Tensor k(std::move(shape));
    std::size_t fan_in = 1;
    for (std::size_t a = 1; a < k.rank(); ++a) fan_in *= k.dim(a);
    const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (float& v : k.values()) v = static_cast<float>(rng.uniform(-bound, bound));
    return k;
}

std::vector<std::vector<Shape>> head_shapes(const PipelineConfig& c, bool feature) {
    std::vector<std::vector<Shape>> out;
    for (std::size_t s = 0; s < c.scales.size(); ++s) {
        if (feature) {
            out.push_back({{c.feat_channels, 3, 3, 3}, {c.feat_channels, c.feat_channels, 3, 3}});
        } else {
            out.push_back({{c.feat_channels, c.feat_channels, 3, 3}, {c.depth.bins, c.feat_channels, 1, 1}});
        }
    }
    return out;
}

std::vector<Shape> bev_shapes(const PipelineConfig& c, std::size_t hidden) {
    const std::size_t in = c.fused_channels() * c.grid.make().nz();
    const auto n = static_cast<std::size_t>(c.bins.count);
    return {{hidden, in, 3, 3}, {hidden, hidden, 3, 3}, {n, hidden, 1, 1}};
}

template <typename Make>
ImageHeads make_heads(const PipelineConfig& c, Make&& make) {
    ImageHeads h;
    for (auto& shapes : head_shapes(c, true)) {
        ConvStack st;
        for (auto& s : shapes) st.layers.push_back(make(s));
        h.feature.push_back(std::move(st));
    }
    for (auto& shapes : head_shapes(c, false)) {
        ConvStack st;
        for (auto& s : shapes) st.layers.push_back(make(s));
        h.depth.push_back(std::move(st));
    }
    return h;
}

// Fused channel of each scale's presence feature.
std::vector<std::size_t> presence_channels(const PipelineConfig& c, bool finest_only) {
    if (c.fusion == Fusion::Plus || finest_only) return {0};
    std::vector<std::size_t> ch;
    for (std::size_t s = 0; s < c.scales.size(); ++s) ch.push_back(s * c.feat_channels);
    return ch;
}

double readout_kernel(double r, double tau) {
    return tau > 0.0 ? std::exp(-r * r / (2.0 * tau * tau)) : -r * r;
}

Tensor aggregation_zero_hourglass(std::size_t c) { return Tensor::zeros({c, c, 3, 3, 3}); }

}  // namespace

ImageHeads zero_heads(const PipelineConfig& config) {
    return make_heads(config, [](const Shape& s) { return Tensor::zeros(s); });
}

ImageHeads random_heads(const PipelineConfig& config, std::uint64_t seed) {
    detail::Rng rng(detail::splitmix64(seed ^ 0x68656164ull));
    return make_heads(config, [&](const Shape& s) { return random_kernel(s, rng); });
}

MonoWeights zero_mono_weights(const PipelineConfig& config, std::size_t hidden) {
    MonoWeights w;
    w.heads = zero_heads(config);
    for (auto& s : bev_shapes(config, hidden)) w.bev_encoder.layers.push_back(Tensor::zeros(s));
    return w;
}

MonoWeights random_mono_weights(const PipelineConfig& config, std::uint64_t seed, std::size_t hidden) {
    MonoWeights w;
    w.heads = random_heads(config, seed);
    detail::Rng rng(detail::splitmix64(seed ^ 0x62657600ull));
    for (auto& s : bev_shapes(config, hidden)) w.bev_encoder.layers.push_back(random_kernel(s, rng));
    return w;
}

StereoWeights zero_stereo_weights(const PipelineConfig& config) {
    StereoWeights w;
    w.heads = zero_heads(config);
    w.sae_kernel = Tensor::zeros({1, 2, 1, 7, 7});
    const std::size_t g = config.groups;
    w.aggregation.init = {Tensor::zeros({g, g, 3, 3, 3}), Tensor::zeros({g, g, 3, 3, 3})};
    w.aggregation.hourglasses.push_back(
        {aggregation_zero_hourglass(g), aggregation_zero_hourglass(g), aggregation_zero_hourglass(g)});
    w.aggregation.head = Tensor::zeros({1, g, 3, 3, 3});
    return w;
}

StereoWeights random_stereo_weights(const PipelineConfig& config, std::uint64_t seed) {
    StereoWeights w;
    w.heads = random_heads(config, seed);
    detail::Rng rng(detail::splitmix64(seed ^ 0x73746572ull));
    const std::size_t g = config.groups;
    w.sae_kernel = random_kernel({1, 2, 1, 7, 7}, rng);
    w.aggregation.init = {random_kernel({g, g, 3, 3, 3}, rng), random_kernel({g, g, 3, 3, 3}, rng)};
    w.aggregation.hourglasses.push_back({random_kernel({g, g, 3, 3, 3}, rng), random_kernel({g, g, 3, 3, 3}, rng),
                                         random_kernel({g, g, 3, 3, 3}, rng)});
    w.aggregation.head = random_kernel({1, g, 3, 3, 3}, rng);
    return w;
}

MonoWeights readout_mono_weights(const PipelineConfig& config, const ReadoutOptions& options) {
    config.validate();
    const VoxelGrid grid = config.grid.make();
    const BinSpec bins = config.bins.make();
    const std::size_t nz = grid.nz(), c = config.fused_channels(), n = bins.count();
    const auto presence = presence_channels(config, options.finest_only);

    Tensor select({nz, nz * c, 1, 1});
    for (std::size_t j = 0; j < nz; ++j) {
        for (std::size_t ch : presence) select[j * nz * c + j * c + ch] = 1.0f / static_cast<float>(presence.size());
    }
    Tensor pass({nz, nz, 1, 1});
    for (std::size_t j = 0; j < nz; ++j) pass[j * nz + j] = 1.0f;
    Tensor readout({n, nz, 1, 1});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < nz; ++j) {
            readout[i * nz + j] = static_cast<float>(options.kappa * readout_kernel(bins.centers[i] - grid.center(2, j), options.smoothing));
        }
    }
    MonoWeights w;
    if (options.with_heads) w.heads = random_heads(config, options.seed);
    w.bev_encoder.layers = {std::move(select), std::move(pass), std::move(readout)};
    return w;
}

StereoWeights readout_stereo_weights(const PipelineConfig& config, const ReadoutOptions& options) {
    config.validate();
    const VoxelGrid grid = config.grid.make();
    const std::size_t nz = grid.nz(), groups = config.groups;
    const std::size_t per_group = config.fused_channels() / groups;
    std::vector<std::size_t> sel;
    for (std::size_t ch : presence_channels(config, options.finest_only)) sel.push_back(ch / per_group);

    const std::size_t kz = 2 * nz - 1;
    Tensor profile({1, groups, kz, 1, 1});
    for (std::size_t g : sel) {
        for (std::size_t t = 0; t < kz; ++t) {
            const double dz = (static_cast<double>(t) - static_cast<double>(nz - 1)) * grid.resolution(2);
            profile[g * kz + t] +=
                static_cast<float>(options.stereo_kappa * readout_kernel(dz, options.smoothing) / static_cast<double>(sel.size()));
        }
    }
    StereoWeights w;
    if (options.with_heads) w.heads = random_heads(config, options.seed);
    w.sae_kernel = Tensor::zeros({1, 2, 1, 7, 7});
    w.aggregation.init = {std::move(profile), delta_kernel3d(1, 3, 3, 3)};
    w.aggregation.hourglasses.push_back(
        {aggregation_zero_hourglass(1), aggregation_zero_hourglass(1), aggregation_zero_hourglass(1)});
    w.aggregation.head = Tensor::full({1, 1, 1, 1, 1}, 1.0f);
    return w;
}

namespace {

void put(const fs::path& dir, const std::string& name, const Tensor& t) { save_tensor(dir / name, name, t); }

json head_manifest(const fs::path& dir, const ImageHeads& h) {
    json feature = json::array(), depth = json::array();
    for (std::size_t s = 0; s < h.feature.size(); ++s) {
        json names = json::array();
        for (std::size_t l = 0; l < h.feature[s].layers.size(); ++l) {
            const std::string name = "feature.s" + std::to_string(s) + ".l" + std::to_string(l);
            put(dir, name, h.feature[s].layers[l]);
            names.push_back(name);
        }
        feature.push_back(names);
    }
    for (std::size_t s = 0; s < h.depth.size(); ++s) {
        json names = json::array();
        for (std::size_t l = 0; l < h.depth[s].layers.size(); ++l) {
            const std::string name = "depth.s" + std::to_string(s) + ".l" + std::to_string(l);
            put(dir, name, h.depth[s].layers[l]);
            names.push_back(name);
        }
        depth.push_back(names);
    }
    return {{"feature", feature}, {"depth", depth}};
}

Tensor get(const fs::path& dir, const json& name) { return load_tensor(dir / name.get<std::string>()); }

ConvStack get_stack(const fs::path& dir, const json& names) {
    ConvStack st;
    for (const json& n : names) st.layers.push_back(get(dir, n));
    return st;
}

ImageHeads get_heads(const fs::path& dir, const json& m) {
    ImageHeads h;
    if (!m.contains("heads")) return h;
    for (const json& s : m.at("heads").at("feature")) h.feature.push_back(get_stack(dir, s));
    for (const json& s : m.at("heads").at("depth")) h.depth.push_back(get_stack(dir, s));
    return h;
}

json read_manifest(const fs::path& dir, const char* kind) {
    const fs::path file = dir / "manifest.json";
    if (!fs::exists(file)) throw ArgumentError("weights manifest not found: " + file.string());
    json m = json::parse(read_text(file));
    if (m.value("kind", "") != kind) {
        throw ArgumentError(file.string() + " holds '" + m.value("kind", "?") + "' weights, expected " + kind);
    }
    return m;
}

// Anything wrong with a weights directory is a usage error.
template <typename Fn>
auto loading(const fs::path& dir, Fn&& fn) {
    try {
        return fn();
    } catch (const ArgumentError&) {
        throw;
    } catch (const std::exception& e) {
        throw ArgumentError("cannot load weights from " + dir.string() + ": " + e.what());
    }
}

}  // namespace

void save_weights(const fs::path& dir, const MonoWeights& w) {
    fs::create_directories(dir);
    json bev = json::array();
    for (std::size_t l = 0; l < w.bev_encoder.layers.size(); ++l) {
        const std::string name = "bev.l" + std::to_string(l);
        put(dir, name, w.bev_encoder.layers[l]);
        bev.push_back(name);
    }
    json m{{"kind", "mono"}, {"bev_encoder", bev}};
    if (!w.heads.feature.empty() || !w.heads.depth.empty()) m["heads"] = head_manifest(dir, w.heads);
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void save_weights(const fs::path& dir, const StereoWeights& w) {
    fs::create_directories(dir);
    put(dir, "sae", w.sae_kernel);
    json init = json::array(), hg = json::array();
    for (std::size_t i = 0; i < w.aggregation.init.size(); ++i) {
        const std::string name = "agg.init" + std::to_string(i);
        put(dir, name, w.aggregation.init[i]);
        init.push_back(name);
    }
    for (std::size_t i = 0; i < w.aggregation.hourglasses.size(); ++i) {
        const std::string stem = "agg.hg" + std::to_string(i);
        put(dir, stem + ".down", w.aggregation.hourglasses[i].down);
        put(dir, stem + ".mid", w.aggregation.hourglasses[i].mid);
        put(dir, stem + ".up", w.aggregation.hourglasses[i].up);
        hg.push_back({{"down", stem + ".down"}, {"mid", stem + ".mid"}, {"up", stem + ".up"}});
    }
    put(dir, "agg.head", w.aggregation.head);
    json m{{"kind", "stereo"},
           {"sae", "sae"},
           {"s", w.s},
           {"epsilon", w.epsilon},
           {"aggregation", {{"init", init}, {"hourglasses", hg}, {"head", "agg.head"}}}};
    if (!w.heads.feature.empty() || !w.heads.depth.empty()) m["heads"] = head_manifest(dir, w.heads);
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

MonoWeights load_mono_weights(const fs::path& dir, const PipelineConfig& config) {
    MonoWeights w = loading(dir, [&] {
        const json m = read_manifest(dir, "mono");
        MonoWeights out;
        out.heads = get_heads(dir, m);
        out.bev_encoder = get_stack(dir, m.at("bev_encoder"));
        return out;
    });
    w.validate(config);
    return w;
}

StereoWeights load_stereo_weights(const fs::path& dir, const PipelineConfig& config) {
    StereoWeights w = loading(dir, [&] {
        const json m = read_manifest(dir, "stereo");
        StereoWeights out;
        out.heads = get_heads(dir, m);
        out.sae_kernel = get(dir, m.at("sae"));
        out.s = m.value("s", -1.0);
        out.epsilon = m.value("epsilon", 0.0);
        const json& a = m.at("aggregation");
        for (const json& n : a.at("init")) out.aggregation.init.push_back(get(dir, n));
        for (const json& h : a.at("hourglasses")) {
            out.aggregation.hourglasses.push_back({get(dir, h.at("down")), get(dir, h.at("mid")), get(dir, h.at("up"))});
        }
        out.aggregation.head = get(dir, a.at("head"));
        return out;
    });
    w.validate(config);
    return w;
}

}  // namespace rsr
