#include "rsr/view_transform.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rsr/errors.hpp"
#include "rsr/numerics.hpp"
#include "rsr/tensor_io.hpp"

namespace rsr {

void DepthBinSpec::validate() const {
    if (!(d_min > 0.0)) throw ArgumentError("depth range must start in front of the camera");
    if (!(d_max > d_min)) throw ArgumentError("depth range is empty");
    if (bins < 2) throw ArgumentError("need at least two depth bins");
}

std::size_t DepthBinSpec::nearest(double depth) const noexcept {
    const double k = std::floor((depth - d_min) / step());
    if (k < 0.0) return 0;
    if (k >= static_cast<double>(bins)) return bins - 1;
    return static_cast<std::size_t>(k);
}

FeatureDims FeatureDims::for_image(const CameraIntrinsics& k, std::size_t stride) {
    if (stride == 0) throw ArgumentError("feature stride must be positive");
    return {static_cast<std::size_t>(k.height) / stride, static_cast<std::size_t>(k.width) / stride, stride};
}

std::size_t ProjectionLUT::valid_count() const noexcept {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

namespace {

void check_feature_dims(const CameraIntrinsics& k, const FeatureDims& feat) {
    if (feat.stride == 0 || feat.height == 0 || feat.width == 0) throw ArgumentError("empty feature map");
    if (feat.height != static_cast<std::size_t>(k.height) / feat.stride ||
        feat.width != static_cast<std::size_t>(k.width) / feat.stride) {
        throw ArgumentError("feature map " + std::to_string(feat.height) + "x" + std::to_string(feat.width) +
                            " does not match image " + std::to_string(k.height) + "x" + std::to_string(k.width) +
                            " at stride " + std::to_string(feat.stride));
    }
}

void check_maps(const FeatureDims& feat, std::size_t depth_bins, const Tensor& f_img, const Tensor& d_pre) {
    if (f_img.rank() != 3 || f_img.dim(0) != feat.height || f_img.dim(1) != feat.width) {
        throw ArgumentError("image features " + shape_to_string(f_img.shape()) + " do not match LUT feature map " +
                            std::to_string(feat.height) + "x" + std::to_string(feat.width));
    }
    if (d_pre.rank() != 3 || d_pre.dim(0) != feat.height || d_pre.dim(1) != feat.width ||
        d_pre.dim(2) != depth_bins) {
        throw ArgumentError("depth distribution " + shape_to_string(d_pre.shape()) + " does not match LUT (" +
                            std::to_string(feat.height) + ", " + std::to_string(feat.width) + ", " +
                            std::to_string(depth_bins) + ")");
    }
}

// Voxel projection shared by the LUT builder: returns false when culled.
struct Projected {
    double fx, fy, fk;  // feature column, feature row, depth-bin coordinate
};

bool project_voxel(const Vec3& p, const CameraIntrinsics& k, const CameraExtrinsics& t, const FeatureDims& feat,
                   const DepthBinSpec& depth, Projected& out) {
    const Vec3 r = mat_vec(t.rotation, p);
    const double d = r[2] + t.translation[2];
    if (!(d > kMinProjectionDepth)) return false;
    const double u = k.fx * (r[0] + t.translation[0]) / d + k.cx;
    const double v = k.fy * (r[1] + t.translation[1]) / d + k.cy;
    if (!(u >= 0.0 && u < k.width && v >= 0.0 && v < k.height)) return false;
    if (!(d >= depth.d_min && d <= depth.d_max)) return false;
    const double s = static_cast<double>(feat.stride);
    out = {u / s - 0.5, v / s - 0.5, depth.coordinate(d)};
    return true;
}

}  // namespace

ProjectionLUT build_lut(const VoxelGrid& grid, const CameraIntrinsics& k, const CameraExtrinsics& t,
                        const FeatureDims& feat, const DepthBinSpec& depth) {
    k.validate();
    t.validate();
    depth.validate();
    check_feature_dims(k, feat);

    ProjectionLUT lut;
    lut.nx = grid.nx();
    lut.ny = grid.ny();
    lut.nz = grid.nz();
    lut.feat = feat;
    lut.depth = depth;
    const std::size_t n = grid.voxel_count();
    lut.valid.assign(n, 0);
    lut.feat_index.assign(n * kFeatureTaps, kNoTap);
    lut.feat_weight.assign(n * kFeatureTaps, 0.0f);
    lut.depth_index.assign(n * kDepthTaps, kNoTap);
    lut.depth_weight.assign(n * kDepthTaps, 0.0f);

    const auto h = static_cast<std::ptrdiff_t>(feat.height);
    const auto w = static_cast<std::ptrdiff_t>(feat.width);
    const auto bins = static_cast<std::ptrdiff_t>(depth.bins);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t vi = 0; vi < static_cast<std::ptrdiff_t>(n); ++vi) {
        const auto voxel = static_cast<std::size_t>(vi);
        Projected p{};
        if (!project_voxel(grid.voxel_center(voxel), k, t, feat, depth, p)) continue;
        lut.valid[voxel] = 1;

        const double x0f = std::floor(p.fx), y0f = std::floor(p.fy), k0f = std::floor(p.fk);
        const double ax = p.fx - x0f, ay = p.fy - y0f, ak = p.fk - k0f;
        const auto x0 = static_cast<std::ptrdiff_t>(x0f);
        const auto y0 = static_cast<std::ptrdiff_t>(y0f);
        const auto k0 = static_cast<std::ptrdiff_t>(k0f);

        // Tap order: (dy, dx) for features, (dy, dx, dk) for depth, last index fastest.
        for (int tap = 0; tap < 4; ++tap) {
            const int dy = tap >> 1, dx = tap & 1;
            const std::ptrdiff_t y = y0 + dy, x = x0 + dx;
            const double wxy = (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
            const bool inside = y >= 0 && y < h && x >= 0 && x < w;
            const std::size_t pixel = inside ? static_cast<std::size_t>(y * w + x) : 0;

            lut.feat_weight[voxel * kFeatureTaps + tap] = static_cast<float>(wxy);
            lut.feat_index[voxel * kFeatureTaps + tap] = inside ? static_cast<std::uint32_t>(pixel) : kNoTap;

            for (int dk = 0; dk < 2; ++dk) {
                const std::ptrdiff_t kk = k0 + dk;
                const std::size_t slot = voxel * kDepthTaps + static_cast<std::size_t>(tap * 2 + dk);
                lut.depth_weight[slot] = static_cast<float>(wxy * (dk ? ak : 1.0 - ak));
                lut.depth_index[slot] = (inside && kk >= 0 && kk < bins)
                                            ? static_cast<std::uint32_t>(pixel * depth.bins + static_cast<std::size_t>(kk))
                                            : kNoTap;
            }
        }
    }
    return lut;
}

Tensor gather_voxels(const ProjectionLUT& lut, const Tensor& f_img, const Tensor& d_pre) {
    check_maps(lut.feat, lut.depth.bins, f_img, d_pre);
    const std::size_t c = f_img.dim(2);
    const std::size_t n = lut.voxel_count();
    Tensor out({lut.nx, lut.ny, lut.nz, c});

    const float* feats = f_img.data();
    const float* probs = d_pre.data();
    float* dst = out.data();

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t vi = 0; vi < static_cast<std::ptrdiff_t>(n); ++vi) {
        const auto voxel = static_cast<std::size_t>(vi);
        if (!lut.valid[voxel]) continue;

        const std::uint32_t* didx = &lut.depth_index[voxel * kDepthTaps];
        const float* dw = &lut.depth_weight[voxel * kDepthTaps];
        float depth_prob = 0.0f;
        for (std::size_t t = 0; t < kDepthTaps; ++t) {
            if (didx[t] != kNoTap) depth_prob += dw[t] * probs[didx[t]];
        }

        float* y = dst + voxel * c;
        const std::uint32_t* fidx = &lut.feat_index[voxel * kFeatureTaps];
        const float* fw = &lut.feat_weight[voxel * kFeatureTaps];
        for (std::size_t t = 0; t < kFeatureTaps; ++t) {
            if (fidx[t] == kNoTap) continue;
            const float* x = feats + static_cast<std::size_t>(fidx[t]) * c;
            const float wt = fw[t];
            for (std::size_t ch = 0; ch < c; ++ch) y[ch] += wt * x[ch];
        }
        for (std::size_t ch = 0; ch < c; ++ch) y[ch] *= depth_prob;
    }
    return out;
}

namespace {

// Zero-padded bilinear read of an (h, w, C) map at continuous (col, row).
void sample_bilinear(const Tensor& map, double col, double row, std::vector<double>& out) {
    const auto h = static_cast<std::ptrdiff_t>(map.dim(0));
    const auto w = static_cast<std::ptrdiff_t>(map.dim(1));
    const std::size_t c = map.dim(2);
    std::fill(out.begin(), out.end(), 0.0);
    const double cf = std::floor(col), rf = std::floor(row);
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const auto r = static_cast<std::ptrdiff_t>(rf) + dy;
            const auto q = static_cast<std::ptrdiff_t>(cf) + dx;
            if (r < 0 || r >= h || q < 0 || q >= w) continue;
            const double wgt = (1.0 - std::abs(col - static_cast<double>(q))) * (1.0 - std::abs(row - static_cast<double>(r)));
            const float* v = map.data() + (static_cast<std::size_t>(r * w + q)) * c;
            for (std::size_t ch = 0; ch < c; ++ch) out[ch] += wgt * static_cast<double>(v[ch]);
        }
    }
}

// Zero-padded trilinear read of an (h, w, C_d) volume at continuous (col, row, bin).
double sample_trilinear(const Tensor& vol, double col, double row, double bin) {
    const auto h = static_cast<std::ptrdiff_t>(vol.dim(0));
    const auto w = static_cast<std::ptrdiff_t>(vol.dim(1));
    const auto nb = static_cast<std::ptrdiff_t>(vol.dim(2));
    const double cf = std::floor(col), rf = std::floor(row), bf = std::floor(bin);
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            for (int db = 0; db < 2; ++db) {
                const auto r = static_cast<std::ptrdiff_t>(rf) + dy;
                const auto q = static_cast<std::ptrdiff_t>(cf) + dx;
                const auto b = static_cast<std::ptrdiff_t>(bf) + db;
                if (r < 0 || r >= h || q < 0 || q >= w || b < 0 || b >= nb) continue;
                const double wgt = (1.0 - std::abs(col - static_cast<double>(q))) *
                                   (1.0 - std::abs(row - static_cast<double>(r))) *
                                   (1.0 - std::abs(bin - static_cast<double>(b)));
                acc += wgt * static_cast<double>(vol.data()[static_cast<std::size_t>((r * w + q) * nb + b)]);
            }
        }
    }
    return acc;
}

}  // namespace

Tensor sample_voxels_reference(const VoxelGrid& grid, const CameraIntrinsics& k, const CameraExtrinsics& t,
                               const FeatureDims& feat, const DepthBinSpec& depth, const Tensor& f_img,
                               const Tensor& d_pre) {
    k.validate();
    t.validate();
    depth.validate();
    check_feature_dims(k, feat);
    check_maps(feat, depth.bins, f_img, d_pre);

    const std::size_t c = f_img.dim(2);
    const std::size_t n = grid.voxel_count();
    Tensor out({grid.nx(), grid.ny(), grid.nz(), c});
    const double stride = static_cast<double>(feat.stride);

#pragma omp parallel
    {
        std::vector<double> sampled(c);
#pragma omp for schedule(static)
        for (std::ptrdiff_t vi = 0; vi < static_cast<std::ptrdiff_t>(n); ++vi) {
            const auto voxel = static_cast<std::size_t>(vi);
            PixelPoint px;
            try {
                px = project_point(grid.voxel_center(voxel), k, t);
            } catch (const PointBehindCameraError&) {
                continue;
            }
            if (px.u < 0.0 || px.u >= k.width || px.v < 0.0 || px.v >= k.height) continue;
            if (px.d < depth.d_min || px.d > depth.d_max) continue;

            const double col = px.u / stride - 0.5;
            const double row = px.v / stride - 0.5;
            const double bin = (px.d - depth.d_min) / depth.step() - 0.5;
            sample_bilinear(f_img, col, row, sampled);
            const double prob = sample_trilinear(d_pre, col, row, bin);
            float* y = out.data() + voxel * c;
            for (std::size_t ch = 0; ch < c; ++ch) y[ch] = static_cast<float>(sampled[ch] * prob);
        }
    }
    return out;
}

Fusion parse_fusion(const std::string& name) {
    if (name == "concat") return Fusion::Concat;
    if (name == "plus") return Fusion::Plus;
    throw ArgumentError("unknown fusion mode '" + name + "' (expected concat or plus)");
}

std::string to_string(Fusion f) { return f == Fusion::Concat ? "concat" : "plus"; }

Tensor fuse_multiscale(std::span<const Tensor> voxel_feats, Fusion mode) {
    if (voxel_feats.empty()) throw ArgumentError("fuse_multiscale needs at least one volume");
    const Shape& ref = voxel_feats[0].shape();
    for (const auto& v : voxel_feats) {
        if (v.rank() != 4) throw ArgumentError("voxel features must be (N_x, N_y, N_z, C)");
        if (v.dim(0) != ref[0] || v.dim(1) != ref[1] || v.dim(2) != ref[2]) {
            throw ArgumentError("voxel grids differ across scales: " + shape_to_string(ref) + " vs " +
                                shape_to_string(v.shape()));
        }
    }
    if (mode == Fusion::Concat) return concat_channels(voxel_feats);

    Tensor out = voxel_feats[0];
    for (std::size_t s = 1; s < voxel_feats.size(); ++s) {
        if (voxel_feats[s].dim(3) != ref[3]) throw ArgumentError("plus fusion requires equal channel counts");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += voxel_feats[s][i];
    }
    return out;
}

Tensor flatten_to_bev(const Tensor& b) {
    if (b.rank() != 4) throw ArgumentError("flatten_to_bev expects (N_x, N_y, N_z, C), got " + shape_to_string(b.shape()));
    return b.reshaped({b.dim(0), b.dim(1), b.dim(2) * b.dim(3)});
}

Tensor unflatten_from_bev(const Tensor& bev, std::size_t nz) {
    if (bev.rank() != 3 || nz == 0 || bev.dim(2) % nz != 0) {
        throw ArgumentError("cannot split BEV channels " + shape_to_string(bev.shape()) + " into " +
                            std::to_string(nz) + " vertical slots");
    }
    return bev.reshaped({bev.dim(0), bev.dim(1), nz, bev.dim(2) / nz});
}

void save_lut(const std::filesystem::path& stem, const ProjectionLUT& lut) {
    const std::string base = stem.filename().string();
    auto blob = [&](const char* suffix) {
        std::filesystem::path p = stem;
        p += suffix;
        return p;
    };
    nlohmann::json manifest{
        {"kind", "projection_lut"},
        {"grid", {lut.nx, lut.ny, lut.nz}},
        {"feat", {{"height", lut.feat.height}, {"width", lut.feat.width}, {"stride", lut.feat.stride}}},
        {"depth", {{"d_min", lut.depth.d_min}, {"d_max", lut.depth.d_max}, {"bins", lut.depth.bins}}},
        {"feature_taps", kFeatureTaps},
        {"depth_taps", kDepthTaps},
        {"no_tap", kNoTap},
        {"blobs",
         {{"valid", base + ".valid.u8"},
          {"feat_index", base + ".feat_index.u32"},
          {"feat_weight", base + ".feat_weight.f32"},
          {"depth_index", base + ".depth_index.u32"},
          {"depth_weight", base + ".depth_weight.f32"}}},
    };
    std::filesystem::path manifest_file = stem;
    manifest_file += ".json";
    write_text(manifest_file, manifest.dump(2) + "\n");
    write_blob(blob(".valid.u8"), std::span<const std::uint8_t>(lut.valid));
    write_blob(blob(".feat_index.u32"), std::span<const std::uint32_t>(lut.feat_index));
    write_blob(blob(".feat_weight.f32"), std::span<const float>(lut.feat_weight));
    write_blob(blob(".depth_index.u32"), std::span<const std::uint32_t>(lut.depth_index));
    write_blob(blob(".depth_weight.f32"), std::span<const float>(lut.depth_weight));
}

ProjectionLUT load_lut(const std::filesystem::path& stem) {
    std::filesystem::path manifest_file = stem;
    if (manifest_file.extension() != ".json") manifest_file += ".json";
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_text(manifest_file));
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError("malformed LUT manifest: " + std::string(e.what()));
    }
    if (m.value("kind", "") != "projection_lut") throw RuntimeError(manifest_file.string() + " is not a LUT manifest");

    ProjectionLUT lut;
    const auto grid = m.at("grid").get<std::vector<std::size_t>>();
    if (grid.size() != 3) throw RuntimeError("LUT grid must have three extents");
    lut.nx = grid[0];
    lut.ny = grid[1];
    lut.nz = grid[2];
    lut.feat = {m["feat"].at("height").get<std::size_t>(), m["feat"].at("width").get<std::size_t>(),
                m["feat"].at("stride").get<std::size_t>()};
    lut.depth = {m["depth"].at("d_min").get<double>(), m["depth"].at("d_max").get<double>(),
                 m["depth"].at("bins").get<std::size_t>()};
    const auto dir = manifest_file.parent_path();
    const auto& blobs = m.at("blobs");
    const std::size_t n = lut.voxel_count();
    lut.valid = read_u8_blob(dir / blobs.at("valid").get<std::string>(), n);
    lut.feat_index = read_u32_blob(dir / blobs.at("feat_index").get<std::string>(), n * kFeatureTaps);
    lut.feat_weight = read_f32_blob(dir / blobs.at("feat_weight").get<std::string>(), n * kFeatureTaps);
    lut.depth_index = read_u32_blob(dir / blobs.at("depth_index").get<std::string>(), n * kDepthTaps);
    lut.depth_weight = read_f32_blob(dir / blobs.at("depth_weight").get<std::string>(), n * kDepthTaps);
    return lut;
}

}  // namespace rsr
