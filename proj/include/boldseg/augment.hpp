#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

struct AugmentConfig {
    double max_translation_vox = 10.0;
    double max_rotation_deg = 22.0;
    bool flip_x = true, flip_y = true, flip_z = true;
    double noise_sigma = 0.25;
    int elastic_control_points = 5;      // per axis
    double elastic_max_disp_vox = 10.0;  // per control point, per component
    bool elastic_linear_densify = false;
    double volume_intensity_shift_frac = 0.25;
    double placenta_intensity_shift = 0.15;
    double prob_flip = 0.5;
    double prob_affine = 0.5;
    double prob_elastic = 0.5;
    double prob_intensity = 0.5;
    double prob_noise = 0.5;

    void validate() const {
        auto mag = [](double v, const char* n) {
            require(std::isfinite(v) && v >= 0, ErrKind::bad_config, "augment: ", n,
                    " must be >= 0");
        };
        mag(max_translation_vox, "max_translation_vox");
        mag(max_rotation_deg, "max_rotation_deg");
        mag(noise_sigma, "noise_sigma");
        mag(elastic_max_disp_vox, "elastic_max_disp_vox");
        mag(volume_intensity_shift_frac, "volume_intensity_shift_frac");
        mag(placenta_intensity_shift, "placenta_intensity_shift");
        require(elastic_control_points >= 2, ErrKind::bad_config,
                "augment: elastic_control_points must be >= 2");
        auto prob = [](double p, const char* n) {
            require(p >= 0 && p <= 1, ErrKind::bad_config, "augment: ", n, " must be in [0,1]");
        };
        prob(prob_flip, "prob_flip");
        prob(prob_affine, "prob_affine");
        prob(prob_elastic, "prob_elastic");
        prob(prob_intensity, "prob_intensity");
        prob(prob_noise, "prob_noise");
    }
};

// Deterministic transform cores. The random_* wrappers draw parameters and
// delegate here, so oracle tests can drive exact arguments.

inline std::pair<Volume, LabelMap> flip_transform(const Volume& v, const LabelMap& y, bool fx,
                                                  bool fy, bool fz) {
    check_same_grid(v, y);
    Volume out = v;
    LabelMap oy = y;
    const Shape3& d = v.dim;
    for (int z = 0; z < d.nz; ++z)
        for (int yy = 0; yy < d.ny; ++yy)
            for (int x = 0; x < d.nx; ++x) {
                int sx = fx ? d.nx - 1 - x : x;
                int sy = fy ? d.ny - 1 - yy : yy;
                int sz = fz ? d.nz - 1 - z : z;
                out.data[d.idx(x, yy, z)] = v.data[d.idx(sx, sy, sz)];
                oy.data[d.idx(x, yy, z)] = y.data[d.idx(sx, sy, sz)];
            }
    return {std::move(out), std::move(oy)};
}

namespace augdetail {

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            r[i][j] = s;
        }
    return r;
}

// Rotation applied x, then y, then z: R = Rz * Ry * Rx.
inline Mat3 rotation_xyz(double rx_deg, double ry_deg, double rz_deg) {
    double ax = rx_deg * kPi / 180.0, ay = ry_deg * kPi / 180.0, az = rz_deg * kPi / 180.0;
    Mat3 rx{{{1, 0, 0}, {0, std::cos(ax), -std::sin(ax)}, {0, std::sin(ax), std::cos(ax)}}};
    Mat3 ry{{{std::cos(ay), 0, std::sin(ay)}, {0, 1, 0}, {-std::sin(ay), 0, std::cos(ay)}}};
    Mat3 rz{{{std::cos(az), -std::sin(az), 0}, {std::sin(az), std::cos(az), 0}, {0, 0, 1}}};
    return mat_mul(rz, mat_mul(ry, rx));
}

inline Mat3 transpose(const Mat3& m) {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r[i][j] = m[j][i];
    return r;
}

}  // namespace augdetail

// Rigid transform in voxel coordinates about the volume center: a point p maps
// to R(p-c) + c + t. Intensities resample trilinearly, labels nearest-neighbor,
// out-of-field reads as 0.
inline std::pair<Volume, LabelMap> affine_transform(const Volume& v, const LabelMap& y,
                                                    const std::array<double, 3>& rot_deg,
                                                    const std::array<double, 3>& trans_vox) {
    check_same_grid(v, y);
    augdetail::Mat3 rinv =
        augdetail::transpose(augdetail::rotation_xyz(rot_deg[0], rot_deg[1], rot_deg[2]));
    const Shape3& d = v.dim;
    double cx = (d.nx - 1) / 2.0, cy = (d.ny - 1) / 2.0, cz = (d.nz - 1) / 2.0;
    Volume out = v;
    LabelMap oy = y;
    for (int z = 0; z < d.nz; ++z)
        for (int yy = 0; yy < d.ny; ++yy)
            for (int x = 0; x < d.nx; ++x) {
                double px = x - cx - trans_vox[0];
                double py = yy - cy - trans_vox[1];
                double pz = z - cz - trans_vox[2];
                double sx = rinv[0][0] * px + rinv[0][1] * py + rinv[0][2] * pz + cx;
                double sy = rinv[1][0] * px + rinv[1][1] * py + rinv[1][2] * pz + cy;
                double sz = rinv[2][0] * px + rinv[2][1] * py + rinv[2][2] * pz + cz;
                out.data[d.idx(x, yy, z)] = static_cast<float>(sample_trilinear_zero(v, sx, sy, sz));
                oy.data[d.idx(x, yy, z)] = sample_nearest_zero(y, sx, sy, sz);
            }
    return {std::move(out), std::move(oy)};
}

// Per-axis displacement grids on an n^3 control lattice spanning the volume.
struct ElasticField {
    int ncp = 5;
    bool linear = false;
    std::vector<double> dx, dy, dz;  // ncp^3 each, x-fastest

    std::size_t cidx(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(ncp) * (j + static_cast<std::size_t>(ncp) * k);
    }
};

namespace augdetail {

// Uniform cubic B-spline basis on t in [0,1).
inline std::array<double, 4> bspline_w(double t) {
    double t2 = t * t, t3 = t2 * t;
    return {(1 - 3 * t + 3 * t2 - t3) / 6.0, (4 - 6 * t2 + 3 * t3) / 6.0,
            (1 + 3 * t + 3 * t2 - 3 * t3) / 6.0, t3 / 6.0};
}

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Separable weights along one axis for control coordinate u in [0, ncp-1]:
// 4 clamped control indices with nonnegative weights summing to 1.
inline void axis_weights(double u, int ncp, bool linear, int idx[4], double w[4]) {
    if (linear) {
        int i = static_cast<int>(std::floor(u));
        i = clampi(i, 0, ncp - 2);
        double t = u - i;
        idx[0] = i; idx[1] = i + 1; idx[2] = i; idx[3] = i;
        w[0] = 1.0 - t; w[1] = t; w[2] = 0.0; w[3] = 0.0;
        return;
    }
    int i = static_cast<int>(std::floor(u));
    i = clampi(i, 0, ncp - 2);
    double t = u - i;
    auto b = bspline_w(t);
    for (int k = 0; k < 4; ++k) {
        idx[k] = clampi(i - 1 + k, 0, ncp - 1);
        w[k] = b[k];
    }
}

}  // namespace augdetail

// Densified displacement (in voxels) at a voxel coordinate. Weights are convex
// so every component is bounded by the largest control displacement.
inline std::array<double, 3> elastic_displacement_at(const ElasticField& f, const Shape3& dim,
                                                     double x, double y, double z) {
    auto tou = [&](double v, int n) {
        return n > 1 ? v * (f.ncp - 1) / static_cast<double>(n - 1) : 0.0;
    };
    int ix[4], iy[4], iz[4];
    double wx[4], wy[4], wz[4];
    augdetail::axis_weights(tou(x, dim.nx), f.ncp, f.linear, ix, wx);
    augdetail::axis_weights(tou(y, dim.ny), f.ncp, f.linear, iy, wy);
    augdetail::axis_weights(tou(z, dim.nz), f.ncp, f.linear, iz, wz);
    double ax = 0, ay = 0, az = 0;
    for (int c = 0; c < 4; ++c)
        for (int b = 0; b < 4; ++b)
            for (int a = 0; a < 4; ++a) {
                double w = wx[a] * wy[b] * wz[c];
                if (w == 0.0) continue;
                std::size_t i = f.cidx(ix[a], iy[b], iz[c]);
                ax += w * f.dx[i];
                ay += w * f.dy[i];
                az += w * f.dz[i];
            }
    return {ax, ay, az};
}

// Warp by the densified field: output voxel x reads input at x + d(x).
inline std::pair<Volume, LabelMap> elastic_transform(const Volume& v, const LabelMap& y,
                                                     const ElasticField& f) {
    check_same_grid(v, y);
    std::size_t ncp3 = static_cast<std::size_t>(f.ncp) * f.ncp * f.ncp;
    require(f.ncp >= 2 && f.dx.size() == ncp3 && f.dy.size() == ncp3 && f.dz.size() == ncp3,
            ErrKind::precondition, "elastic_transform: malformed control grid");
    const Shape3& d = v.dim;
    Volume out = v;
    LabelMap oy = y;
    for (int z = 0; z < d.nz; ++z)
        for (int yy = 0; yy < d.ny; ++yy)
            for (int x = 0; x < d.nx; ++x) {
                auto disp = elastic_displacement_at(f, d, x, yy, z);
                double sx = x + disp[0], sy = yy + disp[1], sz = z + disp[2];
                out.data[d.idx(x, yy, z)] = static_cast<float>(sample_trilinear_zero(v, sx, sy, sz));
                oy.data[d.idx(x, yy, z)] = sample_nearest_zero(y, sx, sy, sz);
            }
    return {std::move(out), std::move(oy)};
}

// Whole-volume multiplicative scale followed by a constant additive shift
// restricted to labeled voxels.
inline Volume intensity_transform(const Volume& v, const LabelMap& y, double scale, double shift) {
    check_same_grid(v, y);
    Volume out = v;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double val = static_cast<double>(v.data[i]) * scale;
        if (y.data[i]) val += shift;
        out.data[i] = static_cast<float>(val);
    }
    return out;
}

inline Volume add_noise(const Volume& v, double sigma, RngStream& rng) {
    require(sigma >= 0, ErrKind::precondition, "add_noise: sigma must be >= 0");
    Volume out = v;
    if (sigma == 0) return out;
    for (auto& val : out.data) val = static_cast<float>(static_cast<double>(val) + rng.normal(0.0, sigma));
    return out;
}

// Random wrappers. Each draws its parameters from the stream and applies the
// matching core unconditionally; apply probabilities live in augment_sample.

inline std::pair<Volume, LabelMap> random_flip(const Volume& v, const LabelMap& y,
                                               const AugmentConfig& cfg, RngStream& rng) {
    bool fx = cfg.flip_x && rng.bernoulli(0.5);
    bool fy = cfg.flip_y && rng.bernoulli(0.5);
    bool fz = cfg.flip_z && rng.bernoulli(0.5);
    return flip_transform(v, y, fx, fy, fz);
}

inline std::pair<Volume, LabelMap> random_affine(const Volume& v, const LabelMap& y,
                                                 const AugmentConfig& cfg, RngStream& rng) {
    std::array<double, 3> rot{}, trans{};
    for (int a = 0; a < 3; ++a) rot[a] = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg);
    for (int a = 0; a < 3; ++a)
        trans[a] = rng.uniform(-cfg.max_translation_vox, cfg.max_translation_vox);
    return affine_transform(v, y, rot, trans);
}

inline ElasticField random_elastic_field(const Shape3&, const AugmentConfig& cfg, RngStream& rng) {
    ElasticField f;
    f.ncp = cfg.elastic_control_points;
    f.linear = cfg.elastic_linear_densify;
    std::size_t n = static_cast<std::size_t>(f.ncp) * f.ncp * f.ncp;
    f.dx.resize(n);
    f.dy.resize(n);
    f.dz.resize(n);
    double m = cfg.elastic_max_disp_vox;
    for (std::size_t i = 0; i < n; ++i) f.dx[i] = rng.uniform(-m, m);
    for (std::size_t i = 0; i < n; ++i) f.dy[i] = rng.uniform(-m, m);
    for (std::size_t i = 0; i < n; ++i) f.dz[i] = rng.uniform(-m, m);
    return f;
}

inline std::pair<Volume, LabelMap> random_elastic(const Volume& v, const LabelMap& y,
                                                  const AugmentConfig& cfg, RngStream& rng) {
    ElasticField f = random_elastic_field(v.dim, cfg, rng);
    return elastic_transform(v, y, f);
}

inline Volume intensity_shifts(const Volume& v, const LabelMap& y, const AugmentConfig& cfg,
                               RngStream& rng) {
    double scale = rng.uniform(1.0 - cfg.volume_intensity_shift_frac,
                               1.0 + cfg.volume_intensity_shift_frac);
    double shift = rng.uniform(-cfg.placenta_intensity_shift, cfg.placenta_intensity_shift);
    return intensity_transform(v, y, scale, shift);
}

inline Volume random_noise(const Volume& v, const AugmentConfig& cfg, RngStream& rng) {
    return add_noise(v, cfg.noise_sigma, rng);
}

// Fixed composition: flips, affine, elastic, intensity shifts, noise. Noise is
// last so it is never warped. Parameter draws happen only for families that
// fire, in this documented order.
inline std::pair<Volume, LabelMap> augment_sample(const Volume& v, const LabelMap& y,
                                                  const AugmentConfig& cfg, RngStream& rng) {
    cfg.validate();
    check_same_grid(v, y);
    Volume cv = v;
    LabelMap cy = y;
    if (rng.bernoulli(cfg.prob_flip)) {
        auto r = random_flip(cv, cy, cfg, rng);
        cv = std::move(r.first);
        cy = std::move(r.second);
    }
    if (rng.bernoulli(cfg.prob_affine)) {
        auto r = random_affine(cv, cy, cfg, rng);
        cv = std::move(r.first);
        cy = std::move(r.second);
    }
    if (rng.bernoulli(cfg.prob_elastic)) {
        auto r = random_elastic(cv, cy, cfg, rng);
        cv = std::move(r.first);
        cy = std::move(r.second);
    }
    if (rng.bernoulli(cfg.prob_intensity)) cv = intensity_shifts(cv, cy, cfg, rng);
    if (rng.bernoulli(cfg.prob_noise)) cv = random_noise(cv, cfg, rng);
    return {std::move(cv), std::move(cy)};
}

}  // namespace boldseg
