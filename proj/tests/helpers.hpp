#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "boldseg/boundary.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/volume.hpp"

namespace testutil {

using namespace boldseg;

inline LabelMap random_mask(Shape3 dim, RngStream& rng, double p_fg = 0.35,
                            Spacing sp = {1.0, 1.0, 1.0}) {
    LabelMap m;
    m.dim = dim;
    m.spacing = sp;
    m.data.resize(dim.size());
    for (auto& v : m.data) v = rng.uniform() < p_fg ? 1 : 0;
    return m;
}

// Random mask guaranteed to have at least one voxel of each class.
inline LabelMap random_mixed_mask(Shape3 dim, RngStream& rng, double p_fg = 0.35,
                                  Spacing sp = {1.0, 1.0, 1.0}) {
    LabelMap m = random_mask(dim, rng, p_fg, sp);
    m.data[0] = 0;
    m.data[m.data.size() - 1] = 1;
    return m;
}

inline Volume random_volume(Shape3 dim, RngStream& rng, float lo = 0.0f, float hi = 100.0f,
                            Spacing sp = {1.0, 1.0, 1.0}) {
    Volume v;
    v.dim = dim;
    v.spacing = sp;
    v.data.resize(dim.size());
    for (auto& x : v.data) x = lo + static_cast<float>(rng.uniform()) * (hi - lo);
    return v;
}

// O(N*B) exact squared distance to the nearest site, same integer arithmetic
// as the separable transform.
inline std::vector<double> brute_force_sqdist(const std::vector<std::uint8_t>& sites,
                                              const Shape3& dim, double wx = 1.0, double wy = 1.0,
                                              double wz = 1.0) {
    const double wx2 = wx * wx, wy2 = wy * wy, wz2 = wz * wz;
    std::vector<std::array<int, 3>> pts;
    for (int z = 0; z < dim.nz; ++z)
        for (int y = 0; y < dim.ny; ++y)
            for (int x = 0; x < dim.nx; ++x)
                if (sites[dim.idx(x, y, z)]) pts.push_back({x, y, z});
    std::vector<double> d(dim.size(), std::numeric_limits<double>::infinity());
    for (int z = 0; z < dim.nz; ++z)
        for (int y = 0; y < dim.ny; ++y)
            for (int x = 0; x < dim.nx; ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& p : pts) {
                    double dx = x - p[0], dy = y - p[1], dz = z - p[2];
                    double v = wx2 * dx * dx + wy2 * dy * dy + wz2 * dz * dz;
                    if (v < best) best = v;
                }
                d[dim.idx(x, y, z)] = best;
            }
    return d;
}

// Direct realization of the pooled-band definition: per-voxel window scan.
inline std::vector<std::uint8_t> direct_band(const LabelMap& y, int k) {
    const int r = k / 2;
    std::vector<std::uint8_t> band(y.dim.size(), 0);
    for (int z = 0; z < y.dim.nz; ++z)
        for (int yy = 0; yy < y.dim.ny; ++yy)
            for (int x = 0; x < y.dim.nx; ++x) {
                std::int64_t fg = 0, window = 0;
                for (int dz = -r; dz <= r; ++dz)
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            int xx = x + dx, yy2 = yy + dy, zz = z + dz;
                            if (xx < 0 || yy2 < 0 || zz < 0 || xx >= y.dim.nx ||
                                yy2 >= y.dim.ny || zz >= y.dim.nz)
                                continue;
                            ++window;
                            fg += y.at(xx, yy2, zz);
                        }
                band[y.dim.idx(x, yy, z)] = (fg > 0 && fg < window) ? 1 : 0;
            }
    return band;
}

// Direct per-voxel weight assignment on top of direct_band.
inline std::vector<float> direct_weight_map(const LabelMap& y, double w1, double w2, int k) {
    auto band = direct_band(y, k);
    std::vector<float> w(y.dim.size(), 0.0f);
    for (std::size_t i = 0; i < band.size(); ++i)
        if (band[i]) w[i] = static_cast<float>(y.data[i] ? w2 : w1);
    return w;
}

// Central-difference gradient check. f maps a parameter vector to a scalar;
// grad is the analytic gradient at x. Returns the max relative error, where
// each component's scale is max(|analytic|, |numeric|, floor).
inline double gradcheck(const std::function<double(const std::vector<double>&)>& f,
                        std::vector<double> x, const std::vector<double>& grad, double h = 1e-5,
                        double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double fp = f(x);
        x[i] = keep - h;
        double fm = f(x);
        x[i] = keep;
        double num = (fp - fm) / (2.0 * h);
        double denom = std::max({std::abs(num), std::abs(grad[i]), floor});
        worst = std::max(worst, std::abs(num - grad[i]) / denom);
    }
    return worst;
}

// Binary erosion by one 6-connected step; voxels at the grid edge survive
// (out-of-volume is not background).
inline LabelMap erode6(const LabelMap& m) {
    LabelMap out = m;
    for (int z = 0; z < m.dim.nz; ++z)
        for (int y = 0; y < m.dim.ny; ++y)
            for (int x = 0; x < m.dim.nx; ++x) {
                if (!m.at(x, y, z)) continue;
                bool touch = (x > 0 && !m.at(x - 1, y, z)) || (x + 1 < m.dim.nx && !m.at(x + 1, y, z)) ||
                             (y > 0 && !m.at(x, y - 1, z)) || (y + 1 < m.dim.ny && !m.at(x, y + 1, z)) ||
                             (z > 0 && !m.at(x, y, z - 1)) || (z + 1 < m.dim.nz && !m.at(x, y, z + 1));
                if (touch) out.data[m.dim.idx(x, y, z)] = 0;
            }
    return out;
}

// Axis-aligned solid cuboid mask, half-open bounds.
inline LabelMap cuboid_mask(Shape3 dim, int x0, int x1, int y0, int y1, int z0, int z1,
                            Spacing sp = {1.0, 1.0, 1.0}) {
    LabelMap m;
    m.dim = dim;
    m.spacing = sp;
    m.data.assign(dim.size(), 0);
    for (int z = z0; z < z1; ++z)
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) m.data[dim.idx(x, y, z)] = 1;
    return m;
}

}  // namespace testutil
