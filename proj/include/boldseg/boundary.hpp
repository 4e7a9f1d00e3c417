#pragma once

#include <cstdint>
#include <vector>

#include "boldseg/volume.hpp"

namespace boldseg {

namespace detail {

// 3D inclusive prefix sums of the mask, with a zero border plane, so any
// box sum is eight lookups. Counts are integers throughout: no rounding.
inline std::vector<std::int64_t> prefix_counts(const LabelMap& y) {
    const int nx = y.dim.nx, ny = y.dim.ny, nz = y.dim.nz;
    const int px = nx + 1, py = ny + 1;
    std::vector<std::int64_t> p(static_cast<std::size_t>(px) * py * (nz + 1), 0);
    auto P = [&](int x, int yy, int z) -> std::int64_t& {
        return p[static_cast<std::size_t>(x) + static_cast<std::size_t>(px) *
                                                   (static_cast<std::size_t>(yy) +
                                                    static_cast<std::size_t>(py) * z)];
    };
    for (int z = 1; z <= nz; ++z)
        for (int yy = 1; yy <= ny; ++yy)
            for (int x = 1; x <= nx; ++x)
                P(x, yy, z) = y.at(x - 1, yy - 1, z - 1) + P(x - 1, yy, z) + P(x, yy - 1, z) +
                              P(x, yy, z - 1) - P(x - 1, yy - 1, z) - P(x - 1, yy, z - 1) -
                              P(x, yy - 1, z - 1) + P(x - 1, yy - 1, z - 1);
    return p;
}

inline std::int64_t box_sum(const std::vector<std::int64_t>& p, const Shape3& dim, int x0, int x1,
                            int y0, int y1, int z0, int z1) {
    // inclusive voxel box [x0,x1]x[y0,y1]x[z0,z1], assumed clipped in-bounds
    const int px = dim.nx + 1, py = dim.ny + 1;
    auto P = [&](int x, int yy, int z) {
        return p[static_cast<std::size_t>(x) +
                 static_cast<std::size_t>(px) *
                     (static_cast<std::size_t>(yy) + static_cast<std::size_t>(py) * z)];
    };
    ++x1, ++y1, ++z1;
    return P(x1, y1, z1) - P(x0, y1, z1) - P(x1, y0, z1) - P(x1, y1, z0) + P(x0, y0, z1) +
           P(x0, y1, z0) + P(x1, y0, z0) - P(x0, y0, z0);
}

}  // namespace detail

inline void check_pool_kernel(int k) {
    require(k >= 3 && k % 2 == 1, ErrKind::precondition,
            "pooling kernel K must be an odd integer >= 3, got ", k);
}

// Band approximation of the boundary region: voxels whose K^3 average-pooled
// mask value lies strictly in (0,1). Pooling averages over the in-bounds part
// of the window, so the test reduces to 0 < fg_count < window_count, exactly.
// Approximates the 2*delta-wide band around the boundary with
// delta ~ (K-1)/2 in Chebyshev voxel distance.
inline std::vector<std::uint8_t> boundary_band(const LabelMap& y, int k) {
    check_pool_kernel(k);
    const int r = k / 2;
    auto prefix = detail::prefix_counts(y);
    std::vector<std::uint8_t> band(y.dim.size(), 0);
    const int nx = y.dim.nx, ny = y.dim.ny, nz = y.dim.nz;
    std::size_t i = 0;
    for (int z = 0; z < nz; ++z) {
        int z0 = std::max(z - r, 0), z1 = std::min(z + r, nz - 1);
        for (int yy = 0; yy < ny; ++yy) {
            int y0 = std::max(yy - r, 0), y1 = std::min(yy + r, ny - 1);
            for (int x = 0; x < nx; ++x, ++i) {
                int x0 = std::max(x - r, 0), x1 = std::min(x + r, nx - 1);
                std::int64_t window =
                    static_cast<std::int64_t>(x1 - x0 + 1) * (y1 - y0 + 1) * (z1 - z0 + 1);
                std::int64_t fg = detail::box_sum(prefix, y.dim, x0, x1, y0, y1, z0, z1);
                band[i] = (fg > 0 && fg < window) ? 1 : 0;
            }
        }
    }
    return band;
}

// The additive boundary weight: w1 on band voxels outside the mask (penalize
// leaking into surrounding anatomy more heavily), w2 on band voxels inside,
// 0 elsewhere. Values are exactly {0, w1, w2}.
struct WeightMap {
    Shape3 dim;
    Spacing spacing;
    double w1 = 0.0, w2 = 0.0;
    int kernel = 0;
    std::vector<float> data;

    float at(int x, int y, int z) const { return data[dim.idx(x, y, z)]; }
};

inline WeightMap weight_map(const LabelMap& y, double w1, double w2, int k) {
    check_pool_kernel(k);
    require(w1 >= 0.0 && w2 >= 0.0 && std::isfinite(w1) && std::isfinite(w2),
            ErrKind::precondition, "weight_map: w1/w2 must be finite and >= 0");
    std::size_t fg = y.foreground_count();
    require(fg > 0, ErrKind::precondition, "weight_map: mask is all background (no boundary)");
    require(fg < y.data.size(), ErrKind::precondition,
            "weight_map: mask is all foreground (no boundary)");

    auto band = boundary_band(y, k);
    WeightMap w;
    w.dim = y.dim;
    w.spacing = y.spacing;
    w.w1 = w1;
    w.w2 = w2;
    w.kernel = k;
    w.data.assign(y.data.size(), 0.0f);
    for (std::size_t i = 0; i < band.size(); ++i)
        if (band[i]) w.data[i] = static_cast<float>(y.data[i] ? w2 : w1);
    return w;
}

}  // namespace boldseg
