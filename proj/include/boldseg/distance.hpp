#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "boldseg/threading.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

enum class DistanceUnit { voxel, mm };

namespace edt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// One pass of the separable exact squared-distance transform: lower envelope
// of the parabolas f[i] + w2*(x-i)^2. Positions are grid indices; w2 is the
// squared axis spacing (1 for voxel units). v/z are caller-provided scratch
// of size n and n+1.
inline void lower_envelope_1d(const double* f, double* d, int n, double w2, int* v, double* z) {
    int k = -1;
    for (int i = 0; i < n; ++i) {
        if (f[i] == kInf) continue;
        double fi = f[i] + w2 * static_cast<double>(i) * i;
        while (k >= 0) {
            int j = v[k];
            double s = (fi - (f[j] + w2 * static_cast<double>(j) * j)) / (2.0 * w2 * (i - j));
            if (s <= z[k]) {
                --k;  // parabola j is never the minimum; drop it
            } else {
                break;
            }
        }
        ++k;
        v[k] = i;
        z[k] = k == 0 ? -kInf : (fi - (f[v[k - 1]] + w2 * static_cast<double>(v[k - 1]) * v[k - 1])) /
                                    (2.0 * w2 * (i - v[k - 1]));
        z[k + 1] = kInf;
    }
    if (k < 0) {  // no sites in this row
        for (int x = 0; x < n; ++x) d[x] = kInf;
        return;
    }
    int j = 0;
    for (int x = 0; x < n; ++x) {
        while (z[j + 1] < x) ++j;
        double dx = static_cast<double>(x - v[j]);
        d[x] = f[v[j]] + w2 * dx * dx;
    }
}

}  // namespace edt

// Exact squared Euclidean distance from every voxel to the nearest site.
// Axis weights are squared spacings; with (1,1,1) results are exact integers.
// Summation order is x-term, then +y-term, then +z-term, matching the
// brute-force oracles used in tests term for term.
inline std::vector<double> squared_distance_to_sites(const std::vector<std::uint8_t>& sites,
                                                     const Shape3& dim, double wx = 1.0,
                                                     double wy = 1.0, double wz = 1.0) {
    require(sites.size() == dim.size(), ErrKind::internal, "squared_distance_to_sites: size");
    const double wx2 = wx * wx, wy2 = wy * wy, wz2 = wz * wz;
    std::vector<double> d(dim.size());
    const int nx = dim.nx, ny = dim.ny, nz = dim.nz;

    // x pass: rows are contiguous
    parallel_for(static_cast<std::int64_t>(ny) * nz, [&](std::int64_t b, std::int64_t e) {
        std::vector<double> f(nx), out(nx), z(nx + 1);
        std::vector<int> v(nx);
        for (std::int64_t r = b; r < e; ++r) {
            std::size_t base = static_cast<std::size_t>(r) * nx;
            for (int x = 0; x < nx; ++x) f[x] = sites[base + x] ? 0.0 : edt::kInf;
            edt::lower_envelope_1d(f.data(), out.data(), nx, wx2, v.data(), z.data());
            for (int x = 0; x < nx; ++x) d[base + x] = out[x];
        }
    });

    // y pass
    parallel_for(static_cast<std::int64_t>(nz), [&](std::int64_t b, std::int64_t e) {
        std::vector<double> f(ny), out(ny), z(ny + 1);
        std::vector<int> v(ny);
        for (std::int64_t zz = b; zz < e; ++zz)
            for (int x = 0; x < nx; ++x) {
                for (int y = 0; y < ny; ++y) f[y] = d[dim.idx(x, static_cast<int>(y), static_cast<int>(zz))];
                edt::lower_envelope_1d(f.data(), out.data(), ny, wy2, v.data(), z.data());
                for (int y = 0; y < ny; ++y) d[dim.idx(x, y, static_cast<int>(zz))] = out[y];
            }
    });

    // z pass
    parallel_for(static_cast<std::int64_t>(ny), [&](std::int64_t b, std::int64_t e) {
        std::vector<double> f(nz), out(nz), z(nz + 1);
        std::vector<int> v(nz);
        for (std::int64_t yy = b; yy < e; ++yy)
            for (int x = 0; x < nx; ++x) {
                for (int zz = 0; zz < nz; ++zz) f[zz] = d[dim.idx(x, static_cast<int>(yy), zz)];
                edt::lower_envelope_1d(f.data(), out.data(), nz, wz2, v.data(), z.data());
                for (int zz = 0; zz < nz; ++zz) d[dim.idx(x, static_cast<int>(yy), zz)] = out[zz];
            }
    });
    return d;
}

// The discrete boundary: foreground voxels with at least one in-bounds
// 6-connected background neighbor. Out-of-volume is not background, so a mask
// flush against the grid edge has no boundary on that face.
inline std::vector<std::uint8_t> boundary_voxels(const LabelMap& y) {
    std::vector<std::uint8_t> b(y.data.size(), 0);
    const int nx = y.dim.nx, ny = y.dim.ny, nz = y.dim.nz;
    for (int z = 0; z < nz; ++z)
        for (int yy = 0; yy < ny; ++yy)
            for (int x = 0; x < nx; ++x) {
                std::size_t i = y.dim.idx(x, yy, z);
                if (!y.data[i]) continue;
                bool edge = (x > 0 && !y.data[i - 1]) || (x + 1 < nx && !y.data[i + 1]) ||
                            (yy > 0 && !y.at(x, yy - 1, z)) || (yy + 1 < ny && !y.at(x, yy + 1, z)) ||
                            (z > 0 && !y.at(x, yy, z - 1)) || (z + 1 < nz && !y.at(x, yy, z + 1));
                if (edge) b[i] = 1;
            }
    return b;
}

// Per-voxel distance to the mask boundary, positive inside and negative
// outside; boundary voxels themselves sit at 0 on the inside.
struct SignedDistanceField {
    Shape3 dim;
    Spacing spacing;
    DistanceUnit unit = DistanceUnit::voxel;
    std::vector<float> data;

    float at(int x, int y, int z) const { return data[dim.idx(x, y, z)]; }
};

inline SignedDistanceField signed_distance(const LabelMap& y,
                                           DistanceUnit unit = DistanceUnit::voxel) {
    std::size_t fg = y.foreground_count();
    require(fg > 0, ErrKind::precondition, "signed_distance: mask is all background");
    require(fg < y.data.size(), ErrKind::precondition, "signed_distance: mask is all foreground");

    auto sites = boundary_voxels(y);
    double wx = 1.0, wy = 1.0, wz = 1.0;
    if (unit == DistanceUnit::mm) {
        wx = y.spacing.sx;
        wy = y.spacing.sy;
        wz = y.spacing.sz;
    }
    auto dsq = squared_distance_to_sites(sites, y.dim, wx, wy, wz);

    SignedDistanceField f;
    f.dim = y.dim;
    f.spacing = y.spacing;
    f.unit = unit;
    f.data.resize(dsq.size());
    for (std::size_t i = 0; i < dsq.size(); ++i) {
        double d = std::sqrt(dsq[i]);
        f.data[i] = static_cast<float>(y.data[i] ? d : -d);
    }
    return f;
}

}  // namespace boldseg
