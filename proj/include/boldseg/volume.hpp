#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "boldseg/core.hpp"

namespace boldseg {

// Dense 3D scalar grid holding one frame. Immutable by convention: every
// operation in this library returns a new Volume rather than mutating.
struct Volume {
    Shape3 dim;
    Spacing spacing;
    std::vector<float> data;  // x-fastest

    Volume() = default;
    Volume(Shape3 d, Spacing s, std::vector<float> values)
        : dim(d), spacing(s), data(std::move(values)) {
        validate();
    }

    float at(int x, int y, int z) const { return data[dim.idx(x, y, z)]; }

    void validate() const {
        check_positive_dims(dim, "Volume");
        check_positive_spacing(spacing, "Volume");
        require(data.size() == dim.size(), ErrKind::precondition, "Volume: data length ",
                data.size(), " does not match dims ", dim.str());
        for (float v : data)
            require(std::isfinite(v), ErrKind::precondition, "Volume: non-finite voxel value");
    }
};

// Binary mask aligned with a Volume.
struct LabelMap {
    Shape3 dim;
    Spacing spacing;
    std::vector<std::uint8_t> data;  // values in {0,1}, x-fastest

    LabelMap() = default;
    LabelMap(Shape3 d, Spacing s, std::vector<std::uint8_t> values)
        : dim(d), spacing(s), data(std::move(values)) {
        validate();
    }

    std::uint8_t at(int x, int y, int z) const { return data[dim.idx(x, y, z)]; }

    std::size_t foreground_count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }

    void validate() const {
        check_positive_dims(dim, "LabelMap");
        check_positive_spacing(spacing, "LabelMap");
        require(data.size() == dim.size(), ErrKind::precondition, "LabelMap: data length ",
                data.size(), " does not match dims ", dim.str());
        for (auto v : data)
            require(v == 0 || v == 1, ErrKind::bad_data, "LabelMap: value ", int(v),
                    " is not binary");
    }
};

inline void check_same_grid(const Shape3& a, const Shape3& b, const char* what = "grids") {
    require(a == b, ErrKind::precondition, what, ": dimension mismatch ", a.str(), " vs ",
            b.str());
}

inline void check_same_grid(const Volume& v, const LabelMap& m) {
    check_same_grid(v.dim, m.dim, "volume/label");
}
inline void check_same_grid(const Volume& a, const Volume& b) {
    check_same_grid(a.dim, b.dim, "volumes");
}
inline void check_same_grid(const LabelMap& a, const LabelMap& b) {
    check_same_grid(a.dim, b.dim, "labels");
}

// Trilinear sample at continuous voxel coordinates, edge-clamped.
inline double sample_trilinear_clamped(const Volume& v, double x, double y, double z) {
    auto clampi = [](int i, int hi) { return i < 0 ? 0 : (i > hi ? hi : i); };
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
        z0 = static_cast<int>(std::floor(z));
    double fx = x - x0, fy = y - y0, fz = z - z0;
    int x1 = clampi(x0 + 1, v.dim.nx - 1), y1 = clampi(y0 + 1, v.dim.ny - 1),
        z1 = clampi(z0 + 1, v.dim.nz - 1);
    x0 = clampi(x0, v.dim.nx - 1);
    y0 = clampi(y0, v.dim.ny - 1);
    z0 = clampi(z0, v.dim.nz - 1);
    double c000 = v.at(x0, y0, z0), c100 = v.at(x1, y0, z0);
    double c010 = v.at(x0, y1, z0), c110 = v.at(x1, y1, z0);
    double c001 = v.at(x0, y0, z1), c101 = v.at(x1, y0, z1);
    double c011 = v.at(x0, y1, z1), c111 = v.at(x1, y1, z1);
    double c00 = c000 * (1 - fx) + c100 * fx;
    double c10 = c010 * (1 - fx) + c110 * fx;
    double c01 = c001 * (1 - fx) + c101 * fx;
    double c11 = c011 * (1 - fx) + c111 * fx;
    double c0 = c00 * (1 - fy) + c10 * fy;
    double c1 = c01 * (1 - fy) + c11 * fy;
    return c0 * (1 - fz) + c1 * fz;
}

// Trilinear sample treating out-of-field as 0 (background air).
inline double sample_trilinear_zero(const Volume& v, double x, double y, double z) {
    int x0 = static_cast<int>(std::floor(x)), y0 = static_cast<int>(std::floor(y)),
        z0 = static_cast<int>(std::floor(z));
    double fx = x - x0, fy = y - y0, fz = z - z0;
    double acc = 0.0;
    for (int dz = 0; dz <= 1; ++dz)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx) {
                int xi = x0 + dx, yi = y0 + dy, zi = z0 + dz;
                double w = (dx ? fx : 1 - fx) * (dy ? fy : 1 - fy) * (dz ? fz : 1 - fz);
                if (w == 0.0) continue;
                if (v.dim.in_bounds(xi, yi, zi)) acc += w * v.at(xi, yi, zi);
            }
    return acc;
}

// Nearest-neighbor label sample, out-of-field = 0.
inline std::uint8_t sample_nearest_zero(const LabelMap& m, double x, double y, double z) {
    int xi = static_cast<int>(std::lround(x));
    int yi = static_cast<int>(std::lround(y));
    int zi = static_cast<int>(std::lround(z));
    if (!m.dim.in_bounds(xi, yi, zi)) return 0;
    return m.at(xi, yi, zi);
}

}  // namespace boldseg
