#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "boldseg/volume.hpp"

namespace boldseg {

// Splits an interleaved acquisition into its two temporal passes: even-index
// slices along z go to the first output, odd-index to the second, and the
// slice spacing doubles (e.g. 3mm -> 6mm).
inline std::pair<Volume, Volume> split_interleaved(const Volume& v) {
    require(v.dim.nz % 2 == 0, ErrKind::precondition,
            "split_interleaved: slice count along z must be even, got ", v.dim.nz);
    Shape3 hd{v.dim.nx, v.dim.ny, v.dim.nz / 2};
    Spacing hs{v.spacing.sx, v.spacing.sy, v.spacing.sz * 2.0};
    std::vector<float> even(hd.size()), odd(hd.size());
    std::size_t slab = static_cast<std::size_t>(v.dim.nx) * v.dim.ny;
    for (int z = 0; z < hd.nz; ++z) {
        std::copy_n(v.data.data() + (2 * z) * slab, slab, even.data() + z * slab);
        std::copy_n(v.data.data() + (2 * z + 1) * slab, slab, odd.data() + z * slab);
    }
    return {Volume(hd, hs, std::move(even)), Volume(hd, hs, std::move(odd))};
}

// Inverse of split_interleaved; mainly for round-trip checks.
inline Volume merge_interleaved(const Volume& even, const Volume& odd) {
    check_same_grid(even.dim, odd.dim, "merge_interleaved");
    Shape3 d{even.dim.nx, even.dim.ny, even.dim.nz * 2};
    Spacing s{even.spacing.sx, even.spacing.sy, even.spacing.sz / 2.0};
    std::vector<float> out(d.size());
    std::size_t slab = static_cast<std::size_t>(d.nx) * d.ny;
    for (int z = 0; z < even.dim.nz; ++z) {
        std::copy_n(even.data.data() + z * slab, slab, out.data() + (2 * z) * slab);
        std::copy_n(odd.data.data() + z * slab, slab, out.data() + (2 * z + 1) * slab);
    }
    return Volume(d, s, std::move(out));
}

// Trilinear resample onto a new grid. Output dims = ceil(dim*spacing/target).
// Voxel centers sit at index*spacing, so target == source is an exact identity.
inline Volume resample_linear(const Volume& v, Spacing target) {
    check_positive_spacing(target, "resample_linear");
    auto out_dim = [](int n, double s, double t) {
        return static_cast<int>(std::ceil(static_cast<double>(n) * s / t));
    };
    Shape3 d{out_dim(v.dim.nx, v.spacing.sx, target.sx),
             out_dim(v.dim.ny, v.spacing.sy, target.sy),
             out_dim(v.dim.nz, v.spacing.sz, target.sz)};
    std::vector<float> out(d.size());
    double rx = target.sx / v.spacing.sx, ry = target.sy / v.spacing.sy,
           rz = target.sz / v.spacing.sz;
    std::size_t i = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x, ++i) {
                double sx = x * rx, sy = y * ry, sz = z * rz;
                if (sx == std::floor(sx) && sy == std::floor(sy) && sz == std::floor(sz) &&
                    v.dim.in_bounds(int(sx), int(sy), int(sz))) {
                    out[i] = v.at(int(sx), int(sy), int(sz));  // exact grid hit
                } else {
                    out[i] = static_cast<float>(sample_trilinear_clamped(v, sx, sy, sz));
                }
            }
    return Volume(d, target, std::move(out));
}

// Nearest-rank 90th percentile of all voxels.
inline float p90_intensity(const Volume& v) {
    std::vector<float> sorted(v.data);
    std::sort(sorted.begin(), sorted.end());
    return percentile_nearest_rank_sorted(sorted, 0.90);
}

// Maps the 90th-percentile intensity to 1. Whole-volume percentile, no masking.
inline Volume normalize_p90(const Volume& v) {
    float p90 = p90_intensity(v);
    require(p90 > 0.0f, ErrKind::precondition,
            "normalize_p90: 90th percentile is ", p90, "; volume too dark to normalize");
    std::vector<float> out(v.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v.data[i] / p90;
    return Volume(v.dim, v.spacing, std::move(out));
}

namespace detail {

// Per-axis copy window for centered crop/pad. When the margin is odd the
// extra voxel goes to the high-index side.
struct AxisMap {
    int src_off, dst_off, count;
};

inline AxisMap axis_map(int src, int dst) {
    if (src >= dst) {
        int rem = src - dst;
        return {rem / 2, 0, dst};
    }
    int add = dst - src;
    return {0, add / 2, src};
}

template <class T>
std::vector<T> crop_or_pad_data(const std::vector<T>& in, const Shape3& sd, const Shape3& dd,
                                T fill) {
    std::vector<T> out(dd.size(), fill);
    AxisMap mx = axis_map(sd.nx, dd.nx), my = axis_map(sd.ny, dd.ny), mz = axis_map(sd.nz, dd.nz);
    for (int z = 0; z < mz.count; ++z)
        for (int y = 0; y < my.count; ++y) {
            const T* src = &in[sd.idx(mx.src_off, my.src_off + y, mz.src_off + z)];
            T* dst = &out[dd.idx(mx.dst_off, my.dst_off + y, mz.dst_off + z)];
            std::copy_n(src, mx.count, dst);
        }
    return out;
}

}  // namespace detail

// Centered crop and/or zero-pad to target dims, per axis independently.
inline Volume crop_or_pad(const Volume& v, Shape3 target) {
    check_positive_dims(target, "crop_or_pad");
    if (target == v.dim) return v;
    return Volume(target, v.spacing,
                  detail::crop_or_pad_data<float>(v.data, v.dim, target, 0.0f));
}

inline LabelMap crop_or_pad(const LabelMap& m, Shape3 target) {
    check_positive_dims(target, "crop_or_pad");
    if (target == m.dim) return m;
    return LabelMap(target, m.spacing,
                    detail::crop_or_pad_data<std::uint8_t>(m.data, m.dim, target, 0));
}

}  // namespace boldseg
