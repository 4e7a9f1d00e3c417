#pragma once

#include <cstddef>
#include <vector>

#include "boldseg/core.hpp"

namespace boldseg {

// Dense 5D tensor (batch, channels, x, y, z), x fastest within a channel so a
// channel slice matches Volume layout.
template <class T>
struct Tensor {
    int n = 0, c = 0, x = 0, y = 0, z = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int x_, int y_, int z_) { resize(n_, c_, x_, y_, z_); }

    void resize(int n_, int c_, int x_, int y_, int z_) {
        require(n_ > 0 && c_ > 0 && x_ > 0 && y_ > 0 && z_ > 0, ErrKind::precondition,
                "tensor dims must be positive, got (", n_, ",", c_, ",", x_, ",", y_, ",", z_, ")");
        n = n_; c = c_; x = x_; y = y_; z = z_;
        data.assign(size(), T(0));
    }

    std::size_t size() const {
        return static_cast<std::size_t>(n) * c * x * y * z;
    }
    std::size_t voxels() const {
        return static_cast<std::size_t>(x) * y * z;
    }
    std::size_t idx(int in, int ic, int ix, int iy, int iz) const {
        return static_cast<std::size_t>(ix) +
               static_cast<std::size_t>(x) *
                   (static_cast<std::size_t>(iy) +
                    static_cast<std::size_t>(y) *
                        (static_cast<std::size_t>(iz) +
                         static_cast<std::size_t>(z) *
                             (static_cast<std::size_t>(ic) + static_cast<std::size_t>(c) * in)));
    }
    T& at(int in, int ic, int ix, int iy, int iz) { return data[idx(in, ic, ix, iy, iz)]; }
    const T& at(int in, int ic, int ix, int iy, int iz) const {
        return data[idx(in, ic, ix, iy, iz)];
    }

    // Start of one (sample, channel) slab of x*y*z contiguous values.
    T* slab(int in, int ic) { return data.data() + idx(in, ic, 0, 0, 0); }
    const T* slab(int in, int ic) const { return data.data() + idx(in, ic, 0, 0, 0); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && x == o.x && y == o.y && z == o.z;
    }
    std::string shape_str() const { return cat("(", n, ",", c, ",", x, ",", y, ",", z, ")"); }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

}  // namespace boldseg
