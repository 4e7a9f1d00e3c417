#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace boldseg {

// Error categories, mapped to distinct CLI exit codes in tools/.
enum class ErrKind {
    precondition,  // domain precondition violated (e.g. empty mask)
    bad_data,      // malformed file content
    bad_config,    // config/schema violation
    io,            // missing or unreadable file
    internal
};

class Error : public std::runtime_error {
public:
    Error(ErrKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
    ErrKind kind() const noexcept { return kind_; }

private:
    ErrKind kind_;
};

namespace detail {
inline void cat_one(std::ostringstream&) {}
template <class T, class... Rest>
void cat_one(std::ostringstream& oss, const T& v, const Rest&... rest) {
    oss << v;
    cat_one(oss, rest...);
}
}  // namespace detail

// Builds a string from streamable pieces; used for error messages.
template <class... Args>
std::string cat(const Args&... args) {
    std::ostringstream oss;
    detail::cat_one(oss, args...);
    return oss.str();
}

template <class... Args>
[[noreturn]] void fail(ErrKind kind, const Args&... args) {
    throw Error(kind, cat(args...));
}

template <class... Args>
void require(bool cond, ErrKind kind, const Args&... args) {
    if (!cond) fail(kind, args...);
}

// Grid dimensions. Storage is x-fastest everywhere in this library:
// linear index = x + nx*(y + ny*z).
struct Shape3 {
    int nx = 0, ny = 0, nz = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t idx(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
    }
    bool in_bounds(int x, int y, int z) const {
        return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
    }
    bool operator==(const Shape3& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
    bool operator!=(const Shape3& o) const { return !(*this == o); }

    std::string str() const { return cat(nx, "x", ny, "x", nz); }
};

inline void check_positive_dims(const Shape3& d, const char* what = "grid") {
    require(d.nx > 0 && d.ny > 0 && d.nz > 0, ErrKind::precondition, what,
            ": dimensions must be positive, got ", d.str());
}

// Voxel spacing in mm.
struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    bool operator==(const Spacing& o) const { return sx == o.sx && sy == o.sy && sz == o.sz; }
    bool operator!=(const Spacing& o) const { return !(*this == o); }
    std::string str() const { return cat(sx, "x", sy, "x", sz, "mm"); }
};

inline void check_positive_spacing(const Spacing& s, const char* what = "grid") {
    require(s.sx > 0 && std::isfinite(s.sx) && s.sy > 0 && std::isfinite(s.sy) && s.sz > 0 &&
                std::isfinite(s.sz),
            ErrKind::precondition, what, ": spacing must be positive and finite, got ", s.str());
}

namespace detail {
template <class T>
double pairwise_sum_range(const T* v, std::size_t n) {
    // Fixed-shape reduction tree: deterministic and accurate regardless of caller.
    if (n <= 64) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(v[i]);
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum_range(v, half) + pairwise_sum_range(v + half, n - half);
}
}  // namespace detail

template <class T>
double pairwise_sum(const std::vector<T>& v) {
    return detail::pairwise_sum_range(v.data(), v.size());
}

template <class T>
double pairwise_sum(const T* v, std::size_t n) {
    return detail::pairwise_sum_range(v, n);
}

template <class T>
double pairwise_mean(const std::vector<T>& v) {
    if (v.empty()) fail(ErrKind::precondition, "mean of empty range");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

// Nearest-rank percentile on a sorted range: 0-based index ceil(q*N)-1.
template <class T>
T percentile_nearest_rank_sorted(const std::vector<T>& sorted, double q) {
    if (sorted.empty()) fail(ErrKind::precondition, "percentile of empty range");
    double r = std::ceil(q * static_cast<double>(sorted.size()));
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(r) - 1;
    if (i < 0) i = 0;
    if (i >= static_cast<std::ptrdiff_t>(sorted.size()))
        i = static_cast<std::ptrdiff_t>(sorted.size()) - 1;
    return sorted[static_cast<std::size_t>(i)];
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace boldseg
