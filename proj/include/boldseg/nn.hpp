#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/rng.hpp"
#include "boldseg/tensor.hpp"
#include "boldseg/threading.hpp"

namespace boldseg {

template <class T>
struct ParamRef {
    std::string name;
    std::vector<T>* value;
    std::vector<T>* grad;
};

template <class T>
struct BufferRef {
    std::string name;
    std::vector<T>* value;
};

// 3D convolution, odd kernel, stride 1, zero padding (k-1)/2 so spatial dims
// are preserved. Weight layout w[co][ci][kz][ky][kx].
template <class T>
struct Conv3d {
    int cin = 0, cout = 0, k = 3;
    std::vector<T> w, b, gw, gb;
    Tensor<T> in_cache;

    Conv3d() = default;
    Conv3d(int cin_, int cout_, int k_) : cin(cin_), cout(cout_), k(k_) {
        require(k % 2 == 1 && k >= 1, ErrKind::precondition, "conv kernel must be odd");
        w.assign(static_cast<std::size_t>(cout) * cin * k * k * k, T(0));
        b.assign(cout, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
    }

    std::size_t widx(int co, int ci, int kz, int ky, int kx) const {
        return ((static_cast<std::size_t>(co) * cin + ci) * k + kz) * static_cast<std::size_t>(k) * k +
               static_cast<std::size_t>(ky) * k + kx;
    }

    void init_he(RngStream& rng) {
        double std = std::sqrt(2.0 / (static_cast<double>(cin) * k * k * k));
        for (auto& v : w) v = static_cast<T>(rng.normal(0.0, std));
        for (auto& v : b) v = T(0);
    }

    void forward(const Tensor<T>& in, Tensor<T>& out) {
        require(in.c == cin, ErrKind::precondition, "conv: expected ", cin, " channels, got ", in.c);
        in_cache = in;
        out.resize(in.n, cout, in.x, in.y, in.z);
        int X = in.x, Y = in.y, Z = in.z, p = (k - 1) / 2;
        std::size_t vox = in.voxels();
        std::size_t tasks = static_cast<std::size_t>(in.n) * cout;
        parallel_for(tasks, [&](std::size_t tb, std::size_t te) {
            std::vector<double> acc(vox);
            for (std::size_t t = tb; t < te; ++t) {
                int n = static_cast<int>(t / cout), co = static_cast<int>(t % cout);
                std::fill(acc.begin(), acc.end(), static_cast<double>(b[co]));
                for (int ci = 0; ci < cin; ++ci) {
                    const T* src = in.slab(n, ci);
                    for (int kz = 0; kz < k; ++kz)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                double wv = static_cast<double>(w[widx(co, ci, kz, ky, kx)]);
                                if (wv == 0.0) continue;
                                int oz0 = std::max(0, p - kz), oz1 = std::min(Z, Z + p - kz);
                                int oy0 = std::max(0, p - ky), oy1 = std::min(Y, Y + p - ky);
                                int ox0 = std::max(0, p - kx), ox1 = std::min(X, X + p - kx);
                                for (int oz = oz0; oz < oz1; ++oz) {
                                    int iz = oz + kz - p;
                                    for (int oy = oy0; oy < oy1; ++oy) {
                                        int iy = oy + ky - p;
                                        double* arow = acc.data() + static_cast<std::size_t>(X) * (oy + static_cast<std::size_t>(Y) * oz);
                                        const T* srow = src + static_cast<std::size_t>(X) * (iy + static_cast<std::size_t>(Y) * iz) + (kx - p);
                                        for (int ox = ox0; ox < ox1; ++ox)
                                            arow[ox] += wv * static_cast<double>(srow[ox]);
                                    }
                                }
                            }
                }
                T* dst = out.slab(n, co);
                for (std::size_t i = 0; i < vox; ++i) dst[i] = static_cast<T>(acc[i]);
            }
        });
    }

    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        const Tensor<T>& in = in_cache;
        require(gout.n == in.n && gout.c == cout && gout.x == in.x && gout.y == in.y &&
                    gout.z == in.z,
                ErrKind::precondition, "conv backward: shape mismatch");
        gin.resize(in.n, cin, in.x, in.y, in.z);
        int X = in.x, Y = in.y, Z = in.z, p = (k - 1) / 2;
        std::size_t vox = in.voxels();

        // Input gradient: correlation with the flipped kernel, gathered so
        // writes stay disjoint per (sample, input-channel).
        std::size_t gtasks = static_cast<std::size_t>(in.n) * cin;
        parallel_for(gtasks, [&](std::size_t tb, std::size_t te) {
            std::vector<double> acc(vox);
            for (std::size_t t = tb; t < te; ++t) {
                int n = static_cast<int>(t / cin), ci = static_cast<int>(t % cin);
                std::fill(acc.begin(), acc.end(), 0.0);
                for (int co = 0; co < cout; ++co) {
                    const T* src = gout.slab(n, co);
                    for (int kz = 0; kz < k; ++kz)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                double wv = static_cast<double>(w[widx(co, ci, kz, ky, kx)]);
                                if (wv == 0.0) continue;
                                // in voxel ix feeds out voxel ox = ix + p - kx
                                int ix0 = std::max(0, kx - p), ix1 = std::min(X, X + kx - p);
                                int iy0 = std::max(0, ky - p), iy1 = std::min(Y, Y + ky - p);
                                int iz0 = std::max(0, kz - p), iz1 = std::min(Z, Z + kz - p);
                                for (int iz = iz0; iz < iz1; ++iz) {
                                    int oz = iz + p - kz;
                                    for (int iy = iy0; iy < iy1; ++iy) {
                                        int oy = iy + p - ky;
                                        double* arow = acc.data() + static_cast<std::size_t>(X) * (iy + static_cast<std::size_t>(Y) * iz);
                                        const T* srow = src + static_cast<std::size_t>(X) * (oy + static_cast<std::size_t>(Y) * oz) + (p - kx);
                                        for (int ix = ix0; ix < ix1; ++ix)
                                            arow[ix] += wv * static_cast<double>(srow[ix]);
                                    }
                                }
                            }
                }
                T* dst = gin.slab(n, ci);
                for (std::size_t i = 0; i < vox; ++i) dst[i] = static_cast<T>(acc[i]);
            }
        });

        // Weight and bias gradients, disjoint per output channel.
        parallel_for(static_cast<std::size_t>(cout), [&](std::size_t cb, std::size_t ce) {
            for (std::size_t co = cb; co < ce; ++co) {
                double bacc = 0.0;
                for (int n = 0; n < in.n; ++n) {
                    const T* g = gout.slab(n, static_cast<int>(co));
                    for (std::size_t i = 0; i < vox; ++i) bacc += static_cast<double>(g[i]);
                }
                gb[co] = static_cast<T>(bacc);
                for (int ci = 0; ci < cin; ++ci)
                    for (int kz = 0; kz < k; ++kz)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                double acc = 0.0;
                                int oz0 = std::max(0, p - kz), oz1 = std::min(Z, Z + p - kz);
                                int oy0 = std::max(0, p - ky), oy1 = std::min(Y, Y + p - ky);
                                int ox0 = std::max(0, p - kx), ox1 = std::min(X, X + p - kx);
                                for (int n = 0; n < in.n; ++n) {
                                    const T* g = gout.slab(n, static_cast<int>(co));
                                    const T* src = in.slab(n, ci);
                                    for (int oz = oz0; oz < oz1; ++oz) {
                                        int iz = oz + kz - p;
                                        for (int oy = oy0; oy < oy1; ++oy) {
                                            int iy = oy + ky - p;
                                            const T* grow = g + static_cast<std::size_t>(X) * (oy + static_cast<std::size_t>(Y) * oz);
                                            const T* srow = src + static_cast<std::size_t>(X) * (iy + static_cast<std::size_t>(Y) * iz) + (kx - p);
                                            for (int ox = ox0; ox < ox1; ++ox)
                                                acc += static_cast<double>(grow[ox]) * static_cast<double>(srow[ox]);
                                        }
                                    }
                                }
                                gw[widx(static_cast<int>(co), ci, kz, ky, kx)] = static_cast<T>(acc);
                            }
            }
        });
    }

    void register_into(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }
};

// Per-channel batch normalization over (batch, x, y, z). Training mode uses
// biased batch statistics and refreshes the running averages; eval mode is a
// fixed affine map from the running statistics.
template <class T>
struct BatchNorm3d {
    int c = 0;
    double eps = 1e-5;
    double momentum = 0.9;  // fraction of the old running value kept per step
    std::vector<T> gamma, beta, ggamma, gbeta;
    std::vector<T> running_mean, running_var;

    Tensor<T> xhat_cache;
    std::vector<double> inv_std_cache;
    bool train_cache = false;

    BatchNorm3d() = default;
    explicit BatchNorm3d(int c_) : c(c_) {
        gamma.assign(c, T(1));
        beta.assign(c, T(0));
        ggamma.assign(c, T(0));
        gbeta.assign(c, T(0));
        running_mean.assign(c, T(0));
        running_var.assign(c, T(1));
    }

    void forward(const Tensor<T>& in, Tensor<T>& out, bool train) {
        require(in.c == c, ErrKind::precondition, "batchnorm: channel mismatch");
        out.resize(in.n, in.c, in.x, in.y, in.z);
        xhat_cache.resize(in.n, in.c, in.x, in.y, in.z);
        inv_std_cache.assign(c, 0.0);
        train_cache = train;
        std::size_t vox = in.voxels();
        double m = static_cast<double>(in.n) * vox;
        for (int ch = 0; ch < c; ++ch) {
            double mean, var;
            if (train) {
                double s = 0.0;
                for (int n = 0; n < in.n; ++n) {
                    const T* src = in.slab(n, ch);
                    for (std::size_t i = 0; i < vox; ++i) s += static_cast<double>(src[i]);
                }
                mean = s / m;
                double v = 0.0;
                for (int n = 0; n < in.n; ++n) {
                    const T* src = in.slab(n, ch);
                    for (std::size_t i = 0; i < vox; ++i) {
                        double d = static_cast<double>(src[i]) - mean;
                        v += d * d;
                    }
                }
                var = v / m;  // biased
                running_mean[ch] = static_cast<T>(momentum * static_cast<double>(running_mean[ch]) + (1.0 - momentum) * mean);
                running_var[ch] = static_cast<T>(momentum * static_cast<double>(running_var[ch]) + (1.0 - momentum) * var);
            } else {
                mean = static_cast<double>(running_mean[ch]);
                var = static_cast<double>(running_var[ch]);
            }
            double inv_std = 1.0 / std::sqrt(var + eps);
            inv_std_cache[ch] = inv_std;
            double g = static_cast<double>(gamma[ch]), bt = static_cast<double>(beta[ch]);
            for (int n = 0; n < in.n; ++n) {
                const T* src = in.slab(n, ch);
                T* xh = xhat_cache.slab(n, ch);
                T* dst = out.slab(n, ch);
                for (std::size_t i = 0; i < vox; ++i) {
                    double h = (static_cast<double>(src[i]) - mean) * inv_std;
                    xh[i] = static_cast<T>(h);
                    dst[i] = static_cast<T>(g * h + bt);
                }
            }
        }
    }

    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        const Tensor<T>& xh = xhat_cache;
        require(gout.same_shape(xh), ErrKind::precondition, "batchnorm backward: shape mismatch");
        gin.resize(gout.n, gout.c, gout.x, gout.y, gout.z);
        std::size_t vox = gout.voxels();
        double m = static_cast<double>(gout.n) * vox;
        for (int ch = 0; ch < c; ++ch) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (int n = 0; n < gout.n; ++n) {
                const T* g = gout.slab(n, ch);
                const T* h = xh.slab(n, ch);
                for (std::size_t i = 0; i < vox; ++i) {
                    sum_g += static_cast<double>(g[i]);
                    sum_gx += static_cast<double>(g[i]) * static_cast<double>(h[i]);
                }
            }
            ggamma[ch] = static_cast<T>(sum_gx);
            gbeta[ch] = static_cast<T>(sum_g);
            double gam = static_cast<double>(gamma[ch]);
            double inv_std = inv_std_cache[ch];
            if (train_cache) {
                for (int n = 0; n < gout.n; ++n) {
                    const T* g = gout.slab(n, ch);
                    const T* h = xh.slab(n, ch);
                    T* d = gin.slab(n, ch);
                    for (std::size_t i = 0; i < vox; ++i)
                        d[i] = static_cast<T>(gam * inv_std *
                                              (static_cast<double>(g[i]) - sum_g / m -
                                               static_cast<double>(h[i]) * sum_gx / m));
                }
            } else {
                for (int n = 0; n < gout.n; ++n) {
                    const T* g = gout.slab(n, ch);
                    T* d = gin.slab(n, ch);
                    for (std::size_t i = 0; i < vox; ++i)
                        d[i] = static_cast<T>(gam * inv_std * static_cast<double>(g[i]));
                }
            }
        }
    }

    void register_into(const std::string& prefix, std::vector<ParamRef<T>>& params,
                       std::vector<BufferRef<T>>& buffers) {
        params.push_back({prefix + ".gamma", &gamma, &ggamma});
        params.push_back({prefix + ".beta", &beta, &gbeta});
        buffers.push_back({prefix + ".running_mean", &running_mean});
        buffers.push_back({prefix + ".running_var", &running_var});
    }
};

template <class T>
struct ReLU {
    Tensor<T> out_cache;

    void forward(const Tensor<T>& in, Tensor<T>& out) {
        out.resize(in.n, in.c, in.x, in.y, in.z);
        for (std::size_t i = 0; i < in.data.size(); ++i)
            out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
        out_cache = out;
    }
    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        require(gout.same_shape(out_cache), ErrKind::precondition, "relu backward: shape mismatch");
        gin.resize(gout.n, gout.c, gout.x, gout.y, gout.z);
        for (std::size_t i = 0; i < gout.data.size(); ++i)
            gin.data[i] = out_cache.data[i] > T(0) ? gout.data[i] : T(0);
    }
};

// 2x2x2 max pooling, stride 2. Ties go to the first position in (z,y,x) scan
// order so the backward route is deterministic.
template <class T>
struct MaxPool2 {
    std::vector<std::int64_t> argmax;  // flat input-slab index per output voxel
    int in_x = 0, in_y = 0, in_z = 0, n = 0, c = 0;

    void forward(const Tensor<T>& in, Tensor<T>& out) {
        require(in.x % 2 == 0 && in.y % 2 == 0 && in.z % 2 == 0, ErrKind::precondition,
                "maxpool: dims must be even, got ", in.shape_str());
        n = in.n; c = in.c; in_x = in.x; in_y = in.y; in_z = in.z;
        out.resize(in.n, in.c, in.x / 2, in.y / 2, in.z / 2);
        argmax.assign(out.size(), 0);
        std::size_t ovox = out.voxels();
        for (int nn = 0; nn < in.n; ++nn)
            for (int ch = 0; ch < in.c; ++ch) {
                const T* src = in.slab(nn, ch);
                T* dst = out.slab(nn, ch);
                std::int64_t* am = argmax.data() + (static_cast<std::size_t>(nn) * c + ch) * ovox;
                std::size_t o = 0;
                for (int oz = 0; oz < out.z; ++oz)
                    for (int oy = 0; oy < out.y; ++oy)
                        for (int ox = 0; ox < out.x; ++ox, ++o) {
                            T best = src[flat(2 * ox, 2 * oy, 2 * oz)];
                            std::int64_t bi = flat(2 * ox, 2 * oy, 2 * oz);
                            for (int dz = 0; dz < 2; ++dz)
                                for (int dy = 0; dy < 2; ++dy)
                                    for (int dx = 0; dx < 2; ++dx) {
                                        std::int64_t i = flat(2 * ox + dx, 2 * oy + dy, 2 * oz + dz);
                                        if (src[i] > best) { best = src[i]; bi = i; }
                                    }
                            dst[o] = best;
                            am[o] = bi;
                        }
            }
    }
    std::int64_t flat(int x, int y, int z) const {
        return x + static_cast<std::int64_t>(in_x) * (y + static_cast<std::int64_t>(in_y) * z);
    }
    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        gin.resize(n, c, in_x, in_y, in_z);
        gin.zero();
        std::size_t ovox = gout.voxels();
        for (int nn = 0; nn < n; ++nn)
            for (int ch = 0; ch < c; ++ch) {
                const T* g = gout.slab(nn, ch);
                T* d = gin.slab(nn, ch);
                const std::int64_t* am = argmax.data() + (static_cast<std::size_t>(nn) * c + ch) * ovox;
                for (std::size_t o = 0; o < ovox; ++o) d[am[o]] += g[o];
            }
    }
};

// Transpose convolution, kernel 2, stride 2: exact upsampling-by-two where
// each output voxel receives one kernel tap per input channel. Weight layout
// w[ci][co][kz][ky][kx].
template <class T>
struct TConv2 {
    int cin = 0, cout = 0;
    std::vector<T> w, b, gw, gb;
    Tensor<T> in_cache;

    TConv2() = default;
    TConv2(int cin_, int cout_) : cin(cin_), cout(cout_) {
        w.assign(static_cast<std::size_t>(cin) * cout * 8, T(0));
        b.assign(cout, T(0));
        gw.assign(w.size(), T(0));
        gb.assign(b.size(), T(0));
    }

    std::size_t widx(int ci, int co, int kz, int ky, int kx) const {
        return ((static_cast<std::size_t>(ci) * cout + co) * 2 + kz) * 4 +
               static_cast<std::size_t>(ky) * 2 + kx;
    }

    void init_he(RngStream& rng) {
        double std = std::sqrt(2.0 / static_cast<double>(cin));
        for (auto& v : w) v = static_cast<T>(rng.normal(0.0, std));
        for (auto& v : b) v = T(0);
    }

    void forward(const Tensor<T>& in, Tensor<T>& out) {
        require(in.c == cin, ErrKind::precondition, "tconv: channel mismatch");
        in_cache = in;
        out.resize(in.n, cout, in.x * 2, in.y * 2, in.z * 2);
        std::size_t tasks = static_cast<std::size_t>(in.n) * cout;
        parallel_for(tasks, [&](std::size_t tb, std::size_t te) {
            for (std::size_t t = tb; t < te; ++t) {
                int n = static_cast<int>(t / cout), co = static_cast<int>(t % cout);
                T* dst = out.slab(n, co);
                std::size_t o = 0;
                for (int oz = 0; oz < out.z; ++oz)
                    for (int oy = 0; oy < out.y; ++oy)
                        for (int ox = 0; ox < out.x; ++ox, ++o) {
                            int iz = oz >> 1, iy = oy >> 1, ix = ox >> 1;
                            int kz = oz & 1, ky = oy & 1, kx = ox & 1;
                            double acc = static_cast<double>(b[co]);
                            std::size_t ii = static_cast<std::size_t>(ix) +
                                             static_cast<std::size_t>(in.x) * (iy + static_cast<std::size_t>(in.y) * iz);
                            for (int ci = 0; ci < cin; ++ci)
                                acc += static_cast<double>(in.slab(n, ci)[ii]) *
                                       static_cast<double>(w[widx(ci, co, kz, ky, kx)]);
                            dst[o] = static_cast<T>(acc);
                        }
            }
        });
    }

    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        const Tensor<T>& in = in_cache;
        require(gout.n == in.n && gout.c == cout && gout.x == in.x * 2 && gout.y == in.y * 2 &&
                    gout.z == in.z * 2,
                ErrKind::precondition, "tconv backward: shape mismatch");
        gin.resize(in.n, cin, in.x, in.y, in.z);
        std::size_t tasks = static_cast<std::size_t>(in.n) * cin;
        parallel_for(tasks, [&](std::size_t tb, std::size_t te) {
            for (std::size_t t = tb; t < te; ++t) {
                int n = static_cast<int>(t / cin), ci = static_cast<int>(t % cin);
                T* dst = gin.slab(n, ci);
                std::size_t i = 0;
                for (int iz = 0; iz < in.z; ++iz)
                    for (int iy = 0; iy < in.y; ++iy)
                        for (int ix = 0; ix < in.x; ++ix, ++i) {
                            double acc = 0.0;
                            for (int co = 0; co < cout; ++co) {
                                const T* g = gout.slab(n, co);
                                for (int kz = 0; kz < 2; ++kz)
                                    for (int ky = 0; ky < 2; ++ky)
                                        for (int kx = 0; kx < 2; ++kx) {
                                            std::size_t oi = static_cast<std::size_t>(2 * ix + kx) +
                                                             static_cast<std::size_t>(gout.x) *
                                                                 (2 * iy + ky + static_cast<std::size_t>(gout.y) * (2 * iz + kz));
                                            acc += static_cast<double>(g[oi]) *
                                                   static_cast<double>(w[widx(ci, co, kz, ky, kx)]);
                                        }
                            }
                            dst[i] = static_cast<T>(acc);
                        }
            }
        });

        std::size_t ivox = in.voxels();
        for (int co = 0; co < cout; ++co) {
            double bacc = 0.0;
            for (int n = 0; n < in.n; ++n) {
                const T* g = gout.slab(n, co);
                for (std::size_t i = 0; i < gout.voxels(); ++i) bacc += static_cast<double>(g[i]);
            }
            gb[co] = static_cast<T>(bacc);
        }
        for (int ci = 0; ci < cin; ++ci)
            for (int co = 0; co < cout; ++co)
                for (int kz = 0; kz < 2; ++kz)
                    for (int ky = 0; ky < 2; ++ky)
                        for (int kx = 0; kx < 2; ++kx) {
                            double acc = 0.0;
                            for (int n = 0; n < in.n; ++n) {
                                const T* src = in.slab(n, ci);
                                const T* g = gout.slab(n, co);
                                std::size_t i = 0;
                                for (int iz = 0; iz < in.z; ++iz)
                                    for (int iy = 0; iy < in.y; ++iy)
                                        for (int ix = 0; ix < in.x; ++ix, ++i) {
                                            std::size_t oi = static_cast<std::size_t>(2 * ix + kx) +
                                                             static_cast<std::size_t>(gout.x) *
                                                                 (2 * iy + ky + static_cast<std::size_t>(gout.y) * (2 * iz + kz));
                                            acc += static_cast<double>(src[i]) * static_cast<double>(g[oi]);
                                        }
                            }
                            gw[widx(ci, co, kz, ky, kx)] = static_cast<T>(acc);
                        }
        (void)ivox;
    }

    void register_into(const std::string& prefix, std::vector<ParamRef<T>>& out) {
        out.push_back({prefix + ".w", &w, &gw});
        out.push_back({prefix + ".b", &b, &gb});
    }
};

template <class T>
struct Sigmoid {
    Tensor<T> out_cache;

    void forward(const Tensor<T>& in, Tensor<T>& out) {
        out.resize(in.n, in.c, in.x, in.y, in.z);
        for (std::size_t i = 0; i < in.data.size(); ++i)
            out.data[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(in.data[i]))));
        out_cache = out;
    }
    void backward(const Tensor<T>& gout, Tensor<T>& gin) {
        require(gout.same_shape(out_cache), ErrKind::precondition,
                "sigmoid backward: shape mismatch");
        gin.resize(gout.n, gout.c, gout.x, gout.y, gout.z);
        for (std::size_t i = 0; i < gout.data.size(); ++i) {
            double s = static_cast<double>(out_cache.data[i]);
            gin.data[i] = static_cast<T>(static_cast<double>(gout.data[i]) * s * (1.0 - s));
        }
    }
};

// Channel concatenation [a | b] and its split for the backward pass.
template <class T>
void concat_channels(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& out) {
    require(a.n == b.n && a.x == b.x && a.y == b.y && a.z == b.z, ErrKind::precondition,
            "concat: spatial/batch mismatch ", a.shape_str(), " vs ", b.shape_str());
    out.resize(a.n, a.c + b.c, a.x, a.y, a.z);
    std::size_t vox = a.voxels();
    for (int n = 0; n < a.n; ++n) {
        for (int c = 0; c < a.c; ++c)
            std::copy(a.slab(n, c), a.slab(n, c) + vox, out.slab(n, c));
        for (int c = 0; c < b.c; ++c)
            std::copy(b.slab(n, c), b.slab(n, c) + vox, out.slab(n, a.c + c));
    }
}

template <class T>
void split_channels(const Tensor<T>& g, int ca, Tensor<T>& ga, Tensor<T>& gb) {
    require(ca > 0 && ca < g.c, ErrKind::precondition, "split: bad channel split");
    ga.resize(g.n, ca, g.x, g.y, g.z);
    gb.resize(g.n, g.c - ca, g.x, g.y, g.z);
    std::size_t vox = g.voxels();
    for (int n = 0; n < g.n; ++n) {
        for (int c = 0; c < ca; ++c)
            std::copy(g.slab(n, c), g.slab(n, c) + vox, ga.slab(n, c));
        for (int c = ca; c < g.c; ++c)
            std::copy(g.slab(n, c), g.slab(n, c) + vox, gb.slab(n, c - ca));
    }
}

}  // namespace boldseg
