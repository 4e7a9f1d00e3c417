#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "boldseg/boundary.hpp"
#include "boldseg/core.hpp"

namespace boldseg {

enum class BaseLoss { ce, dice, focal, ce_dice, focal_dice };

inline const char* base_loss_name(BaseLoss b) {
    switch (b) {
        case BaseLoss::ce: return "ce";
        case BaseLoss::dice: return "dice";
        case BaseLoss::focal: return "focal";
        case BaseLoss::ce_dice: return "ce+dice";
        case BaseLoss::focal_dice: return "focal+dice";
    }
    return "?";
}

struct LossConfig {
    BaseLoss base = BaseLoss::ce;
    bool boundary_weighting = false;
    double w1 = 40.0;
    double w2 = 1.0;
    int kernel = 11;
    double focal_gamma = 2.0;
    double dice_smooth = 1.0;
    double dice_lambda = 1.0;  // weight of the Dice term in "+dice" variants

    void validate() const {
        require(std::isfinite(w1) && std::isfinite(w2) && w1 >= 0 && w2 >= 0,
                ErrKind::bad_config, "loss: w1/w2 must be finite and >= 0");
        require(std::isfinite(focal_gamma) && focal_gamma >= 0, ErrKind::bad_config,
                "loss: focal_gamma must be >= 0");
        require(dice_smooth > 0 && std::isfinite(dice_smooth), ErrKind::bad_config,
                "loss: dice_smooth must be > 0");
        require(std::isfinite(dice_lambda), ErrKind::bad_config, "loss: dice_lambda not finite");
        if (boundary_weighting) {
            check_pool_kernel(kernel);
            require(base != BaseLoss::dice, ErrKind::bad_config,
                    "loss: boundary weighting needs a voxel-wise base (ce or focal), not dice");
        }
    }

    std::string name() const {
        return boundary_weighting ? cat("bw-", base_loss_name(base))
                                  : std::string(base_loss_name(base));
    }
};

inline BaseLoss base_loss_from_name(const std::string& s) {
    if (s == "ce") return BaseLoss::ce;
    if (s == "dice") return BaseLoss::dice;
    if (s == "focal") return BaseLoss::focal;
    if (s == "ce+dice") return BaseLoss::ce_dice;
    if (s == "focal+dice") return BaseLoss::focal_dice;
    fail(ErrKind::bad_config, "unknown base loss '", s, "'");
}

// Parses the CLI loss menu: ce | dice | focal | ce+dice | focal+dice,
// optionally prefixed bw-.
inline LossConfig loss_config_from_name(const std::string& name) {
    LossConfig cfg;
    std::string s = name;
    if (s.rfind("bw-", 0) == 0) {
        cfg.boundary_weighting = true;
        s = s.substr(3);
    }
    cfg.base = base_loss_from_name(s);
    cfg.validate();
    return cfg;
}

// Scalar loss, per-voxel loss field, and the gradient with respect to the
// prediction field.
template <class T>
struct LossResult {
    double value = 0.0;
    std::vector<double> per_voxel;  // voxel-wise term only; empty for pure dice
    std::vector<T> grad;            // dL/dp, same length as p
};

namespace lossdetail {

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

inline double clamp_p(double p) {
    return p < kClampLo ? kClampLo : (p > kClampHi ? kClampHi : p);
}

// Per-voxel cross-entropy and its d/dp. The probability assigned to the true
// class is clamped directly so both extremes saturate at exactly kClampLo.
inline void ce_voxel(double p, double y, double& loss, double& dp) {
    double q = y > 0.5 ? p : 1.0 - p;
    double qc = clamp_p(q);
    loss = -std::log(qc);
    dp = (y > 0.5 ? -1.0 : 1.0) / qc;
}

inline void focal_voxel(double p, double y, double gamma, double& loss, double& dp) {
    double pc = clamp_p(p);
    if (y > 0.5) {
        double q = 1.0 - pc;
        double qg = std::pow(q, gamma);
        loss = -qg * std::log(pc);
        dp = gamma * std::pow(q, gamma - 1.0) * std::log(pc) - qg / pc;
    } else {
        double pg = std::pow(pc, gamma);
        loss = -pg * std::log(1.0 - pc);
        dp = -gamma * std::pow(pc, gamma - 1.0) * std::log(1.0 - pc) + pg / (1.0 - pc);
    }
}

}  // namespace lossdetail

// Mean binary cross-entropy over voxels.
template <class T>
LossResult<T> ce_loss(const T* p, const std::uint8_t* y, std::size_t n) {
    require(n > 0, ErrKind::precondition, "ce_loss: empty field");
    LossResult<T> r;
    r.per_voxel.resize(n);
    r.grad.resize(n);
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l, dp;
        lossdetail::ce_voxel(static_cast<double>(p[i]), y[i], l, dp);
        r.per_voxel[i] = l;
        r.grad[i] = static_cast<T>(dp * inv_n);
    }
    r.value = pairwise_mean(r.per_voxel);
    return r;
}

template <class T>
LossResult<T> focal_loss(const T* p, const std::uint8_t* y, std::size_t n, double gamma) {
    require(n > 0, ErrKind::precondition, "focal_loss: empty field");
    require(gamma >= 0, ErrKind::precondition, "focal_loss: gamma must be >= 0");
    LossResult<T> r;
    r.per_voxel.resize(n);
    r.grad.resize(n);
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l, dp;
        lossdetail::focal_voxel(static_cast<double>(p[i]), y[i], gamma, l, dp);
        r.per_voxel[i] = l;
        r.grad[i] = static_cast<T>(dp * inv_n);
    }
    r.value = pairwise_mean(r.per_voxel);
    return r;
}

// Soft Dice loss 1 - (2*sum(p*y)+s)/(sum(p^2)+sum(y^2)+s). Global overlap
// measure: no per-voxel field.
template <class T>
LossResult<T> dice_loss(const T* p, const std::uint8_t* y, std::size_t n, double smooth) {
    require(n > 0, ErrKind::precondition, "dice_loss: empty field");
    std::vector<double> py(n), pp(n);
    double ysum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double pi = static_cast<double>(p[i]);
        py[i] = pi * y[i];
        pp[i] = pi * pi;
        ysum += y[i];
    }
    double s1 = pairwise_sum(py);
    double s2 = pairwise_sum(pp);
    double den = s2 + ysum + smooth;
    double num = 2.0 * s1 + smooth;
    LossResult<T> r;
    r.value = 1.0 - num / den;
    r.grad.resize(n);
    double den2 = den * den;
    for (std::size_t i = 0; i < n; ++i) {
        double pi = static_cast<double>(p[i]);
        r.grad[i] = static_cast<T>(-(2.0 * y[i] * den - num * 2.0 * pi) / den2);
    }
    return r;
}

// Eq-style weighted loss: per-voxel loss scaled by (1 + W). The scalar is the
// mean of the weighted field; gradients of the underlying loss pick up the
// same per-voxel factor.
template <class T>
LossResult<T> apply_boundary_weighting(const std::vector<double>& per_voxel, const WeightMap& w) {
    require(per_voxel.size() == w.data.size(), ErrKind::precondition,
            "apply_boundary_weighting: dimension mismatch");
    LossResult<T> r;
    r.per_voxel.resize(per_voxel.size());
    r.grad.resize(per_voxel.size());
    double inv_n = 1.0 / static_cast<double>(per_voxel.size());
    for (std::size_t i = 0; i < per_voxel.size(); ++i) {
        double f = 1.0 + static_cast<double>(w.data[i]);
        r.per_voxel[i] = per_voxel[i] * f;
        r.grad[i] = static_cast<T>(f * inv_n);  // d(mean weighted)/d(per_voxel_i)
    }
    r.value = pairwise_mean(r.per_voxel);
    return r;
}

// Full menu: voxel-wise base (boundary-weighted when enabled) plus an optional
// global Dice term. The Dice term is never boundary-weighted: it has no
// per-voxel factorization.
template <class T>
LossResult<T> composite_loss(const T* p, const std::uint8_t* y, std::size_t n,
                             const LossConfig& cfg, const WeightMap* w = nullptr) {
    cfg.validate();
    require(n > 0, ErrKind::precondition, "composite_loss: empty field");
    if (cfg.boundary_weighting) {
        require(w != nullptr, ErrKind::precondition,
                "composite_loss: boundary weighting enabled but no weight map given");
        require(w->data.size() == n, ErrKind::precondition,
                "composite_loss: weight map dimension mismatch");
    }

    if (cfg.base == BaseLoss::dice) return dice_loss(p, y, n, cfg.dice_smooth);

    bool focal = cfg.base == BaseLoss::focal || cfg.base == BaseLoss::focal_dice;
    bool with_dice = cfg.base == BaseLoss::ce_dice || cfg.base == BaseLoss::focal_dice;

    LossResult<T> r;
    r.per_voxel.resize(n);
    r.grad.resize(n);
    double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double l, dp;
        if (focal)
            lossdetail::focal_voxel(static_cast<double>(p[i]), y[i], cfg.focal_gamma, l, dp);
        else
            lossdetail::ce_voxel(static_cast<double>(p[i]), y[i], l, dp);
        double f = cfg.boundary_weighting ? 1.0 + static_cast<double>(w->data[i]) : 1.0;
        r.per_voxel[i] = l * f;
        r.grad[i] = static_cast<T>(dp * f * inv_n);
    }
    r.value = pairwise_mean(r.per_voxel);

    if (with_dice) {
        auto d = dice_loss(p, y, n, cfg.dice_smooth);
        r.value += cfg.dice_lambda * d.value;
        for (std::size_t i = 0; i < n; ++i)
            r.grad[i] += static_cast<T>(cfg.dice_lambda * static_cast<double>(d.grad[i]));
    }
    return r;
}

// Convenience overloads on whole fields.
template <class T>
LossResult<T> ce_loss(const std::vector<T>& p, const LabelMap& y) {
    require(p.size() == y.data.size(), ErrKind::precondition, "ce_loss: dimension mismatch");
    return ce_loss(p.data(), y.data.data(), p.size());
}
template <class T>
LossResult<T> focal_loss(const std::vector<T>& p, const LabelMap& y, double gamma) {
    require(p.size() == y.data.size(), ErrKind::precondition, "focal_loss: dimension mismatch");
    return focal_loss(p.data(), y.data.data(), p.size(), gamma);
}
template <class T>
LossResult<T> dice_loss(const std::vector<T>& p, const LabelMap& y, double smooth = 1.0) {
    require(p.size() == y.data.size(), ErrKind::precondition, "dice_loss: dimension mismatch");
    return dice_loss(p.data(), y.data.data(), p.size(), smooth);
}
template <class T>
LossResult<T> composite_loss(const std::vector<T>& p, const LabelMap& y, const LossConfig& cfg,
                             const WeightMap* w = nullptr) {
    require(p.size() == y.data.size(), ErrKind::precondition,
            "composite_loss: dimension mismatch");
    return composite_loss(p.data(), y.data.data(), p.size(), cfg, w);
}

}  // namespace boldseg
