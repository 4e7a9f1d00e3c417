#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "boldseg/core.hpp"
#include "boldseg/nn.hpp"

namespace boldseg {

enum class OptimizerKind { adam, sgd };

inline OptimizerKind optimizer_from_name(const std::string& s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "sgd") return OptimizerKind::sgd;
    fail(ErrKind::bad_config, "unknown optimizer '", s, "' (expected adam or sgd)");
}

inline const char* optimizer_name(OptimizerKind k) {
    return k == OptimizerKind::adam ? "adam" : "sgd";
}

// Adam with bias correction (beta 0.9/0.999, eps 1e-8) or plain SGD. Moment
// state is kept in double regardless of the parameter type.
template <class T>
class Optimizer {
  public:
    Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {
        require(lr > 0 && std::isfinite(lr), ErrKind::bad_config, "optimizer: lr must be > 0");
    }

    void step(std::vector<ParamRef<T>>& params) {
        if (kind_ == OptimizerKind::sgd) {
            for (auto& p : params) {
                for (std::size_t i = 0; i < p.value->size(); ++i)
                    (*p.value)[i] -= static_cast<T>(lr_ * static_cast<double>((*p.grad)[i]));
            }
            return;
        }
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (std::size_t a = 0; a < params.size(); ++a) {
                m_[a].assign(params[a].value->size(), 0.0);
                v_[a].assign(params[a].value->size(), 0.0);
            }
        }
        require(m_.size() == params.size(), ErrKind::precondition,
                "optimizer: parameter registry changed size");
        ++t_;
        double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t a = 0; a < params.size(); ++a) {
            auto& val = *params[a].value;
            auto& grd = *params[a].grad;
            auto& m = m_[a];
            auto& v = v_[a];
            for (std::size_t i = 0; i < val.size(); ++i) {
                double g = static_cast<double>(grd[i]);
                m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
                v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                val[i] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + kEps));
            }
        }
    }

    std::int64_t step_count() const { return t_; }

  private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    OptimizerKind kind_;
    double lr_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace boldseg
