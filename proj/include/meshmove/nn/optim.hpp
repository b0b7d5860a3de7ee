#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "meshmove/errors.hpp"

namespace meshmove::nn {

/// Adam with a Nesterov look-ahead on the first moment, no weight decay.
class NAdam {
public:
    NAdam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {
        if (!(learning_rate > 0.0)) throw ValidationError("optimizer: learning rate must be > 0");
    }

    void step(std::span<double> params, std::span<const double> grad) {
        if (params.size() != m_.size() || grad.size() != m_.size()) {
            throw ValidationError("optimizer: parameter/gradient size mismatch");
        }
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c1_next = 1.0 - std::pow(b1_, static_cast<double>(t_ + 1));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * grad[i];
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grad[i] * grad[i];
            const double m_hat = b1_ * m_[i] / c1_next + (1.0 - b1_) * grad[i] / c1;
            const double v_hat = v_[i] / c2;
            params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
        }
    }

    long steps() const noexcept { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

} // namespace meshmove::nn
