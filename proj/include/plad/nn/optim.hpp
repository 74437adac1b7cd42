#pragma once

#include <cstdint>
#include <vector>

#include "plad/nn/autodiff.hpp"

namespace plad::nn {

class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// One update from the gradients currently stored in `ps`.
    void step(ParamSet& ps);
    std::int64_t steps() const noexcept { return t_; }

    double lr;

private:
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

class Sgd {
public:
    explicit Sgd(double lr) : lr(lr) {}
    /// value -= lr * grad_scale * grad
    void step(ParamSet& ps, double grad_scale = 1.0) const;

    double lr;
};

}  // namespace plad::nn
