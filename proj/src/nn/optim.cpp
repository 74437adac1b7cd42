#include "plad/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace plad::nn {

void Adam::step(ParamSet& ps) {
    if (m_.empty()) {
        for (const auto& p : ps) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    if (m_.size() != ps.blocks()) throw std::logic_error("optimizer bound to a different parameter set");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::size_t b = 0;
    for (auto& p : ps) {
        auto& m = m_[b];
        auto& v = v_[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
        ++b;
    }
}

void Sgd::step(ParamSet& ps, double grad_scale) const {
    const double s = lr * grad_scale;
    for (auto& p : ps) {
        for (std::size_t i = 0; i < p.size(); ++i) p.value[i] -= s * p.grad[i];
    }
}

}  // namespace plad::nn
