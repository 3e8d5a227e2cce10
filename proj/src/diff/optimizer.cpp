#include "trajcast/diff/optimizer.hpp"

#include <cmath>

#include "trajcast/core/types.hpp"
#include "trajcast/kernels/kernels.hpp"

namespace trajcast::diff {

void Optimizer::step(ParamStore& ps) {
    double norm_sq = 0.0;
    for (const auto& p : ps) {
        const double s = kernels::sum_sq(p->grad.data(), p->grad.size());
        if (!std::isfinite(s)) {
            // locate a concrete offending entry for the diagnostic
            for (size_t i = 0; i < p->grad.size(); ++i)
                if (!std::isfinite(p->grad[i]))
                    throw NumericalError("non-finite gradient in parameter '" + p->name +
                                         "' at index " + std::to_string(i));
            throw NumericalError("non-finite gradient norm in parameter '" + p->name + "'");
        }
        norm_sq += s;
    }
    if (clip_norm_ > 0.0 && norm_sq > clip_norm_ * clip_norm_) {
        const double f = clip_norm_ / std::sqrt(norm_sq);
        for (auto& p : ps) kernels::scale(p->grad.data(), f, p->grad.data(), p->grad.size());
    }
    ++t_;
    update(ps);
    ps.zero_grad();
}

void Sgd::update(ParamStore& ps) {
    for (auto& p : ps) kernels::axpy(p->value.data(), -lr_, p->grad.data(), p->value.size());
}

void Adam::update(ParamStore& ps) {
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& p : ps) {
        auto& m = m_[p->name];
        auto& v = v_[p->name];
        if (m.empty()) m.assign(p->value.size(), 0.0);
        if (v.empty()) v.assign(p->value.size(), 0.0);
        for (size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            p->value[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

std::map<std::string, std::vector<double>> Adam::state() const {
    std::map<std::string, std::vector<double>> st;
    for (const auto& [k, v] : m_) st["adam.m." + k] = v;
    for (const auto& [k, v] : v_) st["adam.v." + k] = v;
    return st;
}

void Adam::load_state(const std::map<std::string, std::vector<double>>& st, int64_t step_count) {
    t_ = step_count;
    m_.clear();
    v_.clear();
    for (const auto& [k, v] : st) {
        if (k.rfind("adam.m.", 0) == 0) m_[k.substr(7)] = v;
        if (k.rfind("adam.v.", 0) == 0) v_[k.substr(7)] = v;
    }
}

}  // namespace trajcast::diff
