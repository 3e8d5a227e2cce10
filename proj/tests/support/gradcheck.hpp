#pragma once

// Central finite-difference oracle for gradient checks. Test-only: the
// implementation path under test never calls into this.

#include <cmath>
#include <functional>
#include <vector>

#include "trajcast/diff/param.hpp"
#include "trajcast/diff/tape.hpp"

namespace trajcast::testing {

// Builds the loss once for the analytic gradient, then re-evaluates it
// with every parameter component perturbed by +-h. Returns the worst
// per-parameter relative error  ||g_an - g_fd|| / max(||g_an||, ||g_fd||, floor).
template <typename BuildFn>
double max_grad_rel_err(diff::ParamStore& ps, BuildFn build, double eps = 1e-5,
                        double norm_floor = 1e-7) {
    ps.zero_grad();
    {
        diff::Tape t(1 << 12);
        diff::Var loss = build(t);
        t.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(ps.count());
    for (auto& p : ps) analytic.push_back(p->grad);

    auto value = [&]() {
        diff::Tape t(1 << 12);
        return t.scalar(build(t));
    };

    double worst = 0.0;
    size_t pi = 0;
    for (auto& p : ps) {
        const auto& ga = analytic[pi++];
        double na = 0.0, nf = 0.0, nd = 0.0;
        for (size_t i = 0; i < p->value.size(); ++i) {
            const double orig = p->value[i];
            const double h = eps * std::max(1.0, std::fabs(orig));
            p->value[i] = orig + h;
            const double fp = value();
            p->value[i] = orig - h;
            const double fm = value();
            p->value[i] = orig;
            const double gfd = (fp - fm) / (2.0 * h);
            na += ga[i] * ga[i];
            nf += gfd * gfd;
            nd += (ga[i] - gfd) * (ga[i] - gfd);
        }
        const double denom = std::max({std::sqrt(na), std::sqrt(nf), norm_floor});
        worst = std::max(worst, std::sqrt(nd) / denom);
    }
    return worst;
}

}  // namespace trajcast::testing
