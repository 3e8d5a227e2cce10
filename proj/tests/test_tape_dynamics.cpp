#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "support/gradcheck.hpp"
#include "trajcast/core/rng.hpp"
#include "trajcast/dyn/dynamics.hpp"
#include "trajcast/dyn/tape_dynamics.hpp"

using namespace trajcast;
using namespace trajcast::diff;
using namespace trajcast::dyn;
using trajcast::testing::max_grad_rel_err;

namespace {
constexpr double kJitter = 1e-6;
}

TEST_CASE("gradient through one integrator step, relative error < 1e-6") {
    Rng rng(201);
    for (int trial = 0; trial < 10; ++trial) {
        ParamStore ps;
        Parameter& mean = ps.add("u.mean", 1, 2, 2);
        Parameter& covp = ps.add("u.covp", 1, 3, 3);
        for (auto& v : mean.value) v = rng.uniform(-1, 1);
        for (auto& v : covp.value) v = rng.uniform(-1, 0.5);
        const double gx = rng.uniform(-0.5, 0.5), gy = rng.uniform(-0.5, 0.5);

        auto build = [&](Tape& t) {
            auto s = tape_si_init(t, 1, 0.0, 0.0);
            Var cov = t.cov_from_params(t.param(covp));
            s = tape_si_propagate(t, s, t.param(mean), cov, 0.4);
            return t.scale(t.sum_all(tape_si_pos_logp(t, s, gx, gy, kJitter)), -1.0);
        };
        CHECK(max_grad_rel_err(ps, build) < 1e-6);
    }
}

TEST_CASE("zero position error gives exactly zero gradient on integrator action means") {
    ParamStore ps;
    Parameter& mean = ps.add("u.mean", 1, 2, 2);
    Parameter& covp = ps.add("u.covp", 1, 3, 3);
    mean.value = {0.7, -0.3};
    covp.value = {-0.5, -0.5, 0.2};
    const double dt = 0.4;
    const double gx = mean.value[0] * dt, gy = mean.value[1] * dt;  // gt exactly at the mean

    ps.zero_grad();
    Tape t;
    auto s = tape_si_init(t, 1, 0.0, 0.0);
    s = tape_si_propagate(t, s, t.param(mean), t.cov_from_params(t.param(covp)), dt);
    t.backward(t.scale(t.sum_all(tape_si_pos_logp(t, s, gx, gy, kJitter)), -1.0));
    CHECK(mean.grad[0] == 0.0);
    CHECK(mean.grad[1] == 0.0);
    // the covariance parameters still receive gradient from the log det
    CHECK(std::fabs(covp.grad[0]) > 0.0);
}

TEST_CASE("gradient through 6 chained unicycle steps, relative error < 1e-4") {
    Rng rng(203);
    for (int trial = 0; trial < 6; ++trial) {
        const int T = 6;
        ParamStore ps;
        Parameter& act = ps.add("u.act", 1, 2 * T, 2 * T);    // (omega, a) per step
        Parameter& covp = ps.add("u.covp", 1, 3 * T, 3 * T);  // (s1, s2, r) per step
        for (auto& v : act.value) v = rng.uniform(-0.8, 0.8);
        for (auto& v : covp.value) v = rng.uniform(-2.0, -0.5);
        std::vector<Vec2> gts(T);
        for (auto& g : gts) g = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double phi0 = rng.uniform(-2, 2), v0 = rng.uniform(0.5, 4.0);

        auto build = [&](Tape& t) {
            auto s = tape_uni_init(t, 1, 0.0, 0.0, phi0, v0);
            Var acts = t.param(act);
            Var covs = t.param(covp);
            Var loss = t.scalar_const(0.0);
            for (int k = 0; k < T; ++k) {
                Var om = t.slice_cols(acts, 2 * k, 1);
                Var a = t.slice_cols(acts, 2 * k + 1, 1);
                Var cv = t.cov_from_params(t.slice_cols(covs, 3 * k, 3));
                s = tape_uni_propagate(t, s, om, a, cv, 0.5);
                loss = t.add(loss, t.scale(tape_uni_pos_logp(t, s, gts[static_cast<size_t>(k)][0],
                                                             gts[static_cast<size_t>(k)][1], kJitter),
                                           -1.0));
            }
            return loss;
        };
        CHECK(max_grad_rel_err(ps, build) < 1e-4);
    }
}

TEST_CASE("tape unicycle forward equals the value-path propagate (independent routes)") {
    Rng rng(207);
    const int T = 5;
    std::vector<ActionDist> actions(T);
    for (auto& u : actions) {
        u.mean = {rng.uniform(-1, 1), rng.uniform(-1.5, 1.5)};
        const double s1 = rng.uniform(-2, -0.5), s2 = rng.uniform(-2, -0.5);
        const double r = rng.uniform(-0.8, 0.8);
        u.cov = {std::exp(2 * s1), std::tanh(r) * std::exp(s1 + s2), std::exp(2 * s2)};
    }
    const double phi0 = 0.7, v0 = 2.5, dt = 0.4;

    // value path: 4x4 sandwich products
    UniState vs;
    vs.mean = {0.2, -0.1, phi0, v0};
    std::vector<UniState> value_states;
    for (const auto& u : actions) {
        vs = unicycle_propagate(vs, u, dt);
        value_states.push_back(vs);
    }

    // tape path: block-decomposed scalar graph
    Tape t;
    auto ts = tape_uni_init(t, 1, 0.2, -0.1, phi0, v0);
    std::vector<TapeUniState> tape_states;
    for (const auto& u : actions) {
        Var om = t.constant(Shape{1, 1}, u.mean[0]);
        Var a = t.constant(Shape{1, 1}, u.mean[1]);
        std::vector<double> cv{u.cov.xx, u.cov.xy, u.cov.yy};
        ts = tape_uni_propagate(t, ts, om, a, t.constant(Shape{1, 3}, cv), dt);
        tape_states.push_back(ts);
    }

    for (int k = 0; k < T; ++k) {
        const auto& v = value_states[static_cast<size_t>(k)];
        const auto& p = tape_states[static_cast<size_t>(k)];
        CHECK(t.val(p.x)[0] == doctest::Approx(v.mean[0]).epsilon(1e-13));
        CHECK(t.val(p.y)[0] == doctest::Approx(v.mean[1]).epsilon(1e-13));
        CHECK(t.val(p.phi)[0] == doctest::Approx(v.mean[2]).epsilon(1e-13));
        CHECK(t.val(p.v)[0] == doctest::Approx(v.mean[3]).epsilon(1e-13));
        CHECK(t.val(p.pxx)[0] == doctest::Approx(v.cov[0]).epsilon(1e-11));
        CHECK(t.val(p.pxy)[0] == doctest::Approx(v.cov[1]).epsilon(1e-11));
        CHECK(t.val(p.pyy)[0] == doctest::Approx(v.cov[5]).epsilon(1e-11));
        CHECK(t.val(p.cxp)[0] == doctest::Approx(v.cov[2]).epsilon(1e-11));
        CHECK(t.val(p.cxv)[0] == doctest::Approx(v.cov[3]).epsilon(1e-11));
        CHECK(t.val(p.cyp)[0] == doctest::Approx(v.cov[6]).epsilon(1e-11));
        CHECK(t.val(p.cyv)[0] == doctest::Approx(v.cov[7]).epsilon(1e-11));
        CHECK(t.val(p.qpp)[0] == doctest::Approx(v.cov[10]).epsilon(1e-11));
        CHECK(t.val(p.qpv)[0] == doctest::Approx(v.cov[11]).epsilon(1e-11));
        CHECK(t.val(p.qvv)[0] == doctest::Approx(v.cov[15]).epsilon(1e-11));
    }
}

TEST_CASE("row-batched propagation equals per-row propagation") {
    Rng rng(211);
    const int n = 3;
    std::vector<double> om(n), ac(n), cov(3 * static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        om[static_cast<size_t>(i)] = rng.uniform(-1, 1);
        ac[static_cast<size_t>(i)] = rng.uniform(-1, 1);
        cov[3 * static_cast<size_t>(i)] = rng.uniform(0.01, 0.1);
        cov[3 * static_cast<size_t>(i) + 1] = 0.0;
        cov[3 * static_cast<size_t>(i) + 2] = rng.uniform(0.01, 0.1);
    }
    Tape t;
    auto batched = tape_uni_init(t, n, 0, 0, 0.3, 2.0);
    batched = tape_uni_propagate(t, batched, t.constant(Shape{n, 1}, om), t.constant(Shape{n, 1}, ac),
                                 t.constant(Shape{n, 3}, cov), 0.5);
    for (int i = 0; i < n; ++i) {
        Tape ti;
        auto single = tape_uni_init(ti, 1, 0, 0, 0.3, 2.0);
        std::vector<double> c1{cov[3 * static_cast<size_t>(i)], cov[3 * static_cast<size_t>(i) + 1],
                               cov[3 * static_cast<size_t>(i) + 2]};
        single = tape_uni_propagate(ti, single, ti.constant(Shape{1, 1}, om[static_cast<size_t>(i)]),
                                    ti.constant(Shape{1, 1}, ac[static_cast<size_t>(i)]),
                                    ti.constant(Shape{1, 3}, c1), 0.5);
        CHECK(t.val(batched.x)[static_cast<size_t>(i)] == ti.val(single.x)[0]);
        CHECK(t.val(batched.pxx)[static_cast<size_t>(i)] == ti.val(single.pxx)[0]);
        CHECK(t.val(batched.cyv)[static_cast<size_t>(i)] == ti.val(single.cyv)[0]);
    }
}
