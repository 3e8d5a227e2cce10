#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "trajcast/core/rng.hpp"
#include "trajcast/dyn/dynamics.hpp"

using namespace trajcast;
using namespace trajcast::dyn;

namespace {

// fine-step RK4 oracle for the continuous unicycle ODE
std::array<double, 4> rk4_unicycle(std::array<double, 4> s, double omega, double a, double dt,
                                   int substeps) {
    auto f = [&](const std::array<double, 4>& q) {
        return std::array<double, 4>{q[3] * std::cos(q[2]), q[3] * std::sin(q[2]), omega, a};
    };
    const double h = dt / substeps;
    for (int i = 0; i < substeps; ++i) {
        const auto k1 = f(s);
        std::array<double, 4> s2;
        for (int j = 0; j < 4; ++j) s2[j] = s[j] + 0.5 * h * k1[j];
        const auto k2 = f(s2);
        for (int j = 0; j < 4; ++j) s2[j] = s[j] + 0.5 * h * k2[j];
        const auto k3 = f(s2);
        for (int j = 0; j < 4; ++j) s2[j] = s[j] + h * k3[j];
        const auto k4 = f(s2);
        for (int j = 0; j < 4; ++j) s[j] += h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    }
    return s;
}

double frob(const std::array<double, 16>& m) {
    double s = 0;
    for (double v : m) s += v * v;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("si_propagate: null action leaves the state unchanged") {
    SiState s{{1.0, -2.0}, {0.3, 0.1, 0.2}};
    const SiState out = si_propagate(s, ActionDist{{0, 0}, {0, 0, 0}}, 0.25);
    CHECK(out.mean == s.mean);
    CHECK(out.cov.xx == s.cov.xx);
    CHECK(out.cov.xy == s.cov.xy);
    CHECK(out.cov.yy == s.cov.yy);
}

TEST_CASE("si_propagate: direct substitution") {
    SiState s{{0, 0}, {0, 0, 0}};
    ActionDist u{{1, 0}, {0.01, 0, 0.01}};
    const SiState out = si_propagate(s, u, 0.1);
    CHECK(out.mean[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(out.mean[1] == 0.0);
    CHECK(out.cov.xx == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(out.cov.xy == 0.0);
    CHECK(out.cov.yy == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("si_propagate rejects non-PSD inputs") {
    SiState s{{0, 0}, {1.0, 2.0, 1.0}};  // det < 0
    CHECK_THROWS_AS(si_propagate(s, ActionDist{}, 0.1), InputError);
}

TEST_CASE("12-step integrator rollout matches Monte Carlo within statistical error") {
    Rng rng(101);
    const double dt = 0.4;
    std::vector<ActionDist> actions(12);
    for (auto& u : actions) {
        u.mean = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double sx = rng.uniform(0.05, 0.3), sy = rng.uniform(0.05, 0.3);
        const double rho = rng.uniform(-0.6, 0.6);
        u.cov = {sx * sx, rho * sx * sy, sy * sy};
    }
    const auto traj = integrate_prediction(InitialState{{0, 0}, {}, 0, 0}, actions, dt,
                                           DynModel::integrator);

    const int n = 200000;
    Vec2 mean_acc{0, 0};
    double cxx = 0, cxy = 0, cyy = 0;
    std::vector<Vec2> finals(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec2 p{0, 0};
        for (const auto& u : actions) p = p + dt * sample_gauss2(u.mean, u.cov, rng);
        finals[static_cast<size_t>(i)] = p;
        mean_acc = mean_acc + p;
    }
    mean_acc = (1.0 / n) * mean_acc;
    for (const auto& p : finals) {
        cxx += (p[0] - mean_acc[0]) * (p[0] - mean_acc[0]);
        cxy += (p[0] - mean_acc[0]) * (p[1] - mean_acc[1]);
        cyy += (p[1] - mean_acc[1]) * (p[1] - mean_acc[1]);
    }
    cxx /= n - 1;
    cxy /= n - 1;
    cyy /= n - 1;

    const GaussStep& last = traj.back();
    const double se_x = std::sqrt(last.cov.xx / n), se_y = std::sqrt(last.cov.yy / n);
    CHECK(std::fabs(mean_acc[0] - last.mean[0]) < 3 * se_x);
    CHECK(std::fabs(mean_acc[1] - last.mean[1]) < 3 * se_y);
    const double num = std::sqrt((cxx - last.cov.xx) * (cxx - last.cov.xx) +
                                 2 * (cxy - last.cov.xy) * (cxy - last.cov.xy) +
                                 (cyy - last.cov.yy) * (cyy - last.cov.yy));
    const double den = std::sqrt(last.cov.xx * last.cov.xx + 2 * last.cov.xy * last.cov.xy +
                                 last.cov.yy * last.cov.yy);
    CHECK(num / den < 0.01);
}

TEST_CASE("integrator chain equals the one-shot closed form") {
    Rng rng(103);
    const double dt = 0.5;
    std::vector<ActionDist> actions(8);
    Cov2 total{0, 0, 0};
    for (auto& u : actions) {
        u.mean = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const double sx = rng.uniform(0.1, 0.4), sy = rng.uniform(0.1, 0.4);
        u.cov = {sx * sx, 0.3 * sx * sy, sy * sy};
        total = total + u.cov;
    }
    const Cov2 c0{0.2, 0.05, 0.1};
    const auto traj =
        integrate_prediction(InitialState{{1, 1}, c0, 0, 0}, actions, dt, DynModel::integrator);
    // independently computed closed form: cov(T) = cov(0) + dt^2 * sum(cov_u)
    CHECK(traj.back().cov.xx == doctest::Approx(c0.xx + dt * dt * total.xx).epsilon(1e-12));
    CHECK(traj.back().cov.xy == doctest::Approx(c0.xy + dt * dt * total.xy).epsilon(1e-12));
    CHECK(traj.back().cov.yy == doctest::Approx(c0.yy + dt * dt * total.yy).epsilon(1e-12));
}

TEST_CASE("unicycle mean: straight line and constant acceleration") {
    const auto straight = unicycle_step_mean({0, 0, 0, 1}, 0.0, 0.0, 1.0);
    CHECK(straight[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(straight[1] == 0.0);
    CHECK(straight[2] == 0.0);
    CHECK(straight[3] == 1.0);

    const auto accel = unicycle_step_mean({0, 0, 0, 0}, 0.0, 1.0, 1.0);
    CHECK(accel[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(accel[3] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("unicycle mean matches RK4 at dt/1000 to 1e-8") {
    for (const auto& [om, a, phi, v] :
         {std::tuple{M_PI / 2, 0.0, 0.0, 1.0}, {0.7, 0.5, -1.2, 3.0}, {-1.1, 2.0, 2.0, 0.5},
          {1e-7, 1.0, 0.4, 2.0}, {0.05, -0.5, 0.0, 4.0}}) {
        const std::array<double, 4> s0{0.3, -0.6, phi, v};
        const auto got = unicycle_step_mean(s0, om, a, 1.0);
        const auto want = rk4_unicycle(s0, om, a, 1.0, 1000);
        for (int i = 0; i < 4; ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-8);
    }
}

TEST_CASE("unicycle jacobians match central finite differences") {
    Rng rng(107);
    for (int trial = 0; trial < 30; ++trial) {
        const std::array<double, 4> s{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3),
                                      rng.uniform(0, 5)};
        // include omegas straddling the series cut at |omega*dt| = 0.1
        const double om = trial % 3 == 0 ? rng.uniform(-0.2, 0.2) : rng.uniform(-1.2, 1.2);
        const double a = rng.uniform(-3, 3);
        const double dt = 0.25;
        std::array<double, 16> A;
        std::array<double, 8> B;
        unicycle_jacobians(s, om, a, dt, A, B);

        const double eps = 1e-6;
        for (int j = 0; j < 4; ++j) {
            auto sp = s, sm = s;
            sp[j] += eps;
            sm[j] -= eps;
            const auto fp = unicycle_step_mean(sp, om, a, dt);
            const auto fm = unicycle_step_mean(sm, om, a, dt);
            for (int i = 0; i < 4; ++i) {
                const double fd = (fp[i] - fm[i]) / (2 * eps);
                CHECK(std::fabs(A[4 * i + j] - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
            }
        }
        for (int j = 0; j < 2; ++j) {
            const double up[2] = {om + (j == 0 ? eps : 0.0), a + (j == 1 ? eps : 0.0)};
            const double um[2] = {om - (j == 0 ? eps : 0.0), a - (j == 1 ? eps : 0.0)};
            const auto fp = unicycle_step_mean(s, up[0], up[1], dt);
            const auto fm = unicycle_step_mean(s, um[0], um[1], dt);
            for (int i = 0; i < 4; ++i) {
                const double fd = (fp[i] - fm[i]) / (2 * eps);
                CHECK(std::fabs(B[2 * i + j] - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
            }
        }
    }
}

TEST_CASE("unicycle_propagate: deterministic limit and MC covariance agreement") {
    UniState s;
    s.mean = {0, 0, 0.4, 2.0};
    const ActionDist u0{{0.3, 0.5}, {0, 0, 0}};
    const UniState det = unicycle_propagate(s, u0, 0.5);
    const auto want = unicycle_step_mean(s.mean, 0.3, 0.5, 0.5);
    for (int i = 0; i < 4; ++i) CHECK(det.mean[i] == doctest::Approx(want[i]).epsilon(1e-15));
    CHECK(frob(det.cov) == 0.0);

    // linearized covariance vs 10^6-sample Monte Carlo through the exact step
    Rng rng(109);
    const ActionDist u{{0.3, 0.0}, {1e-4, 0, 1e-4}};
    const UniState lin = unicycle_propagate(s, u, 0.5);
    const int n = 1000000;
    std::array<double, 4> mean_acc{};
    std::vector<std::array<double, 4>> samples(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const Vec2 a = sample_gauss2(u.mean, u.cov, rng);
        samples[static_cast<size_t>(i)] = unicycle_step_mean(s.mean, a[0], a[1], 0.5);
        for (int j = 0; j < 4; ++j) mean_acc[j] += samples[static_cast<size_t>(i)][j];
    }
    for (auto& m : mean_acc) m /= n;
    std::array<double, 16> mc{};
    for (const auto& q : samples)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) mc[4 * i + j] += (q[i] - mean_acc[i]) * (q[j] - mean_acc[j]);
    for (auto& v : mc) v /= n - 1;

    std::array<double, 16> diff;
    for (int i = 0; i < 16; ++i) diff[i] = mc[i] - lin.cov[i];
    CHECK(frob(diff) / frob(lin.cov) < 0.05);
    for (int i = 0; i < 4; ++i) {
        const double se = std::sqrt(lin.cov[4 * i + i] / n);
        CHECK(std::fabs(mean_acc[i] - lin.mean[i]) < 3 * se + 1e-9);
    }
}

TEST_CASE("propagated covariances stay symmetric PSD over long horizons") {
    Rng rng(113);
    UniState s;
    s.mean = {0, 0, 0.2, 3.0};
    for (int k = 0; k < 40; ++k) {
        const ActionDist u{{rng.uniform(-1, 1), rng.uniform(-2, 2)},
                           {2e-3, 5e-4, 4e-3}};
        s = unicycle_propagate(s, u, 0.25);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) CHECK(s.cov[4 * i + j] == s.cov[4 * j + i]);
        // diagonal dominance of eigenvalues: check quadratic form on probes
        Rng prober(7);
        for (int probe = 0; probe < 8; ++probe) {
            std::array<double, 4> z;
            for (auto& v : z) v = prober.uniform(-1, 1);
            double q = 0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) q += z[i] * s.cov[4 * i + j] * z[j];
            CHECK(q >= -1e-10);
        }
    }
}

TEST_CASE("integrate_prediction: stationary under zero actions, feasibility under sampling") {
    std::vector<ActionDist> zero(6);
    const auto traj = integrate_prediction(InitialState{{2, 3}, {}, 0, 0}, zero, 0.5,
                                           DynModel::integrator);
    for (const auto& g : traj) {
        CHECK(g.mean[0] == 2.0);
        CHECK(g.mean[1] == 3.0);
    }

    Rng rng(127);
    const Limits lim{15.0, 1.2, 4.0};
    std::vector<ActionDist> actions(8);
    for (auto& u : actions) {
        u.mean = {rng.uniform(-2, 2), rng.uniform(-6, 6)};  // deliberately beyond limits
        u.cov = {0.25, 0.0, 1.0};
    }
    for (int i = 0; i < 1000; ++i) {
        InitialState init{{0, 0}, {}, rng.uniform(-3, 3), rng.uniform(0, 14)};
        // track v and omega along the sampled rollout by reproducing the clamps
        Rng fork = rng.fork(static_cast<uint64_t>(i));
        std::array<double, 4> s{0, 0, init.heading, init.speed};
        for (const auto& u : actions) {
            Vec2 a = sample_gauss2(u.mean, u.cov, fork);
            a[0] = clamp(a[0], -lim.omega_max, lim.omega_max);
            a[1] = clamp(a[1], -lim.a_max, lim.a_max);
            CHECK(std::fabs(a[0]) <= lim.omega_max);
            CHECK(std::fabs(a[1]) <= lim.a_max);
            s = unicycle_step_mean(s, a[0], a[1], 0.5);
            s[3] = clamp(s[3], 0.0, lim.v_max);
            CHECK(s[3] >= 0.0);
            CHECK(s[3] <= lim.v_max);
        }
    }
}

TEST_CASE("model mismatch guards") {
    CHECK_THROWS_AS(si_propagate(SiState{{0, 0}, {-1, 0, -1}}, ActionDist{}, 0.1), InputError);
    UniState s;
    CHECK_THROWS_AS(unicycle_propagate(s, ActionDist{{0, 0}, {1, 2, 1}}, 0.1), InputError);
}
