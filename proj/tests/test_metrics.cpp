#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "trajcast/core/rng.hpp"
#include "trajcast/metrics/metrics.hpp"

using namespace trajcast;
using namespace trajcast::metrics;

namespace {

std::vector<Vec2> random_traj(Rng& rng, int T, double scale = 5.0) {
    std::vector<Vec2> out;
    for (int k = 0; k < T; ++k)
        out.push_back({rng.uniform(-scale, scale), rng.uniform(-scale, scale)});
    return out;
}

}  // namespace

TEST_CASE("ade: exact cases and independent recomputation") {
    Rng rng(401);
    const auto gt = random_traj(rng, 12);
    CHECK(ade(gt, gt) == 0.0);

    auto offset = gt;
    for (auto& p : offset) p = p + Vec2{0.3, 0.4};
    CHECK(ade(offset, gt) == doctest::Approx(0.5).epsilon(1e-12));

    const auto pred = random_traj(rng, 12);
    double want = 0.0;  // independent per-step recomputation
    for (size_t i = 0; i < pred.size(); ++i)
        want += std::sqrt((pred[i][0] - gt[i][0]) * (pred[i][0] - gt[i][0]) +
                          (pred[i][1] - gt[i][1]) * (pred[i][1] - gt[i][1]));
    want /= 12.0;
    CHECK(ade(pred, gt) == doctest::Approx(want).epsilon(1e-14));

    CHECK_THROWS_AS(ade(pred, std::vector<Vec2>{{0, 0}}), InputError);
}

TEST_CASE("fde: exact cases and the horizon bound") {
    Rng rng(402);
    const auto gt = random_traj(rng, 8);
    CHECK(fde(gt, gt) == 0.0);
    auto pred = gt;
    pred.back() = pred.back() + Vec2{1.0, 0.0};
    CHECK(fde(pred, gt) == doctest::Approx(1.0).epsilon(1e-14));

    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_traj(rng, 8), b = random_traj(rng, 8);
        double max_step = 0.0;
        for (size_t i = 0; i < a.size(); ++i) max_step = std::max(max_step, dist(a[i], b[i]));
        CHECK(fde(a, b) <= 8.0 * max_step + 1e-12);
    }
}

TEST_CASE("metric axioms hold on 1000 random cases") {
    Rng rng(403);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_traj(rng, 6), b = random_traj(rng, 6), c = random_traj(rng, 6);
        for (auto metric : {&ade, &fde}) {
            const double ab = metric(a, b), ba = metric(b, a);
            CHECK(ab == ba);                       // symmetry
            CHECK(ab >= 0.0);                      // nonnegativity
            CHECK(metric(a, a) == 0.0);            // identity
            CHECK(ab <= metric(a, c) + metric(c, b) + 1e-12);  // triangle
        }
    }
    // zero iff equal: a tiny perturbation gives a strictly positive value
    const auto a = random_traj(rng, 6);
    auto b = a;
    b[3][0] += 1e-9;
    CHECK(ade(a, b) > 0.0);
    CHECK(fde(a, a) == 0.0);
}

TEST_CASE("best_of_n: degenerate cases and monotonicity in the sample set") {
    Rng rng(404);
    const auto gt = random_traj(rng, 6);
    const auto s1 = random_traj(rng, 6);
    CHECK(best_of_n({s1}, gt, Displacement::ade) == doctest::Approx(ade(s1, gt)));
    CHECK(best_of_n({s1, gt}, gt, Displacement::ade) == 0.0);
    CHECK_THROWS_AS(best_of_n({}, gt, Displacement::fde), InputError);

    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<Vec2>> samples;
        double prev = 1e300;
        for (int n = 1; n <= 8; ++n) {
            samples.push_back(random_traj(rng, 6));
            const double v = best_of_n(samples, gt, Displacement::fde);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("kde_nll matches the closed-form normal NLL within 0.05 nats at 2000 samples") {
    Rng rng(405);
    const int T = 48, n = 2000;  // long horizon averages the per-step estimator noise
    std::vector<std::vector<Vec2>> samples(n, std::vector<Vec2>(T));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < T; ++k) samples[static_cast<size_t>(i)][static_cast<size_t>(k)] = {rng.normal(), rng.normal()};
    const std::vector<Vec2> gt(T, Vec2{0.0, 0.0});  // at the mean
    const auto res = kde_nll(samples, gt);
    CHECK(std::fabs(res.nll - std::log(2 * M_PI)) < 0.05);
    CHECK_FALSE(res.floored);

    // the classic Scott factor misses this tolerance; the smoothing bias
    // log(1 + n^(-1/3)) alone exceeds it
    KdeOptions scott;
    scott.bandwidth = KdeOptions::Bandwidth::scott;
    const auto res_scott = kde_nll(samples, gt, scott);
    CHECK(res_scott.nll - std::log(2 * M_PI) > 0.05);
}

TEST_CASE("kde_nll: far-away truth hits the -20 nat floor") {
    Rng rng(406);
    const int n = 200;
    std::vector<std::vector<Vec2>> samples(n, std::vector<Vec2>(1));
    for (auto& s : samples) s[0] = {rng.normal(), rng.normal()};
    const std::vector<Vec2> gt{{1e3, 1e3}};
    const auto res = kde_nll(samples, gt);
    CHECK(res.nll == doctest::Approx(20.0));
    CHECK(res.floored);
}

TEST_CASE("kde_nll: degenerate zero-spread samples are floored and flagged") {
    std::vector<std::vector<Vec2>> samples(10, std::vector<Vec2>(2, Vec2{1.0, 2.0}));
    const std::vector<Vec2> gt{{1.0, 2.0}, {1.0, 2.0}};
    const auto res = kde_nll(samples, gt);
    CHECK(res.floored);
    CHECK(res.nll == doctest::Approx(20.0));
}

TEST_CASE("kde_nll: doubling the sample count moves the estimate by < 0.05 nats") {
    Rng rng(407);
    const int T = 48;
    auto draw = [&](int n) {
        std::vector<std::vector<Vec2>> s(static_cast<size_t>(n), std::vector<Vec2>(T));
        for (auto& traj : s)
            for (auto& p : traj) p = {0.5 + 0.8 * rng.normal(), -0.2 + 1.3 * rng.normal()};
        return s;
    };
    const std::vector<Vec2> gt(T, Vec2{0.6, 0.0});
    const double a = kde_nll(draw(2000), gt).nll;
    const double b = kde_nll(draw(4000), gt).nll;
    CHECK(std::fabs(a - b) < 0.05);
}

TEST_CASE("analytic_nll: unit covariance at the truth gives log(2 pi) per step") {
    dyn::GaussianTrajectory traj;
    std::vector<Vec2> gt;
    for (int k = 0; k < 5; ++k) {
        traj.push_back({{0.1 * k, -0.2 * k}, {1.0, 0.0, 1.0}});
        gt.push_back({0.1 * k, -0.2 * k});
    }
    CHECK(analytic_nll({{1.0, traj}}, gt) == doctest::Approx(std::log(2 * M_PI)).epsilon(1e-12));
}

TEST_CASE("analytic_nll: single mode matches direct Gaussian evaluation") {
    Rng rng(408);
    dyn::GaussianTrajectory traj;
    std::vector<Vec2> gt;
    double want = 0.0;
    const int T = 6;
    for (int k = 0; k < T; ++k) {
        const double sx = rng.uniform(0.3, 2.0), sy = rng.uniform(0.3, 2.0);
        const double rho = rng.uniform(-0.7, 0.7);
        dyn::GaussStep g{{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                         {sx * sx, rho * sx * sy, sy * sy}};
        traj.push_back(g);
        gt.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const double det = g.cov.det();
        const double dx = gt.back()[0] - g.mean[0], dy = gt.back()[1] - g.mean[1];
        const double q = (g.cov.yy * dx * dx - 2 * g.cov.xy * dx * dy + g.cov.xx * dy * dy) / det;
        want += std::log(2 * M_PI) + 0.5 * std::log(det) + 0.5 * q;
    }
    CHECK(analytic_nll({{1.0, traj}}, gt) == doctest::Approx(want / T).epsilon(1e-12));

    dyn::GaussianTrajectory bad = traj;
    bad[0].cov = {1.0, 2.0, 1.0};
    CHECK_THROWS_AS(analytic_nll({{1.0, bad}}, gt), InputError);
}

TEST_CASE("kde_nll converges to analytic_nll on samples from the analytic distribution") {
    Rng rng(409);
    const int T = 10, n = 10000;
    dyn::GaussianTrajectory traj;
    std::vector<Vec2> gt;
    for (int k = 0; k < T; ++k) {
        const double sx = 0.5 + 0.1 * k, sy = 0.8;
        traj.push_back({{0.5 * k, 0.2 * k}, {sx * sx, 0.2 * sx * sy, sy * sy}});
        gt.push_back({0.5 * k + 0.3, 0.2 * k - 0.4});
    }
    std::vector<std::vector<Vec2>> samples(n, std::vector<Vec2>(T));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < T; ++k)
            samples[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                dyn::sample_gauss2(traj[static_cast<size_t>(k)].mean, traj[static_cast<size_t>(k)].cov, rng);
    const double a = analytic_nll({{1.0, traj}}, gt);
    const double k = kde_nll(samples, gt).nll;
    CHECK(a <= k + 0.1);
    CHECK(std::fabs(a - k) < 0.1);
}

TEST_CASE("mixture NLL is at most the best mode's NLL plus log K (uniform weights)") {
    Rng rng(410);
    const int T = 5, K = 4;
    std::vector<WeightedGaussTraj> modes;
    std::vector<Vec2> gt;
    for (int k = 0; k < T; ++k) gt.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    for (int z = 0; z < K; ++z) {
        dyn::GaussianTrajectory traj;
        for (int k = 0; k < T; ++k)
            traj.push_back({{rng.uniform(-2, 2), rng.uniform(-2, 2)}, {0.8, 0.1, 0.6}});
        modes.push_back({1.0 / K, traj});
    }
    double best = 1e300;
    for (const auto& m : modes) best = std::min(best, analytic_nll({{1.0, m.traj}}, gt));
    CHECK(analytic_nll(modes, gt) <= best + std::log(static_cast<double>(K)) + 1e-12);
}

TEST_CASE("constant-velocity baseline: exactness and the turning-gap oracle") {
    // straight constant-speed track -> FDE 0
    std::vector<AgentState> hist;
    for (int k = 0; k < 4; ++k) {
        AgentState s;
        s.pos = {1.0 * k, 0.5 * k};
        s.vel = {2.0, 1.0};
        hist.push_back(s);
    }
    const auto pred = const_velocity_baseline(hist, 6, 0.5);
    std::vector<Vec2> gt;
    for (int k = 1; k <= 6; ++k) gt.push_back({3.0 + 1.0 * k * 0.5 * 2.0, 1.5 + 0.5 * k});
    CHECK(fde(pred, gt) < 1e-12);

    // stationary agent stays put
    std::vector<AgentState> still(3);
    for (auto& s : still) s.pos = {4.0, -2.0};
    const auto pred2 = const_velocity_baseline(still, 5, 0.4);
    for (const auto& p : pred2) CHECK(p == Vec2{4.0, -2.0});

    CHECK_THROWS_AS(const_velocity_baseline(std::vector<AgentState>(1), 3, 0.1), InputError);

    // constant turn rate: FDE equals the closed-form chord-tangent gap
    const double v = 2.0, omega = 0.6, dt = 0.25;
    const int T = 8;
    const double r = v / omega;
    std::vector<AgentState> circle_hist;
    for (int k = -3; k <= 0; ++k) {
        AgentState s;
        const double th = omega * dt * k;
        s.pos = {r * std::sin(th), r * (1.0 - std::cos(th))};
        s.vel = {v * std::cos(th), v * std::sin(th)};
        circle_hist.push_back(s);
    }
    const auto cv = const_velocity_baseline(circle_hist, T, dt);
    std::vector<Vec2> arc;
    for (int k = 1; k <= T; ++k) {
        const double th = omega * dt * k;
        arc.push_back({r * std::sin(th), r * (1.0 - std::cos(th))});
    }
    const double alpha = omega * dt * T;
    // independently derived: |(r sin a, r(1-cos a)) - (v T dt, 0)|
    const double want = std::hypot(r * std::sin(alpha) - v * T * dt, r * (1.0 - std::cos(alpha)));
    CHECK(fde(cv, arc) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mode_recovery: chance level on random predictors, invariant to relabeling") {
    Rng rng(411);
    const int n = 4000;
    std::vector<int> calib_z, test_z;
    std::vector<std::string> calib_l, test_l;
    for (int i = 0; i < n; ++i) {
        calib_z.push_back(static_cast<int>(rng.below(6)));
        test_z.push_back(static_cast<int>(rng.below(6)));
        calib_l.push_back(rng.below(2) == 0 ? "A" : "B");
        test_l.push_back(rng.below(2) == 0 ? "A" : "B");
    }
    const auto rec = mode_recovery(calib_z, calib_l, test_z, test_l);
    CHECK(rec.agreement > 0.45);
    CHECK(rec.agreement < 0.55);

    // permute latent indices: agreement unchanged
    auto permute = [](std::vector<int> zs) {
        for (auto& z : zs) z = (z + 3) % 6;
        return zs;
    };
    const auto rec2 = mode_recovery(permute(calib_z), calib_l, permute(test_z), test_l);
    CHECK(rec2.agreement == rec.agreement);

    CHECK_THROWS_AS(mode_recovery({}, {}, test_z, test_l), InputError);
    CHECK_THROWS_AS(mode_recovery({0}, {""}, test_z, test_l), InputError);
}

TEST_CASE("metric report: round-trip of values, flags and formats") {
    MetricReport rep;
    rep.set("ade", 0.123456);
    rep.set("fde", 0.5);
    rep.set("kde_nll", -1.25);
    rep.flags.push_back("kde floored on 1 scene");
    CHECK(rep.get("fde") == 0.5);
    CHECK_THROWS_AS(rep.get("nope"), InputError);
    const auto kv = rep.to_keyvalues("0123abcd");
    CHECK(kv.find("format = trajcast-report-v1") != std::string::npos);
    CHECK(kv.find("runconfig = 0123abcd") != std::string::npos);
    CHECK(kv.find("kde_nll = ") != std::string::npos);
    const auto table = rep.to_table();
    CHECK(table.find("ade") != std::string::npos);
    CHECK(table.find("!") != std::string::npos);
}
