#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "trajcast/core/types.hpp"
#include "trajcast/diff/optimizer.hpp"
#include "trajcast/diff/tape.hpp"

using namespace trajcast;
using namespace trajcast::diff;

TEST_CASE("one plain descent step: p = 1, g = 2, lr = 0.1 -> p = 0.8") {
    ParamStore ps;
    Parameter& p = ps.add("p", 1, 1, 1);
    p.value[0] = 1.0;
    p.grad[0] = 2.0;
    Sgd opt(0.1);
    opt.step(ps);
    CHECK(p.value[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(p.grad[0] == 0.0);  // gradients cleared
}

TEST_CASE("zero gradient leaves parameters unchanged") {
    ParamStore ps;
    Parameter& p = ps.add("p", 2, 3, 3);
    for (size_t i = 0; i < p.value.size(); ++i) p.value[i] = 0.5 * static_cast<double>(i);
    const auto before = p.value;
    Sgd sgd(0.1);
    sgd.step(ps);
    CHECK(p.value == before);
    Adam adam(0.1);
    adam.step(ps);
    CHECK(p.value == before);  // m = v = 0 keeps the update at exactly zero
}

TEST_CASE("quadratic bowl converges: f(p) = (p-3)^2, 200 steps at lr 0.1") {
    for (const bool use_adam : {false, true}) {
        ParamStore ps;
        Parameter& p = ps.add("p", 1, 1, 1);
        p.value[0] = 1.0;
        Sgd sgd(0.1);
        Adam adam(0.1);
        Optimizer& opt = use_adam ? static_cast<Optimizer&>(adam) : sgd;
        for (int it = 0; it < 200; ++it) {
            Tape t;
            Var x = t.param(p);
            Var d = t.add_const(x, -3.0);
            t.backward(t.mul(d, d));
            opt.step(ps);
        }
        CHECK(std::fabs(p.value[0] - 3.0) < 1e-3);
    }
}

TEST_CASE("NaN gradient aborts with a diagnostic naming the parameter") {
    ParamStore ps;
    ps.add("fine", 1, 2, 2);
    Parameter& bad = ps.add("ill.w", 1, 2, 2);
    bad.grad[1] = std::nan("");
    Sgd opt(0.1);
    try {
        opt.step(ps);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("ill.w") != std::string::npos);
    }
}

TEST_CASE("global-norm clipping rescales large gradients before the update") {
    ParamStore ps;
    Parameter& p = ps.add("p", 1, 1, 1);
    p.value[0] = 0.0;
    p.grad[0] = 100.0;  // norm 100 > clip 10 -> effective gradient 10
    Sgd opt(1.0, 10.0);
    opt.step(ps);
    CHECK(p.value[0] == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("adam moments round-trip through state()") {
    ParamStore ps;
    Parameter& p = ps.add("p", 1, 2, 2);
    p.value = {1.0, -1.0};
    Adam a(0.05);
    p.grad = {0.3, -0.2};
    a.step(ps);
    const auto st = a.state();
    CHECK(st.count("adam.m.p") == 1);
    CHECK(st.count("adam.v.p") == 1);

    Adam b(0.05);
    b.load_state(st, a.step_count());
    // same gradient sequence from here on must produce identical updates
    ParamStore ps2;
    Parameter& q = ps2.add("p", 1, 2, 2);
    q.value = p.value;
    q.grad = {0.1, 0.1};
    b.step(ps2);
    p.grad = {0.1, 0.1};
    a.step(ps);
    CHECK(p.value == q.value);
}
