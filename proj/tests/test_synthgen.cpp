#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "trajcast/synth/synthgen.hpp"

using namespace trajcast;
using namespace trajcast::synth;

namespace {

bool scenes_equal(const Scene& a, const Scene& b) {
    if (a.label != b.label || a.tracks.size() != b.tracks.size()) return false;
    for (size_t i = 0; i < a.tracks.size(); ++i) {
        const auto& ta = a.tracks[i];
        const auto& tb = b.tracks[i];
        if (ta.states.size() != tb.states.size()) return false;
        for (size_t k = 0; k < ta.states.size(); ++k) {
            if (ta.states[k].pos != tb.states[k].pos) return false;
            if (ta.states[k].vel != tb.states[k].vel) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("traffic weave: identical seeds give bitwise-identical episodes") {
    const WeaveParams p;
    CHECK(scenes_equal(gen_traffic_weave(p, 42), gen_traffic_weave(p, 42)));
    CHECK_FALSE(scenes_equal(gen_traffic_weave(p, 42), gen_traffic_weave(p, 43)));
}

TEST_CASE("traffic weave: zero noise leaves exactly two distinct trajectories") {
    WeaveParams p;
    p.accel_noise = 0.0;
    p.lateral_noise = 0.0;
    std::set<std::string> labels;
    Scene rep_a, rep_b;
    for (uint64_t seed = 0; seed < 64; ++seed) {
        const Scene s = gen_traffic_weave(p, seed);
        labels.insert(s.label);
        if (s.label == "A_first") {
            if (rep_a.tracks.empty())
                rep_a = s;
            else
                CHECK(scenes_equal(rep_a, s));
        } else {
            if (rep_b.tracks.empty())
                rep_b = s;
            else
                CHECK(scenes_equal(rep_b, s));
        }
    }
    CHECK(labels.size() == 2);
    CHECK_FALSE(scenes_equal(rep_a, rep_b));
}

TEST_CASE("traffic weave: symmetric initial conditions are mode-balanced over 10^4 seeds") {
    WeaveParams p;
    p.duration = 8.0;  // full episodes; the coin is drawn first either way
    int a_first = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed)
        if (gen_traffic_weave(p, static_cast<uint64_t>(seed)).label == "A_first") ++a_first;
    const double freq = static_cast<double>(a_first) / n;
    CHECK(freq > 0.49);
    CHECK(freq < 0.51);
}

TEST_CASE("traffic weave: every episode ends with lane assignments swapped") {
    const WeaveParams p;
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        const Scene s = gen_traffic_weave(p, seed);
        const auto& a0 = s.tracks[0].states.front();
        const auto& a1 = s.tracks[0].states.back();
        const auto& b0 = s.tracks[1].states.front();
        const auto& b1 = s.tracks[1].states.back();
        CHECK(a1.pos[1] * a0.pos[1] < 0.0);  // crossed the centerline
        CHECK(b1.pos[1] * b0.pos[1] < 0.0);
        CHECK(std::fabs(a1.pos[1] - b0.pos[1]) < 0.5);  // settled into the other lane
        CHECK(std::fabs(b1.pos[1] - a0.pos[1]) < 0.5);
        // the winner ends ahead
        if (s.label == "A_first")
            CHECK(a1.pos[0] > b1.pos[0]);
        else
            CHECK(b1.pos[0] > a1.pos[0]);
        // no NaNs, kinematic sanity
        for (const auto& tr : s.tracks)
            for (const auto& st : tr.states) {
                CHECK(std::isfinite(st.pos[0]));
                CHECK(std::isfinite(st.vel[0]));
                CHECK(st.speed() < 30.0);
            }
    }
}

TEST_CASE("traffic weave: speed advantage biases the coin") {
    WeaveParams p;
    p.v0_a = 11.5;
    p.v0_b = 10.0;  // sigmoid(2*1.5) ~ 0.95
    int a_first = 0;
    for (int seed = 0; seed < 2000; ++seed)
        if (gen_traffic_weave(p, static_cast<uint64_t>(seed)).label == "A_first") ++a_first;
    CHECK(static_cast<double>(a_first) / 2000 > 0.9);
}

TEST_CASE("social forces: single agent reaches its goal on a straight line") {
    SocialForcesParams p;
    p.starts = {{0.0, 0.0}};
    p.goals = {{8.0, 0.0}};
    const Scene s = gen_social_forces(p, 7);
    const auto& last = s.tracks[0].states.back();
    CHECK(dist(last.pos, Vec2{8.0, 0.0}) < 0.5);
    // straight-line approach: y stays ~0 throughout
    for (const auto& st : s.tracks[0].states) CHECK(std::fabs(st.pos[1]) < 1e-9);
}

TEST_CASE("social forces: two head-on agents keep a minimum separation") {
    SocialForcesParams p;
    p.starts = {{0.0, 0.0}, {8.0, 0.0}};
    p.goals = {{8.0, 0.0}, {0.0, 0.0}};
    for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const Scene s = gen_social_forces(p, seed);
        double dmin = 1e9;
        for (size_t k = 0; k < s.tracks[0].states.size(); ++k)
            dmin = std::min(dmin, dist(s.tracks[0].states[k].pos, s.tracks[1].states[k].pos));
        CHECK(dmin > 0.2);
        // both still make progress to their goals
        CHECK(dist(s.tracks[0].states.back().pos, p.goals[0]) < 1.0);
        CHECK(dist(s.tracks[1].states.back().pos, p.goals[1]) < 1.0);
    }
}

TEST_CASE("social forces: determinism and input validation") {
    SocialForcesParams p;
    p.starts = {{0, 0}, {4, 0.3}};
    p.goals = {{6, 0}, {-2, 0}};
    CHECK(scenes_equal(gen_social_forces(p, 11), gen_social_forces(p, 11)));

    SocialForcesParams overlap = p;
    overlap.starts = {{0, 0}, {0.1, 0}};
    CHECK_THROWS_AS(gen_social_forces(overlap, 1), InputError);
}

TEST_CASE("social forces: seeded goal choices are recorded in the label") {
    SocialForcesParams p;
    p.starts = {{0, 0}, {1.5, 0}};
    p.goals = {{10, 0}, {10, 0}};
    p.goal_choices = {{}, {{10, 3}, {10, 1}, {10, -1}, {10, -3}}};
    std::set<std::string> labels;
    for (uint64_t seed = 0; seed < 200; ++seed) labels.insert(gen_social_forces(p, seed).label);
    CHECK(labels == std::set<std::string>{"0", "1", "2", "3"});
}

TEST_CASE("idm: equilibrium initial condition holds speeds to 1e-3") {
    IdmParams p;
    // oracle: bisection root of the following law at dv = 0, independent
    // of idm_equilibrium_gap
    double lo = p.s_jam + 1e-6, hi = 500.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (idm_accel(p, p.init_speed, p.init_speed, mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    const double gap_root = 0.5 * (lo + hi);
    CHECK(idm_equilibrium_gap(p, p.init_speed) == doctest::Approx(gap_root).epsilon(1e-6));

    const Scene s = gen_idm_string(p, 0);
    for (const auto& tr : s.tracks)
        for (const auto& st : tr.states)
            CHECK(std::fabs(st.vel[0] - p.init_speed) < 1e-3);
}

TEST_CASE("idm: hard-braking leader never causes a collision") {
    IdmParams p;
    p.leader = IdmParams::Leader::brake;
    p.brake_decel = 3.0;
    p.brake_duration = 4.0;
    p.n_vehicles = 5;
    const Scene s = gen_idm_string(p, 0);
    bool slowed = false;
    for (size_t k = 0; k < s.tracks[0].states.size(); ++k) {
        for (int i = 1; i < p.n_vehicles; ++i) {
            const double gap = s.tracks[static_cast<size_t>(i - 1)].states[k].pos[0] -
                               s.tracks[static_cast<size_t>(i)].states[k].pos[0] - p.vehicle_len;
            CHECK(gap > 0.0);
        }
        if (s.tracks[1].states[k].vel[0] < p.init_speed - 1.0) slowed = true;
    }
    CHECK(slowed);  // followers actually reacted
}

TEST_CASE("idm: first follower identical between n = 2 and n = 5 runs") {
    IdmParams p2;
    p2.n_vehicles = 2;
    IdmParams p5 = p2;
    p5.n_vehicles = 5;
    const Scene s2 = gen_idm_string(p2, 0);
    const Scene s5 = gen_idm_string(p5, 0);
    for (size_t k = 0; k < s2.tracks[1].states.size(); ++k) {
        CHECK(s2.tracks[1].states[k].pos == s5.tracks[1].states[k].pos);
        CHECK(s2.tracks[1].states[k].vel == s5.tracks[1].states[k].vel);
    }
}

TEST_CASE("idm: spacing below jam distance is rejected") {
    IdmParams p;
    p.init_spacing = 1.0;  // below s_jam = 2
    CHECK_THROWS_AS(gen_idm_string(p, 0), InputError);
}

TEST_CASE("split_episode: window counts and partition identity") {
    WeaveParams wp;
    const Scene s = gen_traffic_weave(wp, 5);
    const int len = static_cast<int>(s.tracks[1].states.size());

    // length == history + horizon -> exactly one triple
    auto one = split_episode(s, 1, len - 8, 8);
    CHECK(one.size() == 1);

    // length == history + horizon + 3 with stride 1 -> 4 triples
    auto four = split_episode(s, 1, len - 8 - 3, 8);
    CHECK(four.size() == 4);

    // reconstruction: history ++ future equals the original slice
    const auto& tr = four[2];
    int t = tr.t0;
    for (const auto& st : tr.focus_history) {
        CHECK(st.pos == s.tracks[1].at(t).pos);
        ++t;
    }
    for (const auto& st : tr.focus_future) {
        CHECK(st.pos == s.tracks[1].at(t).pos);
        ++t;
    }
    CHECK(t == tr.t0 + static_cast<int>(tr.focus_history.size() + tr.focus_future.size()));

    // window overrun
    CHECK_THROWS_AS(split_episode(s, 1, len, 8), InputError);
}
