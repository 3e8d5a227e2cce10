#include "trajcast/synth/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "trajcast/core/rng.hpp"

namespace trajcast::synth {

namespace {

// quintic s-curve: 0 -> 1 with zero velocity and acceleration at both ends
double smooth01(double tau) {
    tau = std::clamp(tau, 0.0, 1.0);
    return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
}
double smooth01_rate(double tau) {
    if (tau <= 0.0 || tau >= 1.0) return 0.0;
    return tau * tau * (30.0 + tau * (-60.0 + 30.0 * tau));
}

AgentState make_state(int id, AgentType type, int t, Vec2 p, Vec2 v, bool with_heading) {
    AgentState s;
    s.agent_id = id;
    s.type = type;
    s.t = t;
    s.pos = p;
    s.vel = v;
    if (with_heading) s.heading = std::atan2(v[1], v[0]);
    return s;
}

}  // namespace

Scene gen_traffic_weave(const WeaveParams& p, uint64_t seed, int scene_id) {
    if (p.lane_y <= 0.0) throw InputError("traffic weave: lane_y must be positive");
    if (p.dt <= 0.0 || p.duration < p.decide_time + 2.0 * p.swap_duration)
        throw InputError("traffic weave: episode too short for the maneuver");
    Rng rng(seed);

    // latent coin, drawn before any noise so the decision stream is stable
    const double p_a_first = 1.0 / (1.0 + std::exp(-p.speed_bias_gain * (p.v0_a - p.v0_b)));
    const bool a_first = rng.uniform() < p_a_first;

    const int steps = static_cast<int>(std::lround(p.duration / p.dt));
    struct Car {
        double x, y, vx, vy, v_nominal, lane0, lane1, t_change;
        bool winner;
    };
    // winner changes lanes at decide_time, loser right after the winner
    // clears (second half of the episode)
    Car a{0.0, p.lane_y, p.v0_a, 0.0, p.v0_a, p.lane_y, -p.lane_y, 0.0, a_first};
    Car b{p.x_gap0, -p.lane_y, p.v0_b, 0.0, p.v0_b, -p.lane_y, p.lane_y, 0.0, !a_first};
    a.t_change = a.winner ? p.decide_time : p.decide_time + p.swap_duration;
    b.t_change = b.winner ? p.decide_time : p.decide_time + p.swap_duration;

    Scene scene;
    scene.scene_id = scene_id;
    scene.label = a_first ? "A_first" : "B_first";
    AgentTrack ta, tb;
    ta.agent_id = 0;
    ta.type = AgentType::robot;
    tb.agent_id = 1;
    tb.type = AgentType::vehicle;

    for (int k = 0; k <= steps; ++k) {
        const double t = k * p.dt;
        ta.states.push_back(make_state(0, AgentType::robot, k, {a.x, a.y}, {a.vx, a.vy}, true));
        tb.states.push_back(make_state(1, AgentType::vehicle, k, {b.x, b.y}, {b.vx, b.vy}, true));
        if (k == steps) break;
        for (Car* c : {&a, &b}) {
            // longitudinal: jockeying noise, then win/yield speed adjustment
            double ax = rng.normal(0.0, p.accel_noise);
            if (t >= p.decide_time && t < p.decide_time + 2.0)
                ax += c->winner ? p.accel : -p.accel;
            else if (t >= p.decide_time + 2.0)
                ax += 0.5 * (c->v_nominal - c->vx);  // relax toward nominal speed
            c->vx += ax * p.dt;
            c->vx = std::max(c->vx, 1.0);
            c->x += c->vx * p.dt;
            // lateral: track the scripted quintic profile; the recorded
            // velocity is the true derivative of the recorded position
            const double tau = (t + p.dt - c->t_change) / p.swap_duration;
            const double y_ref = c->lane0 + (c->lane1 - c->lane0) * smooth01(tau);
            const double vy_ref = (c->lane1 - c->lane0) * smooth01_rate(tau) / p.swap_duration;
            c->vy = vy_ref + rng.normal(0.0, p.lateral_noise) + 2.0 * (y_ref - c->y);
            c->y += c->vy * p.dt;
        }
    }
    scene.tracks = {std::move(ta), std::move(tb)};
    return scene;
}

Scene gen_social_forces(const SocialForcesParams& p, uint64_t seed, int scene_id) {
    const size_t n = p.starts.size();
    if (n < 1) throw InputError("social forces: need at least one agent");
    if (p.goals.size() != n) throw InputError("social forces: starts/goals size mismatch");
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (dist(p.starts[i], p.starts[j]) < 2.0 * p.radius)
                throw InputError("social forces: overlapping initial positions");
    Rng rng(seed);

    std::vector<Vec2> goal(n);
    std::string label;
    for (size_t i = 0; i < n; ++i) {
        goal[i] = p.goals[i];
        if (i < p.goal_choices.size() && !p.goal_choices[i].empty()) {
            const auto pick = rng.below(p.goal_choices[i].size());
            goal[i] = p.goal_choices[i][pick];
            if (!label.empty()) label += "+";
            label += std::to_string(pick);
        }
        if (p.goal_jitter > 0.0) {
            goal[i][0] += rng.uniform(-p.goal_jitter, p.goal_jitter);
            goal[i][1] += rng.uniform(-p.goal_jitter, p.goal_jitter);
        }
    }
    // per-pair passing side, identical for both members so head-on pairs
    // dodge to mutually consistent sides
    const uint64_t pair_salt = rng.next_u64();
    auto pair_side = [pair_salt](size_t i, size_t j) {
        const uint64_t key[3] = {std::min(i, j), std::max(i, j), pair_salt};
        return (fnv1a(key, sizeof(key)) & 1) != 0 ? 1.0 : -1.0;
    };

    std::vector<Vec2> pos = p.starts;
    std::vector<Vec2> vel(n, Vec2{0.0, 0.0});
    std::vector<size_t> next_wp(n, 0);  // progress along the optional route
    auto current_target = [&](size_t i) {
        if (i < p.routes.size() && next_wp[i] < p.routes[i].size()) {
            if (dist(pos[i], p.routes[i][next_wp[i]]) < p.waypoint_tol) ++next_wp[i];
            if (next_wp[i] < p.routes[i].size()) return p.routes[i][next_wp[i]];
        }
        return goal[i];
    };
    const int sub = std::max(1, static_cast<int>(std::lround(p.dt / p.sim_dt)));
    const double h = p.dt / sub;
    const int steps = static_cast<int>(std::lround(p.duration / p.dt));
    const double v_cap = 1.8 * p.v_desired;

    Scene scene;
    scene.scene_id = scene_id;
    scene.label = label;
    scene.tracks.resize(n);
    for (size_t i = 0; i < n; ++i) {
        scene.tracks[i].agent_id = static_cast<int>(i);
        scene.tracks[i].type = i == 0 ? AgentType::robot : AgentType::pedestrian;
    }

    for (int k = 0; k <= steps; ++k) {
        for (size_t i = 0; i < n; ++i)
            scene.tracks[i].states.push_back(
                make_state(static_cast<int>(i), scene.tracks[i].type, k, pos[i], vel[i], false));
        if (k == steps) break;
        for (int s = 0; s < sub; ++s) {
            std::vector<Vec2> force(n, Vec2{0.0, 0.0});
            for (size_t i = 0; i < n; ++i) {
                const Vec2 target = current_target(i);
                const Vec2 to_goal = target - pos[i];
                const double dgoal = norm(to_goal);
                // slow to a stop near the final goal only, not at waypoints
                const bool at_final = target == goal[i];
                const double vdes = p.v_desired * (at_final ? std::min(1.0, dgoal / 1.0) : 1.0);
                Vec2 vstar{0.0, 0.0};
                if (dgoal > 1e-9) vstar = (vdes / dgoal) * to_goal;
                force[i] = (1.0 / p.tau) * (vstar - vel[i]);
                for (size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const Vec2 away = pos[i] - pos[j];
                    const double d = norm(away);
                    if (d < 1e-9) continue;
                    const double mag = p.rep_a * std::exp((2.0 * p.radius - d) / p.rep_b);
                    const Vec2 dir = (1.0 / d) * away;
                    force[i] = force[i] + mag * dir;
                    // seeded side preference: push perpendicular to the
                    // separation so head-on pairs resolve deterministically
                    const Vec2 perp{-dir[1], dir[0]};
                    force[i] = force[i] + (pair_side(i, j) * p.side_bias * mag) * perp;
                }
            }
            for (size_t i = 0; i < n; ++i) {
                vel[i] = vel[i] + h * force[i];
                const double sp = norm(vel[i]);
                if (sp > v_cap) vel[i] = (v_cap / sp) * vel[i];
                pos[i] = pos[i] + h * vel[i];
            }
        }
    }
    return scene;
}

double idm_accel(const IdmParams& p, double v, double v_front, double gap) {
    const double dv = v - v_front;
    const double s_star =
        p.s_jam + std::max(0.0, v * p.headway + v * dv / (2.0 * std::sqrt(p.a_max * p.b_comf)));
    const double g = std::max(gap, 0.01);
    return p.a_max * (1.0 - std::pow(v / p.v_desired, p.delta) - (s_star / g) * (s_star / g));
}

double idm_equilibrium_gap(const IdmParams& p, double speed) {
    // set idm_accel = 0 with dv = 0: gap = s*(v, 0) / sqrt(1 - (v/v0)^delta)
    const double s_star = p.s_jam + speed * p.headway;
    return s_star / std::sqrt(1.0 - std::pow(speed / p.v_desired, p.delta));
}

Scene gen_idm_string(const IdmParams& p, uint64_t seed, int scene_id) {
    (void)seed;  // the string is fully deterministic; seed kept for interface parity
    if (p.n_vehicles < 2) throw InputError("idm: need at least two vehicles");
    const double gap0 = p.init_spacing < 0.0 ? idm_equilibrium_gap(p, p.init_speed) : p.init_spacing;
    if (gap0 < p.s_jam) throw InputError("idm: initial spacing below jam distance");

    const size_t n = static_cast<size_t>(p.n_vehicles);
    std::vector<double> x(n), v(n, p.init_speed);
    for (size_t i = 0; i < n; ++i) x[i] = -static_cast<double>(i) * (gap0 + p.vehicle_len);

    const int sub = std::max(1, static_cast<int>(std::lround(p.dt / p.sim_dt)));
    const double h = p.dt / sub;
    const int steps = static_cast<int>(std::lround(p.duration / p.dt));

    Scene scene;
    scene.scene_id = scene_id;
    scene.tracks.resize(n);
    for (size_t i = 0; i < n; ++i) {
        scene.tracks[i].agent_id = static_cast<int>(i);
        scene.tracks[i].type = i == 0 ? AgentType::robot : AgentType::vehicle;
    }

    for (int k = 0; k <= steps; ++k) {
        for (size_t i = 0; i < n; ++i)
            scene.tracks[i].states.push_back(make_state(static_cast<int>(i), scene.tracks[i].type, k,
                                                        {x[i], 0.0}, {v[i], 0.0}, true));
        if (k == steps) break;
        for (int s = 0; s < sub; ++s) {
            const double t = k * p.dt + s * h;
            double a0 = 0.0;  // leader profile
            if (p.leader == IdmParams::Leader::brake && t >= p.brake_time &&
                t < p.brake_time + p.brake_duration)
                a0 = -p.brake_decel;
            v[0] = std::max(0.0, v[0] + a0 * h);
            for (size_t i = 1; i < n; ++i) {
                const double gap = x[i - 1] - x[i] - p.vehicle_len;
                const double a = idm_accel(p, v[i], v[i - 1], gap);
                v[i] = std::max(0.0, v[i] + a * h);
            }
            for (size_t i = 0; i < n; ++i) x[i] += v[i] * h;
        }
    }
    return scene;
}

std::vector<Triple> split_episode(const Scene& scene, int focus_id, int history, int horizon,
                                  int stride) {
    if (history < 1 || horizon < 1 || stride < 1) throw InputError("split_episode: bad window");
    const AgentTrack* focus = scene.find_track(focus_id);
    if (focus == nullptr) throw InputError("split_episode: unknown focus agent");
    const AgentTrack* robot = scene.robot_track();
    if (robot == nullptr) throw InputError("split_episode: scene has no robot agent");
    const int len = static_cast<int>(focus->states.size());
    if (len < history + horizon) throw InputError("split_episode: episode shorter than window");

    std::vector<Triple> out;
    for (int t0 = focus->first_t; t0 + history + horizon <= focus->first_t + len; t0 += stride) {
        Triple tr;
        tr.t0 = t0;
        tr.focus_id = focus_id;
        for (int k = 0; k < history; ++k) tr.focus_history.push_back(focus->at(t0 + k));
        for (int k = 0; k < horizon; ++k) {
            const int t = t0 + history + k;
            if (!robot->present_at(t)) throw InputError("split_episode: robot future not covered");
            tr.robot_future.push_back(robot->at(t));
            tr.focus_future.push_back(focus->at(t));
        }
        out.push_back(std::move(tr));
    }
    return out;
}

}  // namespace trajcast::synth
