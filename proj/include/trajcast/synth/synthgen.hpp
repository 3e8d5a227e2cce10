#pragma once

#include <cstdint>
#include <vector>

#include "trajcast/core/types.hpp"

namespace trajcast::synth {

// Two cars initially side-by-side swap lanes; a latent coin biased by
// the initial speed difference decides who merges ahead. Agent 0 is the
// robot car, agent 1 the human car. Scene label: "A_first" (robot ahead)
// or "B_first".
struct WeaveParams {
    double dt = 0.1;
    double duration = 8.0;
    double lane_y = 1.75;          // lanes at +-lane_y
    double v0_a = 10.0;
    double v0_b = 10.0;
    double x_gap0 = 0.0;           // initial x of car B relative to car A
    double speed_bias_gain = 2.0;  // p(A first) = sigmoid(gain * (v0_a - v0_b))
    double accel = 1.5;            // winner speed-up / loser slow-down (m/s^2)
    double decide_time = 3.0;      // negotiation phase ends here
    double swap_duration = 2.5;    // lane-change duration per car
    double accel_noise = 0.3;      // longitudinal actuation noise (m/s^2)
    double lateral_noise = 0.05;   // lateral actuation noise (m/s^2)
};
Scene gen_traffic_weave(const WeaveParams& p, uint64_t seed, int scene_id = 0);

// Goal-directed pedestrians with exponential pairwise repulsion.
// Agent 0 is the robot. If goal_choices[i] is non-empty, agent i picks
// one goal by seed and the scene label records the choices.
struct SocialForcesParams {
    double dt = 0.4;
    double sim_dt = 0.05;
    double duration = 24.0;
    double v_desired = 1.4;
    double tau = 0.5;     // relaxation (s)
    double rep_a = 2.0;   // repulsion strength (m/s^2)
    double rep_b = 0.3;   // repulsion length scale (m)
    double radius = 0.35; // per-agent radius (m)
    double goal_tol = 0.5;
    double side_bias = 0.15;  // seeded left/right preference breaking symmetry
    double waypoint_tol = 0.6;
    double goal_jitter = 0.0;  // seeded uniform jitter applied to chosen goals
    std::vector<Vec2> starts;
    std::vector<Vec2> goals;                       // default goal per agent
    std::vector<std::vector<Vec2>> goal_choices;   // optional per-agent discrete goal sets
    std::vector<std::vector<Vec2>> routes;         // optional waypoints visited before the goal
};
Scene gen_social_forces(const SocialForcesParams& p, uint64_t seed, int scene_id = 0);

// One-lane car-following string. Agent 0 is the (robot) leader on a
// scripted speed profile; followers integrate the IDM law.
struct IdmParams {
    double dt = 0.1;
    double sim_dt = 0.02;
    double duration = 30.0;
    int n_vehicles = 4;
    double v_desired = 15.0;
    double headway = 1.5;
    double a_max = 1.0;
    double b_comf = 1.5;
    double s_jam = 2.0;
    double delta = 4.0;
    double vehicle_len = 4.5;
    double init_speed = 12.0;
    double init_spacing = -1.0;  // gap (bumper to bumper); < 0 -> equilibrium
    enum class Leader { constant, brake } leader = Leader::constant;
    double brake_time = 10.0;
    double brake_decel = 2.0;
    double brake_duration = 3.0;
};
Scene gen_idm_string(const IdmParams& p, uint64_t seed, int scene_id = 0);

// equilibrium bumper-to-bumper gap for a constant-speed string
double idm_equilibrium_gap(const IdmParams& p, double speed);

// IDM acceleration law (exposed so tests can root-find the equilibrium
// independently of idm_equilibrium_gap)
double idm_accel(const IdmParams& p, double v, double v_front, double gap);

// Sliding-window (history, robot future, focus future) extraction.
struct Triple {
    int t0 = 0;  // timestep of the first history state
    int focus_id = 0;
    std::vector<AgentState> focus_history;  // length = history
    std::vector<AgentState> robot_future;   // length = horizon
    std::vector<AgentState> focus_future;   // length = horizon
};
std::vector<Triple> split_episode(const Scene& scene, int focus_id, int history, int horizon,
                                  int stride = 1);

}  // namespace trajcast::synth
