#pragma once

#include <array>
#include <optional>
#include <vector>

#include "trajcast/cvae/config.hpp"
#include "trajcast/core/types.hpp"
#include "trajcast/stg/graph.hpp"

namespace trajcast::cvae {

// Everything the model needs to know about the scene at prediction time,
// fully materialized in world units plus pre-scaled encoder features.
struct Example {
    int focus_id = 0;

    std::vector<std::array<double, 4>> hist_feats;   // per history step
    std::vector<stg::SceneGraph> graphs;             // one per history step
    std::vector<std::array<double, 4>> robot_feats;  // per future step
    bool has_robot_future = false;
    std::vector<double> map;  // occupancy crop, row-major map_size^2; empty if unused

    // decoder targets in the configured output space (world units) and
    // the matching ground-truth future positions
    std::vector<Vec2> targets;
    std::vector<Vec2> gt_future;

    Vec2 last_pos{0, 0};  // focus position at the last observed step
    Vec2 anchor{0, 0};    // decoder means are offsets from this
    double heading0 = 0.0;
    double speed0 = 0.0;
};

struct WindowRef {
    int scene_index = 0;
    int focus_id = 0;
    int t0 = 0;  // dataset timestep of the first history step
};

// dataset dt must divide the model dt to machine precision
int model_stride(double dataset_dt, const ModelConfig& cfg);

// All valid windows of a dataset under the config's window geometry.
// Focus agents are the non-robot agents; windows advance by one model
// step. Windows require the focus covered over history + horizon and,
// when conditioning on the robot, the robot covered over the future.
std::vector<WindowRef> enumerate_windows(const Dataset& ds, const ModelConfig& cfg);

// Materialize one window. history_len overrides cfg.history when >= 1
// (the online scheme encodes full streams, not fixed windows).
// robot_future_override, when given, replaces the robot track's future
// states (candidate action sequences for conditional prediction).
Example make_example(const Dataset& ds, const Scene& scene, const ModelConfig& cfg, int focus_id,
                     int t0, int history_len = -1,
                     const std::vector<AgentState>* robot_future_override = nullptr,
                     bool require_future = true);

// Binary occupancy crop of a two-lane corridor (free inside, occupied
// outside), centered on `center`, rotated so +x is `heading`. The
// desk-scale stand-in for map rasterization.
std::vector<double> corridor_occupancy(const ModelConfig& cfg, Vec2 center, double heading,
                                       double corridor_halfwidth);

}  // namespace trajcast::cvae
