#pragma once

#include <span>
#include <string>
#include <vector>

#include "trajcast/core/types.hpp"

namespace trajcast::stg {

// Interaction range by pair type: pedestrian pairs interact at short
// range, any pair involving a vehicle (the robot is a vehicle-scale
// platform here) at road scale.
struct Thresholds {
    double ped_ped = 3.0;
    double vehicle = 30.0;

    double between(AgentType a, AgentType b) const {
        return (a == AgentType::pedestrian && b == AgentType::pedestrian) ? ped_ped : vehicle;
    }
};

// Edge registry entry. `active` mirrors strict E_t membership (distance
// condition holds at the graph's timestep); entries with active == false
// linger while their modulation ramps down, which is how removed edges
// fade out of the encoders instead of vanishing abruptly.
struct Edge {
    int u = 0, v = 0;  // u < v
    bool active = false;
    double modulation = 0.0;  // in [0, 1]
    int age = 0;              // updates since the entry was created
    int missing = 0;          // consecutive updates with an absent endpoint
};

struct SceneGraph {
    int t = 0;
    int ramp_window = 4;
    std::vector<AgentState> nodes;  // sorted by agent id
    std::vector<Edge> edges;        // sorted by (u, v); includes fading entries

    const AgentState* node(int agent_id) const {
        for (const auto& n : nodes)
            if (n.agent_id == agent_id) return &n;
        return nullptr;
    }
    const Edge* edge(int a, int b) const {
        const int u = std::min(a, b), v = std::max(a, b);
        for (const auto& e : edges)
            if (e.u == u && e.v == v) return &e;
        return nullptr;
    }
    // strict E_t (distance condition holds now)
    std::vector<std::pair<int, int>> active_edges() const {
        std::vector<std::pair<int, int>> out;
        for (const auto& e : edges)
            if (e.active) out.emplace_back(e.u, e.v);
        return out;
    }
    std::string dump() const;  // human-readable, debugging only
};

// Fresh graph at time t. Edges enter with modulation 1/ramp_window (so a
// window of 1 degenerates to the 0/1 indicator). Throws InputError on
// duplicate agent ids or non-positive thresholds.
SceneGraph build_graph(std::span<const AgentState> states, int t, const Thresholds& d,
                       int ramp_window = 4);

// Advance the registry by one step. Modulation moves by 1/ramp_window
// toward 1 while the condition holds and toward 0 while it fails;
// condition-failed entries are dropped when they reach 0. An entry whose
// endpoint is absent survives exactly one update (so a one-step gap
// resumes its age); two consecutive absent updates reset it.
SceneGraph update_graph(const SceneGraph& prev, std::span<const AgentState> states,
                        const Thresholds& d);

}  // namespace trajcast::stg
