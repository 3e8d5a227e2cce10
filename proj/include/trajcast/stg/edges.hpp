#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "trajcast/diff/layers.hpp"
#include "trajcast/stg/graph.hpp"

namespace trajcast::stg {

struct FeatureScales {
    double pos = 0.1;
    double vel = 0.1;
};

// Edge features from the focus agent's perspective at one timestep:
// scaled relative position and relative velocity of the neighbor.
inline std::array<double, 4> edge_features(const AgentState& focus, const AgentState& nb,
                                           const FeatureScales& fs) {
    return {(nb.pos[0] - focus.pos[0]) * fs.pos, (nb.pos[1] - focus.pos[1]) * fs.pos,
            (nb.vel[0] - focus.vel[0]) * fs.vel, (nb.vel[1] - focus.vel[1]) * fs.vel};
}

// One recurrent encoder per neighbor semantic-type class. Each incident
// edge runs its class encoder over the steps where both endpoints are
// observed; the final hidden states are scaled by the edge's current
// modulation, summed within the class and concatenated across classes,
// giving a fixed-size vector regardless of neighbor count.
class EdgeEncoders {
public:
    EdgeEncoders() = default;
    EdgeEncoders(diff::ParamStore& ps, const std::string& name, int hidden);

    int hidden_size() const { return hidden_; }
    int aggregate_size() const { return kAgentTypeCount * hidden_; }

    // tape mode (training / full re-encode): runs over a graph history;
    // the focus agent must be a node of every graph.
    diff::Var encode(diff::Tape& t, std::span<const SceneGraph> history, int focus_id,
                     const FeatureScales& fs) const;

    // value mode (online): per-neighbor LSTM states advanced one graph at
    // a time. advance() must see every graph in sequence.
    struct State {
        struct Hc {
            std::vector<double> h, c;
            AgentType type = AgentType::pedestrian;
        };
        std::map<int, Hc> by_neighbor;
    };
    void advance(State& st, const SceneGraph& g, int focus_id, const FeatureScales& fs) const;
    std::vector<double> aggregate(const State& st, const SceneGraph& g, int focus_id) const;

private:
    const diff::LstmCell& cell_for(AgentType t) const { return cells_[static_cast<size_t>(t)]; }

    int hidden_ = 0;
    std::array<diff::LstmCell, kAgentTypeCount> cells_;
};

}  // namespace trajcast::stg
