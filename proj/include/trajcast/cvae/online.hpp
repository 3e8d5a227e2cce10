#pragma once

#include <span>
#include <vector>

#include "trajcast/cvae/model.hpp"

namespace trajcast::cvae {

// Stateful update-and-predict scheme for one (scene, focus agent) pair.
// Each observe() advances the recurrent encoder states by exactly one
// step; predict() reuses them, so only the decoder and heads run per
// query. Feeding a non-consecutive step throws TimestepGapError: the
// caller must rebuild the state from scratch.
class OnlinePredictor {
public:
    OnlinePredictor(const Model& model, int focus_id);

    void observe(std::span<const AgentState> states, int step);
    int steps_seen() const { return steps_; }

    // robot_future: world-frame states over the model horizon (ignored
    // when the model does not condition on a robot)
    Model::Prediction predict(std::span<const AgentState> robot_future, PredictMode mode,
                              int n_per_mode, Rng* rng) const;

    // condition vector values, for equivalence checks against the full
    // re-encode
    std::vector<double> condition_values(std::span<const AgentState> robot_future) const;

private:
    diff::Var build_xsum(diff::Tape& t, std::span<const AgentState> robot_future) const;

    const Model& model_;
    int focus_;
    int steps_ = 0;
    int last_step_ = 0;
    stg::SceneGraph graph_;
    stg::EdgeEncoders::State edge_state_;
    std::vector<double> hist_h_, hist_c_;
    AgentState last_focus_;
    bool has_prev_ = false;
    Vec2 prev_pos_{0, 0};
};

}  // namespace trajcast::cvae
