#include "trajcast/cvae/online.hpp"

#include <cmath>

namespace trajcast::cvae {

using diff::Shape;
using diff::Tape;
using diff::Var;

OnlinePredictor::OnlinePredictor(const Model& model, int focus_id)
    : model_(model), focus_(focus_id) {
    const auto& cfg = model_.config();
    hist_h_.assign(static_cast<size_t>(cfg.hidden_history), 0.0);
    hist_c_.assign(static_cast<size_t>(cfg.hidden_history), 0.0);
}

void OnlinePredictor::observe(std::span<const AgentState> states, int step) {
    if (steps_ > 0 && step != last_step_ + 1)
        throw TimestepGapError("online update expected step " + std::to_string(last_step_ + 1) +
                               ", got " + std::to_string(step) + "; re-encode from scratch");
    const auto& cfg = model_.config();
    const stg::Thresholds d = cfg.thresholds();
    graph_ = steps_ == 0 ? stg::build_graph(states, step, d, cfg.ramp_window)
                         : stg::update_graph(graph_, states, d);

    const AgentState* focus = graph_.node(focus_);
    if (focus == nullptr) throw InputError("online update: focus agent missing");

    Vec2 dp{0, 0};
    if (has_prev_) dp = focus->pos - last_focus_.pos;
    const std::array<double, 4> f{dp[0] * cfg.pos_scale, dp[1] * cfg.pos_scale,
                                  focus->vel[0] * cfg.vel_scale, focus->vel[1] * cfg.vel_scale};
    model_.history_cell().step_values(f, hist_h_, hist_c_);
    model_.edge_encoders().advance(edge_state_, graph_, focus_, model_.feature_scales());

    prev_pos_ = has_prev_ ? last_focus_.pos : focus->pos;
    has_prev_ = true;
    last_focus_ = *focus;
    last_step_ = step;
    ++steps_;
}

Var OnlinePredictor::build_xsum(Tape& t, std::span<const AgentState> robot_future) const {
    if (steps_ == 0) throw InputError("online predict before any observation");
    const auto& cfg = model_.config();
    if (cfg.use_map)
        throw ConfigError("the online predictor does not support map-conditioned models");

    Var hist_h = t.constant(Shape{1, cfg.hidden_history}, hist_h_);
    const auto agg_values = model_.edge_encoders().aggregate(edge_state_, graph_, focus_);
    Var agg = t.constant(Shape{1, static_cast<int>(agg_values.size())}, agg_values);

    Var robot_h;
    if (cfg.condition_on_robot) {
        if (static_cast<int>(robot_future.size()) != cfg.horizon)
            throw InputError("online predict: robot future must cover the horizon");
        auto rs = model_.robot_cell().zero_state(t, 1);
        for (const auto& s : robot_future) {
            const std::array<double, 4> f{(s.pos[0] - last_focus_.pos[0]) * cfg.pos_scale,
                                          (s.pos[1] - last_focus_.pos[1]) * cfg.pos_scale,
                                          s.vel[0] * cfg.vel_scale, s.vel[1] * cfg.vel_scale};
            rs = model_.robot_cell().step(t, t.constant(Shape{1, 4}, f), rs);
        }
        robot_h = rs.h;
    } else {
        robot_h = t.constant(Shape{1, cfg.hidden_future}, 0.0);
    }
    const std::array<Var, 3> blocks{hist_h, agg, robot_h};
    return model_.project_condition(t, blocks);
}

std::vector<double> OnlinePredictor::condition_values(
    std::span<const AgentState> robot_future) const {
    Tape t;
    Var x = build_xsum(t, robot_future);
    return {t.val(x).begin(), t.val(x).end()};
}

Model::Prediction OnlinePredictor::predict(std::span<const AgentState> robot_future,
                                           PredictMode mode, int n_per_mode, Rng* rng) const {
    Tape t(1 << 16);
    Var xsum = build_xsum(t, robot_future);
    Model::RolloutContext ctx;
    ctx.last_pos = last_focus_.pos;
    ctx.heading0 = last_focus_.has_heading()
                       ? last_focus_.heading
                       : std::atan2(last_focus_.vel[1], last_focus_.vel[0]);
    ctx.speed0 = last_focus_.speed();
    // anchor from the last observed step displacement, matching the
    // offline example builder
    const Vec2 last_dp = steps_ > 1 ? last_focus_.pos - prev_pos_ : Vec2{0, 0};
    switch (model_.config().output) {
        case OutputSpace::displacement: ctx.anchor = last_dp; break;
        case OutputSpace::si_velocity: ctx.anchor = (1.0 / model_.config().dt) * last_dp; break;
        case OutputSpace::unicycle_control: ctx.anchor = {0, 0}; break;
    }
    return model_.predict_from_xsum(t, xsum, ctx, mode, n_per_mode, rng);
}

}  // namespace trajcast::cvae
