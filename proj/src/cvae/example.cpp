#include "trajcast/cvae/example.hpp"

#include <cmath>

namespace trajcast::cvae {

int model_stride(double dataset_dt, const ModelConfig& cfg) {
    if (dataset_dt <= 0.0) throw InputError("dataset dt must be positive");
    const double ratio = cfg.dt / dataset_dt;
    const int stride = static_cast<int>(std::lround(ratio));
    if (stride < 1 || std::fabs(ratio - stride) > 1e-9 * ratio)
        throw ConfigError("model dt " + std::to_string(cfg.dt) +
                          " is not an integer multiple of dataset dt " + std::to_string(dataset_dt));
    return stride;
}

namespace {

bool covered(const AgentTrack& tr, int t_first, int t_last) {
    return tr.present_at(t_first) && tr.present_at(t_last);
}

std::vector<AgentState> states_at(const Scene& scene, int t) {
    std::vector<AgentState> out;
    for (const auto& tr : scene.tracks)
        if (tr.present_at(t)) out.push_back(tr.at(t));
    return out;
}

}  // namespace

std::vector<WindowRef> enumerate_windows(const Dataset& ds, const ModelConfig& cfg) {
    std::vector<WindowRef> out;
    for (size_t si = 0; si < ds.scenes.size(); ++si) {
        const Scene& scene = ds.scenes[si];
        const int stride = model_stride(ds.dt, cfg);
        const int span = stride * (cfg.history + cfg.horizon - 1);
        const AgentTrack* robot = scene.robot_track();
        for (const auto& tr : scene.tracks) {
            if (tr.type == AgentType::robot) continue;
            for (int t0 = tr.first_t; t0 + span <= tr.last_t(); t0 += stride) {
                if (!covered(tr, t0, t0 + span)) continue;
                if (cfg.condition_on_robot) {
                    if (robot == nullptr) continue;
                    if (!covered(*robot, t0 + stride * cfg.history, t0 + span)) continue;
                }
                out.push_back(WindowRef{static_cast<int>(si), tr.agent_id, t0});
            }
        }
    }
    return out;
}

Example make_example(const Dataset& ds, const Scene& scene, const ModelConfig& cfg, int focus_id,
                     int t0, int history_len, const std::vector<AgentState>* robot_future_override,
                     bool require_future) {
    const int stride = model_stride(ds.dt, cfg);
    const int H = history_len >= 1 ? history_len : cfg.history;
    const int T = cfg.horizon;
    const AgentTrack* focus = scene.find_track(focus_id);
    if (focus == nullptr) throw InputError("unknown focus agent " + std::to_string(focus_id));
    const int t_last = t0 + stride * (H - 1);
    if (!covered(*focus, t0, t_last))
        throw InputError("focus agent not covered over the history window");

    Example ex;
    ex.focus_id = focus_id;

    // history features: per-step displacement (zero at the first step)
    // and velocity, both scaled
    for (int k = 0; k < H; ++k) {
        const int t = t0 + stride * k;
        const AgentState& s = focus->at(t);
        Vec2 dp{0, 0};
        if (k > 0) dp = s.pos - focus->at(t - stride).pos;
        ex.hist_feats.push_back({dp[0] * cfg.pos_scale, dp[1] * cfg.pos_scale,
                                 s.vel[0] * cfg.vel_scale, s.vel[1] * cfg.vel_scale});
    }

    // interaction graphs on the model grid
    const stg::Thresholds d = cfg.thresholds();
    for (int k = 0; k < H; ++k) {
        const int t = t0 + stride * k;
        const auto states = states_at(scene, t);
        ex.graphs.push_back(k == 0 ? stg::build_graph(states, k, d, cfg.ramp_window)
                                   : stg::update_graph(ex.graphs.back(), states, d));
    }

    const AgentState& last = focus->at(t_last);
    ex.last_pos = last.pos;
    ex.heading0 = last.has_heading() ? last.heading : std::atan2(last.vel[1], last.vel[0]);
    ex.speed0 = last.speed();

    // robot future (candidate or recorded)
    const AgentTrack* robot = scene.robot_track();
    if (cfg.condition_on_robot) {
        std::vector<AgentState> future;
        if (robot_future_override != nullptr) {
            future = *robot_future_override;
        } else if (robot != nullptr) {
            for (int k = 1; k <= T; ++k) {
                const int t = t_last + stride * k;
                if (!robot->present_at(t)) break;
                future.push_back(robot->at(t));
            }
        }
        if (static_cast<int>(future.size()) < T)
            throw InputError("model conditions on a robot future of length " + std::to_string(T) +
                             " but none was available");
        for (int k = 0; k < T; ++k) {
            const AgentState& s = future[static_cast<size_t>(k)];
            ex.robot_feats.push_back({(s.pos[0] - last.pos[0]) * cfg.pos_scale,
                                      (s.pos[1] - last.pos[1]) * cfg.pos_scale,
                                      s.vel[0] * cfg.vel_scale, s.vel[1] * cfg.vel_scale});
        }
        ex.has_robot_future = true;
    }

    // anchor: the decoder predicts offsets from the last observed motion
    const double dt_model = ds.dt * stride;
    Vec2 last_dp{0, 0};
    if (focus->present_at(t_last - stride)) last_dp = last.pos - focus->at(t_last - stride).pos;
    switch (cfg.output) {
        case OutputSpace::displacement: ex.anchor = last_dp; break;
        case OutputSpace::si_velocity: ex.anchor = (1.0 / dt_model) * last_dp; break;
        case OutputSpace::unicycle_control: ex.anchor = {0.0, 0.0}; break;
    }

    // targets and ground-truth future positions
    if (require_future) {
        if (!covered(*focus, t_last + stride, t_last + stride * T))
            throw InputError("focus agent not covered over the prediction horizon");
        Vec2 prev_pos = last.pos;
        double prev_heading = ex.heading0;
        double prev_speed = ex.speed0;
        for (int k = 1; k <= T; ++k) {
            const AgentState& s = focus->at(t_last + stride * k);
            ex.gt_future.push_back(s.pos);
            const Vec2 dp = s.pos - prev_pos;
            switch (cfg.output) {
                case OutputSpace::displacement:
                    ex.targets.push_back(dp);
                    break;
                case OutputSpace::si_velocity:
                    ex.targets.push_back((1.0 / dt_model) * dp);
                    break;
                case OutputSpace::unicycle_control: {
                    if (!s.has_heading())
                        throw InputError("unicycle output space requires heading data");
                    const double omega = wrap_angle(s.heading - prev_heading) / dt_model;
                    const double accel = (s.speed() - prev_speed) / dt_model;
                    ex.targets.push_back({omega, accel});
                    prev_heading = s.heading;
                    prev_speed = s.speed();
                    break;
                }
            }
            prev_pos = s.pos;
        }
    }

    if (cfg.use_map) {
        // default corridor crop; callers with richer maps fill ex.map themselves
        ex.map = corridor_occupancy(cfg, ex.last_pos, ex.heading0, 2.0 * cfg.thresh_ped);
    }
    return ex;
}

std::vector<double> corridor_occupancy(const ModelConfig& cfg, Vec2 center, double heading,
                                       double corridor_halfwidth) {
    const int n = cfg.map_size;
    std::vector<double> grid(static_cast<size_t>(n) * n, 0.0);
    const double c = std::cos(heading), s = std::sin(heading);
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            // cell center in the agent frame (+x forward)
            const double fx = (ix - n / 2 + 0.5) * cfg.map_cell;
            const double fy = (iy - n / 2 + 0.5) * cfg.map_cell;
            // world-frame lateral offset from the corridor axis (y = center_y)
            const double wy = center[1] + fx * s + fy * c;
            grid[static_cast<size_t>(iy) * n + ix] = std::fabs(wy) > corridor_halfwidth ? 1.0 : 0.0;
        }
    }
    return grid;
}

}  // namespace trajcast::cvae
