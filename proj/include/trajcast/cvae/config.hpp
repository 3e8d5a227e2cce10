#pragma once

#include <string>

#include "trajcast/dyn/dynamics.hpp"
#include "trajcast/io/keyvalues.hpp"
#include "trajcast/stg/graph.hpp"

namespace trajcast::cvae {

// What the decoder's per-step bivariate mixture describes, and how it
// turns into positions:
//   displacement      — per-step position offsets, summed up
//   si_velocity       — velocity actions through the single integrator
//   unicycle_control  — (yaw rate, acceleration) through the unicycle
enum class OutputSpace { displacement, si_velocity, unicycle_control };

const char* to_string(OutputSpace s);
OutputSpace output_space_from_string(const std::string& s);

struct ModelConfig {
    int latent_k = 25;   // discrete modes
    int mixture_m = 1;   // GMM components per step (must be 1 unless displacement)
    int horizon = 8;     // prediction steps T_f
    int history = 6;     // encoder history steps
    double dt = 0.5;     // model step (s); dataset dt must divide it

    OutputSpace output = OutputSpace::si_velocity;
    bool condition_on_robot = true;

    int hidden_history = 32;
    int hidden_edge = 16;
    int hidden_future = 16;
    int hidden_decoder = 32;
    int x_summary = 32;
    int head_hidden = 32;
    int proposal_hidden = 16;

    bool use_map = false;
    int map_size = 64;       // cells per side
    double map_cell = 0.25;  // meters per cell
    int map_feat = 32;

    double thresh_ped = 3.0;
    double thresh_vehicle = 30.0;
    int ramp_window = 4;

    double pos_scale = 0.1;
    double vel_scale = 0.1;

    dyn::Limits limits;
    double pos_floor = 1e-6;  // jitter added to integrated position covariance

    stg::Thresholds thresholds() const { return {thresh_ped, thresh_vehicle}; }
    int decoder_head_width() const { return mixture_m == 1 ? 5 : 6 * mixture_m; }

    io::KeyValues to_kv() const;
    static ModelConfig from_kv(const io::KeyValues& kv);  // validates; throws ConfigError
    std::string to_text() const { return to_kv().serialize(); }
    static ModelConfig from_text(const std::string& text) {
        return from_kv(io::KeyValues::parse(text));
    }
};

struct TrainConfig {
    int epochs = 60;
    int batch = 32;
    double learning_rate = 1e-3;
    double clip_norm = 10.0;
    double kl_anneal_frac = 0.1;  // KL weight ramps 0 -> 1 over this fraction of steps
    int patience = 12;            // early stop on validation marginal log-likelihood
    uint64_t seed = 1;
    std::string optimizer = "adam";  // or "sgd"
    // run control (not serialized): stop after this epoch while keeping
    // the full schedule, so the run can resume as an exact prefix
    int stop_after_epoch = 1 << 30;

    io::KeyValues to_kv() const;
    static TrainConfig from_kv(const io::KeyValues& kv);
};

}  // namespace trajcast::cvae
