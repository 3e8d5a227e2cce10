#pragma once

// Small deterministic scenes/datasets shared by the cvae-level tests.

#include "trajcast/core/rng.hpp"
#include "trajcast/core/types.hpp"
#include "trajcast/cvae/config.hpp"
#include "trajcast/synth/synthgen.hpp"

namespace trajcast::testing {

// a tiny weave dataset on the raw 0.1 s grid
inline Dataset small_weave_dataset(int n_scenes, uint64_t seed0 = 0) {
    Dataset ds;
    ds.dt = 0.1;
    synth::WeaveParams wp;
    for (int i = 0; i < n_scenes; ++i)
        ds.scenes.push_back(synth::gen_traffic_weave(wp, seed0 + static_cast<uint64_t>(i), i));
    return ds;
}

// model config small enough for finite-difference sweeps
inline cvae::ModelConfig tiny_config(cvae::OutputSpace out, int K = 3) {
    cvae::ModelConfig cfg;
    cfg.latent_k = K;
    cfg.mixture_m = out == cvae::OutputSpace::displacement ? 2 : 1;
    cfg.horizon = 3;
    cfg.history = 3;
    cfg.dt = 0.5;
    cfg.output = out;
    cfg.hidden_history = 4;
    cfg.hidden_edge = 3;
    cfg.hidden_future = 3;
    cfg.hidden_decoder = 5;
    cfg.x_summary = 4;
    cfg.head_hidden = 4;
    cfg.proposal_hidden = 3;
    return cfg;
}

}  // namespace trajcast::testing
