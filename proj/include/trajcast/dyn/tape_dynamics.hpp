#pragma once

#include "trajcast/diff/tape.hpp"

// Differentiable dynamics propagation, row-batched so one tensor row per
// latent mode flows through a shared step. Position-space losses built
// on top of these backpropagate into the decoder's action parameters,
// including the dependence of the linearization Jacobians on earlier
// means (the Jacobian entries are themselves composed from tape
// primitives, so no second-derivative bookkeeping is hand-written).
namespace trajcast::dyn {

using diff::Tape;
using diff::Var;

// ---- single integrator: exact linear-Gaussian chain ----
struct TapeSiState {
    Var mean;  // [n x 2]
    Var cov;   // [n x 3] packed (xx, xy, yy)
};

TapeSiState tape_si_init(Tape& t, int rows, double px, double py);
TapeSiState tape_si_propagate(Tape& t, const TapeSiState& s, Var action_mean, Var action_cov,
                              double dt);

// log N(point; position mean, position cov + jitter*I) per row -> [n x 1]
Var tape_si_pos_logp(Tape& t, const TapeSiState& s, double px, double py, double jitter);

// ---- unicycle: linearized covariance, exact mean ----
struct TapeUniState {
    // per-mode scalars, each [n x 1]
    Var x, y, phi, v;
    // 4x4 symmetric covariance in blocks:
    Var pxx, pxy, pyy;            // position block
    Var cxp, cxv, cyp, cyv;       // cross block cov(pos, (phi, v))
    Var qpp, qpv, qvv;            // (phi, v) block
};

TapeUniState tape_uni_init(Tape& t, int rows, double x0, double y0, double phi0, double v0);

// omega, accel: [n x 1]; action_cov: [n x 3] packed (ww, wa, aa)
TapeUniState tape_uni_propagate(Tape& t, const TapeUniState& s, Var omega, Var accel,
                                Var action_cov, double dt);

Var tape_uni_pos_logp(Tape& t, const TapeUniState& s, double px, double py, double jitter);

}  // namespace trajcast::dyn
