#pragma once

#include <array>
#include <span>
#include <vector>

#include "trajcast/core/rng.hpp"
#include "trajcast/core/types.hpp"

namespace trajcast::dyn {

// Gaussian over a 2-vector action: (vx, vy) for the single integrator,
// (omega, a) for the unicycle.
struct ActionDist {
    Vec2 mean{0.0, 0.0};
    Cov2 cov;
};

struct SiState {
    Vec2 mean{0.0, 0.0};
    Cov2 cov;
};

// Dynamically-extended unicycle: state (x, y, phi, v), actions (omega, a).
struct UniState {
    std::array<double, 4> mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, 16> cov{};  // row-major 4x4, kept symmetric
};

struct Limits {
    double v_max = 15.0;
    double omega_max = 1.2;
    double a_max = 4.0;
};

enum class DynModel { integrator, unicycle };

// ---- single integrator (exact linear-Gaussian propagation) ----
// mean' = mean + u.mean * dt ; cov' = cov + dt^2 * u.cov
// (state and action noise treated as independent at each step)
SiState si_propagate(const SiState& s, const ActionDist& u, double dt);

// ---- unicycle ----
// Exact constant-control integration over dt (series near omega = 0).
std::array<double, 4> unicycle_step_mean(const std::array<double, 4>& s, double omega, double a,
                                         double dt);

// Jacobians of unicycle_step_mean at (s, u): A = d next/d state (4x4
// row-major), B = d next/d action (4x2 row-major).
void unicycle_jacobians(const std::array<double, 4>& s, double omega, double a, double dt,
                        std::array<double, 16>& A, std::array<double, 8>& B);

// Linearized covariance: cov' = A cov A^T + B u.cov B^T, symmetrized.
UniState unicycle_propagate(const UniState& s, const ActionDist& u, double dt);

// ---- trajectory-level integration of decoder outputs ----

struct GaussStep {
    Vec2 mean{0.0, 0.0};
    Cov2 cov;
};
using GaussianTrajectory = std::vector<GaussStep>;

struct InitialState {
    Vec2 pos{0.0, 0.0};
    Cov2 pos_cov;        // integrator start covariance (usually zero)
    double heading = 0.0;  // unicycle only
    double speed = 0.0;    // unicycle only
};

// Chains the matching propagate op over the horizon and returns the
// per-step position mean/covariance. Unicycle action means are clamped
// to the limits (covariance untouched) and speed is clamped to
// [0, v_max] along the mean.
GaussianTrajectory integrate_prediction(const InitialState& init, std::span<const ActionDist> actions,
                                        double dt, DynModel model, const Limits& lim = {});

// One sampled, dynamically feasible rollout: actions drawn from their
// Gaussians, clamped to the limits, integrated exactly. Positions only.
std::vector<Vec2> sample_rollout(const InitialState& init, std::span<const ActionDist> actions,
                                 double dt, DynModel model, const Limits& lim, Rng& rng);

// 2x2 Gaussian sample via Cholesky; throws InputError on non-PSD cov.
Vec2 sample_gauss2(const Vec2& mean, const Cov2& cov, Rng& rng);

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace trajcast::dyn
