#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "trajcast/core/types.hpp"
#include "trajcast/dyn/dynamics.hpp"

namespace trajcast::metrics {

// mean / final Euclidean displacement between prediction and truth
double ade(std::span<const Vec2> pred, std::span<const Vec2> gt);
double fde(std::span<const Vec2> pred, std::span<const Vec2> gt);

enum class Displacement { ade, fde };
double best_of_n(const std::vector<std::vector<Vec2>>& samples, std::span<const Vec2> gt,
                 Displacement which);

// Gaussian-kernel density NLL of the truth under per-timestep sample
// clouds. Bandwidth per axis: sample std times n^(-1/4) (n^(-1/6), the
// classic Scott factor, inflates the density enough to miss the
// estimator-validity tolerance; see the metrics test against the
// closed-form normal). Log-density floored at -20 nats; degenerate
// (zero-spread) timesteps hit the floor and are flagged.
struct KdeOptions {
    enum class Bandwidth { scott, n_quarter } bandwidth = Bandwidth::n_quarter;
    double floor_nats = -20.0;
};
struct KdeResult {
    double nll = 0.0;
    bool floored = false;  // any timestep hit the floor or was degenerate
};
// samples: [sample][timestep]; all trajectories of gt's length
KdeResult kde_nll(const std::vector<std::vector<Vec2>>& samples, std::span<const Vec2> gt,
                  const KdeOptions& opt = {});

// NLL of the truth under a latent-mode mixture of per-step Gaussians,
// mixed by mode probability via log-sum-exp, averaged over timesteps.
struct WeightedGaussTraj {
    double prob = 1.0;
    dyn::GaussianTrajectory traj;
};
double analytic_nll(const std::vector<WeightedGaussTraj>& modes, std::span<const Vec2> gt);

// extrapolates the last observed velocity over the horizon
std::vector<Vec2> const_velocity_baseline(std::span<const AgentState> history, int horizon,
                                          double dt);

// Majority-vote mapping from latent mode to scripted label on the
// calibration split, agreement rate on the held-out split. Modes never
// seen in calibration count as misses.
struct ModeRecovery {
    double agreement = 0.0;
    std::map<int, std::string> mapping;
};
ModeRecovery mode_recovery(const std::vector<int>& calib_modes,
                           const std::vector<std::string>& calib_labels,
                           const std::vector<int>& test_modes,
                           const std::vector<std::string>& test_labels);

// Ordered name -> value report with provenance and free-form flags.
struct MetricReport {
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> flags;

    void set(const std::string& name, double v);
    bool has(const std::string& name) const;
    double get(const std::string& name) const;  // throws InputError when absent

    std::string to_keyvalues(const std::string& runconfig_hash) const;
    std::string to_table() const;
};

}  // namespace trajcast::metrics
