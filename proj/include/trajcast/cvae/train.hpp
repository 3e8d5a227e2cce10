#pragma once

#include <functional>
#include <vector>

#include "trajcast/cvae/model.hpp"
#include "trajcast/diff/optimizer.hpp"

namespace trajcast::cvae {

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;  // mean ELBO loss over the epoch
    double train_kl = 0.0;    // mean (unweighted) KL term
    double val_mll = 0.0;     // mean validation marginal log-likelihood
    double kl_weight = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = -1;
    double best_val_mll = -1e300;
    bool early_stopped = false;
};

// Minibatch training with exact latent marginalization, global-norm
// clipping (inside the optimizer) and a KL weight annealed 0 -> 1 over
// the first kl_anneal_frac of all steps. Early-stops on validation
// marginal log-likelihood and restores the best parameters. Throws
// NumericalError on a non-finite loss; the caller owns checkpointing.
TrainResult train_model(Model& model, diff::Optimizer& opt, const Dataset& ds,
                        const std::vector<WindowRef>& train_windows,
                        const std::vector<WindowRef>& val_windows, const TrainConfig& tc, Rng& rng,
                        const std::function<void(const EpochLog&)>& on_epoch = {},
                        int start_epoch = 0);

// mean marginal log-likelihood over windows (value-only pass)
double mean_marginal_ll(const Model& model, const Dataset& ds,
                        const std::vector<WindowRef>& windows);

}  // namespace trajcast::cvae
