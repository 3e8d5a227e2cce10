#include "trajcast/cvae/train.hpp"

#include <algorithm>
#include <cmath>

#include "trajcast/kernels/kernels.hpp"

namespace trajcast::cvae {

using diff::Shape;
using diff::Tape;
using diff::Var;

double mean_marginal_ll(const Model& model, const Dataset& ds,
                        const std::vector<WindowRef>& windows) {
    if (windows.empty()) throw InputError("no windows to evaluate");
    double acc = 0.0;
    for (const auto& w : windows) {
        const Example ex =
            make_example(ds, ds.scenes[static_cast<size_t>(w.scene_index)], model.config(),
                         w.focus_id, w.t0);
        Tape t(1 << 15);
        acc += t.scalar(model.marginal_ll(t, ex));
    }
    return acc / static_cast<double>(windows.size());
}

TrainResult train_model(Model& model, diff::Optimizer& opt, const Dataset& ds,
                        const std::vector<WindowRef>& train_windows,
                        const std::vector<WindowRef>& val_windows, const TrainConfig& tc, Rng& rng,
                        const std::function<void(const EpochLog&)>& on_epoch, int start_epoch) {
    if (train_windows.empty()) throw InputError("empty training split");

    // materialize examples once; windows are reshuffled every epoch
    std::vector<Example> examples;
    examples.reserve(train_windows.size());
    for (const auto& w : train_windows)
        examples.push_back(make_example(ds, ds.scenes[static_cast<size_t>(w.scene_index)],
                                        model.config(), w.focus_id, w.t0));

    const int n = static_cast<int>(examples.size());
    const int batches = (n + tc.batch - 1) / tc.batch;
    const double total_steps = static_cast<double>(tc.epochs) * batches;
    const double anneal_steps = std::max(1.0, tc.kl_anneal_frac * total_steps);

    std::vector<int> order(static_cast<size_t>(n));

    TrainResult result;
    std::vector<std::vector<double>> best_params;
    int since_best = 0;

    const int last_epoch = std::min(tc.epochs, tc.stop_after_epoch);
    for (int epoch = start_epoch; epoch < last_epoch; ++epoch) {
        // Fisher-Yates from identity with the run RNG each epoch, so a
        // resumed run replays the interrupted run's batch order exactly
        for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
        }

        double loss_acc = 0.0, kl_acc = 0.0;
        double klw = 0.0;
        for (int b = 0; b < batches; ++b) {
            const int lo = b * tc.batch;
            const int hi = std::min(n, lo + tc.batch);
            klw = std::min(1.0, static_cast<double>(opt.step_count() + 1) / anneal_steps);
            model.params().zero_grad();
            for (int i = lo; i < hi; ++i) {
                const Example& ex = examples[static_cast<size_t>(order[static_cast<size_t>(i)])];
                Tape t(1 << 15);
                const auto parts = model.forward_parts(t, ex, true);
                Var q = t.row_softmax(parts.prop_logits);
                Var logq = t.row_log_softmax(parts.prop_logits);
                Var logp = t.row_log_softmax(parts.prior_logits);
                Var recon = t.dot_all(t.reshape(q, Shape{model.config().latent_k, 1}), parts.ll);
                Var kl = t.dot_all(q, t.sub(logq, logp));
                Var loss = t.add_scaled(t.scale(recon, -1.0), klw, kl);
                const double lv = t.scalar(loss);
                if (!std::isfinite(lv))
                    throw NumericalError("non-finite training loss at epoch " +
                                         std::to_string(epoch));
                loss_acc += lv;
                kl_acc += t.scalar(kl);
                t.backward(loss);
            }
            // mean gradient over the batch
            const double inv = 1.0 / static_cast<double>(hi - lo);
            for (auto& p : model.params())
                kernels::scale(p->grad.data(), inv, p->grad.data(), p->grad.size());
            opt.step(model.params());
        }

        EpochLog el;
        el.epoch = epoch;
        el.train_loss = loss_acc / n;
        el.train_kl = kl_acc / n;
        el.kl_weight = klw;
        if (!val_windows.empty()) el.val_mll = mean_marginal_ll(model, ds, val_windows);
        result.log.push_back(el);
        if (on_epoch) on_epoch(el);

        if (!val_windows.empty()) {
            if (el.val_mll > result.best_val_mll) {
                result.best_val_mll = el.val_mll;
                result.best_epoch = epoch;
                since_best = 0;
                best_params.clear();
                for (const auto& p : model.params()) best_params.push_back(p->value);
            } else if (++since_best >= tc.patience) {
                result.early_stopped = true;
                break;
            }
        }
    }

    if (!best_params.empty()) {
        size_t i = 0;
        for (auto& p : model.params()) p->value = best_params[i++];
    }
    return result;
}

}  // namespace trajcast::cvae
