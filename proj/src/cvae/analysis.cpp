#include "trajcast/cvae/analysis.hpp"

#include <algorithm>
#include <set>

namespace trajcast::cvae {

ModeUsage mode_usage(const Model& model, const Dataset& ds, const std::vector<WindowRef>& windows) {
    if (windows.empty()) throw InputError("mode_usage: no windows");
    const int K = model.config().latent_k;
    ModeUsage u;
    u.mass.assign(static_cast<size_t>(K), 0.0);
    for (const auto& w : windows) {
        const Example ex = make_example(ds, ds.scenes[static_cast<size_t>(w.scene_index)],
                                        model.config(), w.focus_id, w.t0, -1, nullptr,
                                        /*require_future=*/false);
        const auto p = model.prior_probs(ex);
        for (int z = 0; z < K; ++z) u.mass[static_cast<size_t>(z)] += p[static_cast<size_t>(z)];
    }
    for (auto& m : u.mass) m /= static_cast<double>(windows.size());

    u.by_mass.resize(static_cast<size_t>(K));
    for (int z = 0; z < K; ++z) u.by_mass[static_cast<size_t>(z)] = z;
    std::sort(u.by_mass.begin(), u.by_mass.end(),
              [&](int a, int b) { return u.mass[static_cast<size_t>(a)] > u.mass[static_cast<size_t>(b)]; });
    double cum = 0.0;
    for (int z : u.by_mass) {
        u.cover_99.push_back(z);
        cum += u.mass[static_cast<size_t>(z)];
        if (cum >= 0.99) break;
    }
    return u;
}

std::unique_ptr<Model> prune_modes(const Model& model, const std::vector<int>& keep) {
    const int K = model.config().latent_k;
    if (keep.empty()) throw InputError("prune_modes: keep set is empty");
    std::set<int> seen;
    for (int z : keep) {
        if (z < 0 || z >= K) throw InputError("prune_modes: invalid mode index " + std::to_string(z));
        if (!seen.insert(z).second) throw InputError("prune_modes: duplicate mode index");
    }

    ModelConfig cfg = model.config();
    cfg.latent_k = static_cast<int>(keep.size());
    auto pruned = std::make_unique<Model>(cfg);

    const int onehot0 = model.decoder_onehot_col();
    for (const auto& dst : pruned->params()) {
        const auto* src = const_cast<Model&>(model).params().find(dst->name);
        if (src == nullptr) throw std::logic_error("prune: missing source parameter " + dst->name);
        if (dst->name == "dec.w") {
            // select the one-hot columns of the kept modes
            const int cols_src = src->shape.cols, cols_dst = dst->shape.cols;
            for (int r = 0; r < dst->shape.rows; ++r) {
                const double* srow = src->value.data() + static_cast<size_t>(r) * cols_src;
                double* drow = dst->value.data() + static_cast<size_t>(r) * cols_dst;
                for (int c = 0; c < onehot0; ++c) drow[c] = srow[c];
                for (size_t i = 0; i < keep.size(); ++i)
                    drow[onehot0 + static_cast<int>(i)] = srow[onehot0 + keep[i]];
                const int tail = cols_src - onehot0 - K;
                for (int c = 0; c < tail; ++c)
                    drow[onehot0 + static_cast<int>(keep.size()) + c] = srow[onehot0 + K + c];
            }
        } else if (dst->name == "prior.1.w" || dst->name == "prop.1.w") {
            const int cols = src->shape.cols;
            for (size_t i = 0; i < keep.size(); ++i)
                std::copy_n(src->value.data() + static_cast<size_t>(keep[i]) * cols, cols,
                            dst->value.data() + i * static_cast<size_t>(cols));
        } else if (dst->name == "prior.1.b" || dst->name == "prop.1.b") {
            for (size_t i = 0; i < keep.size(); ++i)
                dst->value[i] = src->value[static_cast<size_t>(keep[i])];
        } else {
            if (src->shape.size() != dst->shape.size())
                throw std::logic_error("prune: unexpected shape change in " + dst->name);
            dst->value = src->value;
        }
    }
    return pruned;
}

}  // namespace trajcast::cvae
