#include "trajcast/cvae/model.hpp"

#include <cmath>

#include "trajcast/dyn/tape_dynamics.hpp"

namespace trajcast::cvae {

using diff::Shape;
using diff::Tape;
using diff::Var;

Model::Model(ModelConfig cfg) : cfg_(ModelConfig::from_kv(cfg.to_kv())) {
    hist_ = diff::LstmCell(params_, "hist", 4, cfg_.hidden_history);
    edges_ = stg::EdgeEncoders(params_, "edge", cfg_.hidden_edge);
    robot_ = diff::LstmCell(params_, "robot", 4, cfg_.hidden_future);
    int x_in = cfg_.hidden_history + edges_.aggregate_size() + cfg_.hidden_future;
    if (cfg_.use_map) {
        conv1_w_ = &params_.add("map.conv1.w", 4, 1 * 9, 9);
        conv1_b_ = &params_.add("map.conv1.b", 1, 4, 0);
        conv2_w_ = &params_.add("map.conv2.w", 8, 4 * 9, 36);
        conv2_b_ = &params_.add("map.conv2.b", 1, 8, 0);
        conv3_w_ = &params_.add("map.conv3.w", 8, 8 * 9, 72);
        conv3_b_ = &params_.add("map.conv3.b", 1, 8, 0);
        const int side = cfg_.map_size / 8;  // three stride-2 stages
        map_fc_ = diff::Affine(params_, "map.fc", 8 * side * side, cfg_.map_feat);
        x_in += cfg_.map_feat;
    }
    x_fc_ = diff::Affine(params_, "xfc", x_in, cfg_.x_summary);
    prior_head_ = diff::Mlp(params_, "prior", cfg_.x_summary, cfg_.head_hidden, cfg_.latent_k);
    y_enc_ = diff::LstmCell(params_, "yenc", 2, cfg_.proposal_hidden);
    prop_head_ = diff::Mlp(params_, "prop", cfg_.x_summary + cfg_.proposal_hidden, cfg_.head_hidden,
                           cfg_.latent_k);
    dec_ = diff::LstmCell(params_, "dec", cfg_.x_summary + cfg_.latent_k + 2, cfg_.hidden_decoder);
    dec_head_ = diff::Affine(params_, "dec_head", cfg_.hidden_decoder, cfg_.decoder_head_width());
}

Var Model::map_encoding(Tape& t, const Example& ex) const {
    if (ex.map.empty() || static_cast<int>(ex.map.size()) != cfg_.map_size * cfg_.map_size)
        throw InputError("model configured with a map encoder but the example has no map crop");
    Var img = t.constant(Shape{1, cfg_.map_size * cfg_.map_size}, ex.map);
    const int s1 = cfg_.map_size / 2, s2 = cfg_.map_size / 4, s3 = cfg_.map_size / 8;
    Var h1 = t.tanh(t.conv2d(img, *conv1_w_, conv1_b_, 1, cfg_.map_size, cfg_.map_size, 4, 3, 2));
    Var h2 = t.tanh(t.conv2d(h1, *conv2_w_, conv2_b_, 4, s1, s1, 8, 3, 2));
    Var h3 = t.tanh(t.conv2d(h2, *conv3_w_, conv3_b_, 8, s2, s2, 8, 3, 2));
    (void)s3;
    return t.tanh(map_fc_(t, h3));
}

Var Model::encode_condition(Tape& t, const Example& ex) const {
    if (static_cast<int>(ex.hist_feats.size()) < 1) throw InputError("empty history");
    if (ex.graphs.size() != ex.hist_feats.size())
        throw InputError("history features and graphs disagree in length");

    auto hs = hist_.zero_state(t, 1);
    for (const auto& f : ex.hist_feats) hs = hist_.step(t, t.constant(Shape{1, 4}, f), hs);

    Var agg = edges_.encode(t, ex.graphs, ex.focus_id, feature_scales());

    Var robot_h;
    if (cfg_.condition_on_robot) {
        if (!ex.has_robot_future || static_cast<int>(ex.robot_feats.size()) != cfg_.horizon)
            throw InputError("model conditions on a robot future but the example lacks one");
        auto rs = robot_.zero_state(t, 1);
        for (const auto& f : ex.robot_feats) rs = robot_.step(t, t.constant(Shape{1, 4}, f), rs);
        robot_h = rs.h;
    } else {
        robot_h = t.constant(Shape{1, cfg_.hidden_future}, 0.0);
    }

    std::vector<Var> blocks{hs.h, agg, robot_h};
    if (cfg_.use_map) blocks.push_back(map_encoding(t, ex));
    return project_condition(t, blocks);
}

Var Model::prior_logits(Tape& t, Var xsum) const { return prior_head_(t, xsum); }

Var Model::proposal_logits(Tape& t, Var xsum, const Example& ex) const {
    if (static_cast<int>(ex.targets.size()) != cfg_.horizon)
        throw InputError("proposal needs a ground-truth future of horizon length");
    auto ys = y_enc_.zero_state(t, 1);
    for (const auto& y : ex.targets) {
        const std::array<double, 2> f{(y[0] - ex.anchor[0]) * kPrevScale,
                                      (y[1] - ex.anchor[1]) * kPrevScale};
        ys = y_enc_.step(t, t.constant(Shape{1, 2}, f), ys);
    }
    const std::array<Var, 2> cat{xsum, ys.h};
    return prop_head_(t, t.concat_cols(cat));
}

Var Model::decode_teacher(Tape& t, Var xsum, const Example& ex) const {
    const int K = cfg_.latent_k, T = cfg_.horizon, M = cfg_.mixture_m;
    if (static_cast<int>(ex.targets.size()) != T || static_cast<int>(ex.gt_future.size()) != T)
        throw InputError("teacher decode needs targets over the full horizon");

    std::vector<double> eye(static_cast<size_t>(K) * K, 0.0);
    for (int i = 0; i < K; ++i) eye[static_cast<size_t>(i) * K + i] = 1.0;
    Var onehot = t.constant(Shape{K, K}, eye);
    Var xrep = t.repeat_rows(xsum, K);

    std::vector<double> anchor_rows(static_cast<size_t>(K) * 2);
    for (int i = 0; i < K; ++i) {
        anchor_rows[2 * static_cast<size_t>(i)] = ex.anchor[0];
        anchor_rows[2 * static_cast<size_t>(i) + 1] = ex.anchor[1];
    }
    Var anchor = t.constant(Shape{K, 2}, anchor_rows);

    auto ds = dec_.zero_state(t, K);
    Var prev = t.constant(Shape{K, 2}, 0.0);
    Var ll = t.constant(Shape{K, 1}, 0.0);

    dyn::TapeSiState si;
    dyn::TapeUniState uni;
    if (cfg_.output == OutputSpace::si_velocity)
        si = dyn::tape_si_init(t, K, ex.last_pos[0], ex.last_pos[1]);
    else if (cfg_.output == OutputSpace::unicycle_control)
        uni = dyn::tape_uni_init(t, K, ex.last_pos[0], ex.last_pos[1], ex.heading0, ex.speed0);

    for (int k = 0; k < T; ++k) {
        const std::array<Var, 3> in{xrep, onehot, prev};
        ds = dec_.step(t, t.concat_cols(in), ds);
        Var raw = dec_head_(t, ds.h);
        Var llk;
        switch (cfg_.output) {
            case OutputSpace::displacement: {
                const Vec2 pt = ex.targets[static_cast<size_t>(k)] - ex.anchor;
                llk = t.gmm_logp(raw, M, pt[0], pt[1]);
                break;
            }
            case OutputSpace::si_velocity: {
                Var mu = t.add(t.slice_cols(raw, 0, 2), anchor);
                Var cov = t.cov_from_params(t.slice_cols(raw, 2, 3));
                si = dyn::tape_si_propagate(t, si, mu, cov, cfg_.dt);
                const Vec2 gt = ex.gt_future[static_cast<size_t>(k)];
                llk = dyn::tape_si_pos_logp(t, si, gt[0], gt[1], cfg_.pos_floor);
                break;
            }
            case OutputSpace::unicycle_control: {
                Var om = t.slice_cols(raw, 0, 1);
                Var ac = t.slice_cols(raw, 1, 1);
                Var cov = t.cov_from_params(t.slice_cols(raw, 2, 3));
                uni = dyn::tape_uni_propagate(t, uni, om, ac, cov, cfg_.dt);
                const Vec2 gt = ex.gt_future[static_cast<size_t>(k)];
                llk = dyn::tape_uni_pos_logp(t, uni, gt[0], gt[1], cfg_.pos_floor);
                break;
            }
        }
        ll = t.add(ll, llk);
        // teacher forcing: feed the ground-truth previous output point
        const Vec2 fb = ex.targets[static_cast<size_t>(k)] - ex.anchor;
        std::vector<double> fb_rows(static_cast<size_t>(K) * 2);
        for (int i = 0; i < K; ++i) {
            fb_rows[2 * static_cast<size_t>(i)] = fb[0] * kPrevScale;
            fb_rows[2 * static_cast<size_t>(i) + 1] = fb[1] * kPrevScale;
        }
        prev = t.constant(Shape{K, 2}, fb_rows);
    }
    return ll;
}

Model::Parts Model::forward_parts(Tape& t, const Example& ex, bool with_proposal) const {
    Parts p;
    p.xsum = encode_condition(t, ex);
    p.prior_logits = prior_logits(t, p.xsum);
    p.ll = decode_teacher(t, p.xsum, ex);
    if (with_proposal) p.prop_logits = proposal_logits(t, p.xsum, ex);
    return p;
}

Var Model::elbo_loss(Tape& t, const Example& ex, double kl_weight) const {
    const Parts p = forward_parts(t, ex, true);
    Var q = t.row_softmax(p.prop_logits);                          // [1 x K]
    Var logq = t.row_log_softmax(p.prop_logits);
    Var logp = t.row_log_softmax(p.prior_logits);
    Var recon = t.dot_all(t.reshape(q, Shape{cfg_.latent_k, 1}), p.ll);
    Var kl = t.dot_all(q, t.sub(logq, logp));
    return t.add_scaled(t.scale(recon, -1.0), kl_weight, kl);
}

Var Model::marginal_ll(Tape& t, const Example& ex) const {
    const Parts p = forward_parts(t, ex, false);
    Var logp = t.reshape(t.row_log_softmax(p.prior_logits), Shape{cfg_.latent_k, 1});
    return t.logsumexp_all(t.add(logp, p.ll));
}

std::vector<double> Model::prior_probs(const Example& ex) const {
    Tape t;
    Var probs = t.row_softmax(prior_logits(t, encode_condition(t, ex)));
    return {t.val(probs).begin(), t.val(probs).end()};
}

std::vector<double> Model::posterior_probs(const Example& ex) const {
    Tape t;
    const Parts p = forward_parts(t, ex, false);
    Var logp = t.reshape(t.row_log_softmax(p.prior_logits), Shape{cfg_.latent_k, 1});
    Var post = t.add(logp, p.ll);
    const auto v = t.val(post);
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    std::vector<double> out(v.begin(), v.end());
    double acc = 0.0;
    for (auto& x : out) {
        x = std::exp(x - mx);
        acc += x;
    }
    for (auto& x : out) x /= acc;
    return out;
}

// ---------------------------------------------------------------- rollouts

namespace {

// sample one point from a raw GMM parameter row (decoder layout)
Vec2 sample_raw_row(const double* row, int m, Rng& rng) {
    const bool has_w = m > 1;
    const int w0 = 0, mu0 = has_w ? m : 0, s0 = mu0 + 2 * m, r0 = s0 + 2 * m;
    int comp = 0;
    if (has_w) {
        double mx = row[w0];
        for (int i = 1; i < m; ++i) mx = std::max(mx, row[w0 + i]);
        double acc = 0.0;
        std::vector<double> w(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            w[static_cast<size_t>(i)] = std::exp(row[w0 + i] - mx);
            acc += w[static_cast<size_t>(i)];
        }
        for (auto& x : w) x /= acc;
        comp = rng.categorical(w.data(), m);
    }
    const double sx = std::exp(row[s0 + 2 * comp]), sy = std::exp(row[s0 + 2 * comp + 1]);
    const double rho = std::tanh(row[r0 + comp]);
    const double z1 = rng.normal(), z2 = rng.normal();
    return {row[mu0 + 2 * comp] + sx * z1,
            row[mu0 + 2 * comp + 1] + sy * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2)};
}

// mixture mean and (single-component) covariance of a raw row
Vec2 mean_raw_row(const double* row, int m) {
    const bool has_w = m > 1;
    const int w0 = 0, mu0 = has_w ? m : 0;
    if (!has_w) return {row[mu0], row[mu0 + 1]};
    double mx = row[w0];
    for (int i = 1; i < m; ++i) mx = std::max(mx, row[w0 + i]);
    double acc = 0.0;
    Vec2 mean{0, 0};
    for (int i = 0; i < m; ++i) {
        const double w = std::exp(row[w0 + i] - mx);
        acc += w;
        mean = mean + w * Vec2{row[mu0 + 2 * i], row[mu0 + 2 * i + 1]};
    }
    return (1.0 / acc) * mean;
}

Cov2 cov_raw_row_m1(const double* row) {
    // M = 1 layout: (mu_x, mu_y, s_x, s_y, r)
    const double sx = std::exp(row[2]), sy = std::exp(row[3]), rho = std::tanh(row[4]);
    return {sx * sx, rho * sx * sy, sy * sy};
}

}  // namespace

Model::RolloutResult Model::rollout(Tape& t, Var xsum, const RolloutContext& ctx,
                                    const std::vector<int>& row_z, bool sample, Rng* rng) const {
    const int rows = static_cast<int>(row_z.size());
    const int T = cfg_.horizon, K = cfg_.latent_k, M = cfg_.mixture_m;
    RolloutResult out;
    out.positions.assign(static_cast<size_t>(rows), {});
    if (!sample) out.step_dists.assign(static_cast<size_t>(rows), {});
    if (rows == 0) return out;
    if (sample && rng == nullptr) throw InputError("sampled rollout needs a random stream");

    std::vector<double> onehot(static_cast<size_t>(rows) * K, 0.0);
    for (int i = 0; i < rows; ++i) {
        if (row_z[static_cast<size_t>(i)] < 0 || row_z[static_cast<size_t>(i)] >= K)
            throw InputError("latent index out of range");
        onehot[static_cast<size_t>(i) * K + row_z[static_cast<size_t>(i)]] = 1.0;
    }
    Var zrows = t.constant(Shape{rows, K}, onehot);
    Var xrep = t.repeat_rows(xsum, rows);
    auto ds = dec_.zero_state(t, rows);
    Var prev = t.constant(Shape{rows, 2}, 0.0);

    // per-row integration state
    std::vector<Vec2> pos(static_cast<size_t>(rows), ctx.last_pos);
    std::vector<std::array<double, 4>> uni(static_cast<size_t>(rows),
                                           {ctx.last_pos[0], ctx.last_pos[1], ctx.heading0, ctx.speed0});

    for (int k = 0; k < T; ++k) {
        const std::array<Var, 3> in{xrep, zrows, prev};
        ds = dec_.step(t, t.concat_cols(in), ds);
        Var raw = dec_head_(t, ds.h);
        const auto rv = t.val(raw);
        const int W = cfg_.decoder_head_width();

        std::vector<double> fb(static_cast<size_t>(rows) * 2);
        for (int i = 0; i < rows; ++i) {
            const double* row = rv.data() + static_cast<size_t>(i) * W;
            Vec2 y_raw;  // point in the decoder's anchored output space
            if (sample) {
                y_raw = sample_raw_row(row, M, *rng);
            } else {
                y_raw = mean_raw_row(row, M);
                dyn::ActionDist d;
                d.mean = y_raw + ctx.anchor;
                d.cov = M == 1 ? cov_raw_row_m1(row) : Cov2{};
                out.step_dists[static_cast<size_t>(i)].push_back(d);
            }
            Vec2 y = y_raw + ctx.anchor;
            auto& p = pos[static_cast<size_t>(i)];
            switch (cfg_.output) {
                case OutputSpace::displacement:
                    p = p + y;
                    break;
                case OutputSpace::si_velocity:
                    p = p + cfg_.dt * y;
                    break;
                case OutputSpace::unicycle_control: {
                    auto& s = uni[static_cast<size_t>(i)];
                    const double om = dyn::clamp(y[0], -cfg_.limits.omega_max, cfg_.limits.omega_max);
                    const double ac = dyn::clamp(y[1], -cfg_.limits.a_max, cfg_.limits.a_max);
                    s = dyn::unicycle_step_mean(s, om, ac, cfg_.dt);
                    s[3] = dyn::clamp(s[3], 0.0, cfg_.limits.v_max);
                    p = {s[0], s[1]};
                    break;
                }
            }
            out.positions[static_cast<size_t>(i)].push_back(p);
            fb[2 * static_cast<size_t>(i)] = y_raw[0] * kPrevScale;
            fb[2 * static_cast<size_t>(i) + 1] = y_raw[1] * kPrevScale;
        }
        prev = t.constant(Shape{rows, 2}, fb);
    }
    return out;
}

Model::Prediction Model::predict_from_xsum(Tape& t, Var xsum, const RolloutContext& ctx,
                                           PredictMode mode, int n_per_mode, Rng* rng) const {
    const int K = cfg_.latent_k;
    Var probs_v = t.row_softmax(prior_logits(t, xsum));
    const auto probs = t.val(probs_v);

    Prediction pred;
    pred.modes.resize(static_cast<size_t>(K));
    for (int z = 0; z < K; ++z) pred.modes[static_cast<size_t>(z)].prob = probs[static_cast<size_t>(z)];

    switch (mode) {
        case PredictMode::sampled: {
            if (n_per_mode < 0) throw InputError("negative sample count");
            if (n_per_mode == 0) return pred;  // mode probabilities only
            std::vector<int> row_z;
            for (int z = 0; z < K; ++z)
                for (int i = 0; i < n_per_mode; ++i) row_z.push_back(z);
            auto rr = rollout(t, xsum, ctx, row_z, true, rng);
            for (int z = 0; z < K; ++z) {
                auto& m = pred.modes[static_cast<size_t>(z)];
                for (int i = 0; i < n_per_mode; ++i)
                    m.samples.push_back(std::move(rr.positions[static_cast<size_t>(z * n_per_mode + i)]));
            }
            break;
        }
        case PredictMode::most_likely: {
            int zstar = 0;
            for (int z = 1; z < K; ++z)
                if (probs[static_cast<size_t>(z)] > probs[static_cast<size_t>(zstar)]) zstar = z;
            auto rr = rollout(t, xsum, ctx, {zstar}, false, nullptr);
            pred.modes[static_cast<size_t>(zstar)].mean_traj = std::move(rr.positions[0]);
            break;
        }
        case PredictMode::analytic: {
            if (cfg_.mixture_m != 1)
                throw ConfigError("analytic output requires a single-component decoder (mixture_m = 1)");
            std::vector<int> row_z(static_cast<size_t>(K));
            for (int z = 0; z < K; ++z) row_z[static_cast<size_t>(z)] = z;
            auto rr = rollout(t, xsum, ctx, row_z, false, nullptr);
            for (int z = 0; z < K; ++z) {
                const auto& dists = rr.step_dists[static_cast<size_t>(z)];
                dyn::InitialState init{ctx.last_pos, {}, ctx.heading0, ctx.speed0};
                switch (cfg_.output) {
                    case OutputSpace::displacement:
                        // displacements are "velocities" over a unit step
                        pred.modes[static_cast<size_t>(z)].analytic = dyn::integrate_prediction(
                            init, dists, 1.0, dyn::DynModel::integrator, cfg_.limits);
                        break;
                    case OutputSpace::si_velocity:
                        pred.modes[static_cast<size_t>(z)].analytic = dyn::integrate_prediction(
                            init, dists, cfg_.dt, dyn::DynModel::integrator, cfg_.limits);
                        break;
                    case OutputSpace::unicycle_control:
                        pred.modes[static_cast<size_t>(z)].analytic = dyn::integrate_prediction(
                            init, dists, cfg_.dt, dyn::DynModel::unicycle, cfg_.limits);
                        break;
                }
                pred.modes[static_cast<size_t>(z)].mean_traj = std::move(rr.positions[static_cast<size_t>(z)]);
            }
            break;
        }
    }
    return pred;
}

Model::Prediction Model::predict(const Example& ex, PredictMode mode, int n_per_mode,
                                 Rng* rng) const {
    Tape t(1 << 16);
    Var xsum = encode_condition(t, ex);
    return predict_from_xsum(t, xsum, context_of(ex), mode, n_per_mode, rng);
}

std::vector<std::vector<Vec2>> Model::sample_mixture_from_xsum(Tape& t, Var xsum,
                                                               const RolloutContext& ctx, int n_total,
                                                               Rng& rng) const {
    Var probs_v = t.row_softmax(prior_logits(t, xsum));
    const auto probs = t.val(probs_v);
    std::vector<int> row_z(static_cast<size_t>(n_total));
    for (auto& z : row_z) z = rng.categorical(probs.data(), cfg_.latent_k);
    auto rr = rollout(t, xsum, ctx, row_z, true, &rng);
    return std::move(rr.positions);
}

std::vector<std::vector<Vec2>> Model::sample_mixture(const Example& ex, int n_total, Rng& rng) const {
    Tape t(1 << 16);
    Var xsum = encode_condition(t, ex);
    return sample_mixture_from_xsum(t, xsum, context_of(ex), n_total, rng);
}

std::vector<std::vector<Vec2>> Model::sample_mode(const Example& ex, int z, int n, Rng& rng) const {
    Tape t(1 << 16);
    Var xsum = encode_condition(t, ex);
    const std::vector<int> row_z(static_cast<size_t>(n), z);
    auto rr = rollout(t, xsum, context_of(ex), row_z, true, &rng);
    return std::move(rr.positions);
}

}  // namespace trajcast::cvae
