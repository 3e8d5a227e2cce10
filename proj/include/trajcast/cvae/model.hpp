#pragma once

#include <optional>
#include <vector>

#include "trajcast/cvae/config.hpp"
#include "trajcast/cvae/example.hpp"
#include "trajcast/diff/layers.hpp"
#include "trajcast/dyn/dynamics.hpp"
#include "trajcast/stg/edges.hpp"

namespace trajcast::cvae {

enum class PredictMode { sampled, most_likely, analytic };

// Discrete-latent conditional sequence model. The condition x is the
// encoded interaction history plus the candidate robot future (and an
// optional map crop); a K-way categorical latent selects the behavior
// mode; an autoregressive recurrent decoder emits one bivariate mixture
// per step, either over displacements or over agent actions that are
// integrated through the dynamics. Training marginalizes the latent
// exactly (all K teacher-forced decodes run row-batched).
class Model {
public:
    explicit Model(ModelConfig cfg);

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = delete;

    const ModelConfig& config() const { return cfg_; }
    diff::ParamStore& params() { return params_; }
    const diff::ParamStore& params() const { return params_; }
    void init_params(Rng& rng) { params_.init(rng); }

    // ---- training-side graphs ----
    struct Parts {
        diff::Var xsum;
        diff::Var prior_logits;  // [1 x K]
        diff::Var ll;            // [K x 1] teacher-forced log p(y | x, z)
        diff::Var prop_logits;   // [1 x K], valid only when built with proposal
    };
    diff::Var encode_condition(diff::Tape& t, const Example& ex) const;
    Parts forward_parts(diff::Tape& t, const Example& ex, bool with_proposal) const;

    // Exact-latent-summation training loss:
    //   -sum_z q(z|x,y) log p(y|x,z) + kl_weight * KL[q(z|x,y) || p(z|x)]
    diff::Var elbo_loss(diff::Tape& t, const Example& ex, double kl_weight = 1.0) const;

    // log sum_z p(z|x) p(y|x,z), exact over all K modes
    diff::Var marginal_ll(diff::Tape& t, const Example& ex) const;

    // ---- value-side helpers ----
    std::vector<double> prior_probs(const Example& ex) const;
    // p(z | x, y) from prior and per-mode likelihood (analysis metric)
    std::vector<double> posterior_probs(const Example& ex) const;

    // ---- prediction ----
    struct ModePrediction {
        double prob = 0.0;
        std::vector<std::vector<Vec2>> samples;  // sampled mode
        std::vector<Vec2> mean_traj;             // most_likely mode
        dyn::GaussianTrajectory analytic;        // analytic mode
    };
    struct Prediction {
        std::vector<ModePrediction> modes;
    };

    struct RolloutContext {
        Vec2 last_pos{0, 0};
        Vec2 anchor{0, 0};
        double heading0 = 0.0;
        double speed0 = 0.0;
    };
    static RolloutContext context_of(const Example& ex) {
        return {ex.last_pos, ex.anchor, ex.heading0, ex.speed0};
    }

    Prediction predict(const Example& ex, PredictMode mode, int n_per_mode, Rng* rng) const;
    // n_total trajectories from the full mixture: z ~ p(z|x) per sample
    std::vector<std::vector<Vec2>> sample_mixture(const Example& ex, int n_total, Rng& rng) const;
    // n rollouts from one latent mode
    std::vector<std::vector<Vec2>> sample_mode(const Example& ex, int z, int n, Rng& rng) const;

    // shared with the online predictor (xsum supplied externally)
    Prediction predict_from_xsum(diff::Tape& t, diff::Var xsum, const RolloutContext& ctx,
                                 PredictMode mode, int n_per_mode, Rng* rng) const;
    std::vector<std::vector<Vec2>> sample_mixture_from_xsum(diff::Tape& t, diff::Var xsum,
                                                            const RolloutContext& ctx, int n_total,
                                                            Rng& rng) const;

    // layer access for the online predictor and pruning surgery
    const diff::LstmCell& history_cell() const { return hist_; }
    const stg::EdgeEncoders& edge_encoders() const { return edges_; }
    const diff::LstmCell& robot_cell() const { return robot_; }
    stg::FeatureScales feature_scales() const { return {cfg_.pos_scale, cfg_.vel_scale}; }
    int decoder_onehot_col() const { return cfg_.x_summary; }
    // final projection of the concatenated condition blocks (shared by
    // the offline encoder and the online predictor)
    diff::Var project_condition(diff::Tape& t, std::span<const diff::Var> blocks) const {
        return t.tanh(x_fc_(t, t.concat_cols(blocks)));
    }

    diff::Var decode_teacher(diff::Tape& t, diff::Var xsum, const Example& ex) const;

private:
    struct RolloutResult {
        std::vector<std::vector<Vec2>> positions;
        std::vector<std::vector<dyn::ActionDist>> step_dists;  // mean-feedback rollouts only
    };
    RolloutResult rollout(diff::Tape& t, diff::Var xsum, const RolloutContext& ctx,
                          const std::vector<int>& row_z, bool sample, Rng* rng) const;
    diff::Var prior_logits(diff::Tape& t, diff::Var xsum) const;
    diff::Var proposal_logits(diff::Tape& t, diff::Var xsum, const Example& ex) const;
    diff::Var map_encoding(diff::Tape& t, const Example& ex) const;

    ModelConfig cfg_;
    diff::ParamStore params_;
    diff::LstmCell hist_;
    stg::EdgeEncoders edges_;
    diff::LstmCell robot_;
    diff::Parameter* conv1_w_ = nullptr;
    diff::Parameter* conv1_b_ = nullptr;
    diff::Parameter* conv2_w_ = nullptr;
    diff::Parameter* conv2_b_ = nullptr;
    diff::Parameter* conv3_w_ = nullptr;
    diff::Parameter* conv3_b_ = nullptr;
    diff::Affine map_fc_;
    diff::Affine x_fc_;
    diff::Mlp prior_head_;
    diff::LstmCell y_enc_;
    diff::Mlp prop_head_;
    diff::LstmCell dec_;
    diff::Affine dec_head_;
};

// Feedback scaling of the previous output point fed to the decoder.
// Deliberately small: behavior modes belong in the latent variable, and
// a strong feedback path lets the decoder resolve them from its own
// samples instead, starving the latent.
inline constexpr double kPrevScale = 0.1;

}  // namespace trajcast::cvae
