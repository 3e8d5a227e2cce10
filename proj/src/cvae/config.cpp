#include "trajcast/cvae/config.hpp"

namespace trajcast::cvae {

const char* to_string(OutputSpace s) {
    switch (s) {
        case OutputSpace::displacement: return "displacement";
        case OutputSpace::si_velocity: return "si_velocity";
        case OutputSpace::unicycle_control: return "unicycle_control";
    }
    return "?";
}

OutputSpace output_space_from_string(const std::string& s) {
    if (s == "displacement") return OutputSpace::displacement;
    if (s == "si_velocity") return OutputSpace::si_velocity;
    if (s == "unicycle_control") return OutputSpace::unicycle_control;
    throw ConfigError("unknown output space: '" + s + "'");
}

io::KeyValues ModelConfig::to_kv() const {
    io::KeyValues kv;
    kv.set_int("latent_k", latent_k);
    kv.set_int("mixture_m", mixture_m);
    kv.set_int("horizon", horizon);
    kv.set_int("history", history);
    kv.set_num("dt", dt);
    kv.set_str("output", to_string(output));
    kv.set_bool("condition_on_robot", condition_on_robot);
    kv.set_int("hidden_history", hidden_history);
    kv.set_int("hidden_edge", hidden_edge);
    kv.set_int("hidden_future", hidden_future);
    kv.set_int("hidden_decoder", hidden_decoder);
    kv.set_int("x_summary", x_summary);
    kv.set_int("head_hidden", head_hidden);
    kv.set_int("proposal_hidden", proposal_hidden);
    kv.set_bool("use_map", use_map);
    kv.set_int("map_size", map_size);
    kv.set_num("map_cell", map_cell);
    kv.set_int("map_feat", map_feat);
    kv.set_num("thresh_ped", thresh_ped);
    kv.set_num("thresh_vehicle", thresh_vehicle);
    kv.set_int("ramp_window", ramp_window);
    kv.set_num("pos_scale", pos_scale);
    kv.set_num("vel_scale", vel_scale);
    kv.set_num("v_max", limits.v_max);
    kv.set_num("omega_max", limits.omega_max);
    kv.set_num("a_max", limits.a_max);
    kv.set_num("pos_floor", pos_floor);
    return kv;
}

ModelConfig ModelConfig::from_kv(const io::KeyValues& kv) {
    ModelConfig c;
    c.latent_k = kv.get_int("latent_k", c.latent_k);
    c.mixture_m = kv.get_int("mixture_m", c.mixture_m);
    c.horizon = kv.get_int("horizon", c.horizon);
    c.history = kv.get_int("history", c.history);
    c.dt = kv.get_num("dt", c.dt);
    c.output = output_space_from_string(kv.get_str("output", to_string(c.output)));
    c.condition_on_robot = kv.get_bool("condition_on_robot", c.condition_on_robot);
    c.hidden_history = kv.get_int("hidden_history", c.hidden_history);
    c.hidden_edge = kv.get_int("hidden_edge", c.hidden_edge);
    c.hidden_future = kv.get_int("hidden_future", c.hidden_future);
    c.hidden_decoder = kv.get_int("hidden_decoder", c.hidden_decoder);
    c.x_summary = kv.get_int("x_summary", c.x_summary);
    c.head_hidden = kv.get_int("head_hidden", c.head_hidden);
    c.proposal_hidden = kv.get_int("proposal_hidden", c.proposal_hidden);
    c.use_map = kv.get_bool("use_map", c.use_map);
    c.map_size = kv.get_int("map_size", c.map_size);
    c.map_cell = kv.get_num("map_cell", c.map_cell);
    c.map_feat = kv.get_int("map_feat", c.map_feat);
    c.thresh_ped = kv.get_num("thresh_ped", c.thresh_ped);
    c.thresh_vehicle = kv.get_num("thresh_vehicle", c.thresh_vehicle);
    c.ramp_window = kv.get_int("ramp_window", c.ramp_window);
    c.pos_scale = kv.get_num("pos_scale", c.pos_scale);
    c.vel_scale = kv.get_num("vel_scale", c.vel_scale);
    c.limits.v_max = kv.get_num("v_max", c.limits.v_max);
    c.limits.omega_max = kv.get_num("omega_max", c.limits.omega_max);
    c.limits.a_max = kv.get_num("a_max", c.limits.a_max);
    c.pos_floor = kv.get_num("pos_floor", c.pos_floor);

    if (c.latent_k < 1) throw ConfigError("latent_k must be >= 1");
    if (c.mixture_m < 1) throw ConfigError("mixture_m must be >= 1");
    if (c.mixture_m != 1 && c.output != OutputSpace::displacement)
        throw ConfigError("dynamics-integrated output spaces require mixture_m = 1");
    if (c.horizon < 1 || c.history < 1) throw ConfigError("horizon and history must be >= 1");
    if (c.dt <= 0.0) throw ConfigError("dt must be positive");
    if (c.ramp_window < 1) throw ConfigError("ramp_window must be >= 1");
    return c;
}

io::KeyValues TrainConfig::to_kv() const {
    io::KeyValues kv;
    kv.set_int("train_epochs", epochs);
    kv.set_int("train_batch", batch);
    kv.set_num("train_lr", learning_rate);
    kv.set_num("train_clip", clip_norm);
    kv.set_num("train_kl_anneal_frac", kl_anneal_frac);
    kv.set_int("train_patience", patience);
    kv.set_int("train_seed", static_cast<int>(seed));
    kv.set_str("train_optimizer", optimizer);
    return kv;
}

TrainConfig TrainConfig::from_kv(const io::KeyValues& kv) {
    TrainConfig c;
    c.epochs = kv.get_int("train_epochs", c.epochs);
    c.batch = kv.get_int("train_batch", c.batch);
    c.learning_rate = kv.get_num("train_lr", c.learning_rate);
    c.clip_norm = kv.get_num("train_clip", c.clip_norm);
    c.kl_anneal_frac = kv.get_num("train_kl_anneal_frac", c.kl_anneal_frac);
    c.patience = kv.get_int("train_patience", c.patience);
    c.seed = static_cast<uint64_t>(kv.get_int("train_seed", static_cast<int>(c.seed)));
    c.optimizer = kv.get_str("train_optimizer", c.optimizer);
    if (c.epochs < 1 || c.batch < 1) throw ConfigError("bad training schedule");
    if (c.optimizer != "adam" && c.optimizer != "sgd") throw ConfigError("unknown optimizer");
    return c;
}

}  // namespace trajcast::cvae
