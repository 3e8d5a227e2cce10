// trajcast command-line tool: dataset generation, training, prediction,
// evaluation, latent analysis, online benchmarking and plotting.
//
// Exit codes: 0 success, 2 input/configuration error, 3 numerical abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include "trajcast/cvae/analysis.hpp"
#include "trajcast/cvae/model.hpp"
#include "trajcast/cvae/online.hpp"
#include "trajcast/cvae/train.hpp"
#include "trajcast/diff/checkpoint.hpp"
#include "trajcast/io/dataset_io.hpp"
#include "trajcast/io/keyvalues.hpp"
#include "trajcast/io/svg.hpp"
#include "trajcast/kernels/kernels.hpp"
#include "trajcast/metrics/metrics.hpp"
#include "trajcast/synth/synthgen.hpp"

using namespace trajcast;
using json = nlohmann::ordered_json;

namespace {

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// a run is pinned by its config text, seed and command line
std::string runconfig_hash(const std::string& config_text, uint64_t seed, const std::string& extra) {
    uint64_t h = fnv1a(config_text);
    h = fnv1a(extra, h);
    h = fnv1a(&seed, sizeof(seed), h);
    return hex64(h);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw InputError("cannot open for writing: " + path);
    os << text;
    if (!os) throw InputError("write failed: " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("cannot open: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

io::KeyValues load_config_or_empty(const std::string& path) {
    if (path.empty()) return {};
    return io::KeyValues::load_file(path);
}

// ------------------------------------------------------------ generate

Dataset generate_dataset(const std::string& kind, const io::KeyValues& kv, uint64_t seed,
                         int count) {
    Dataset ds;
    if (kind == "weave") {
        synth::WeaveParams p;
        p.v0_a = kv.get_num("weave_v0_a", p.v0_a);
        p.v0_b = kv.get_num("weave_v0_b", p.v0_b);
        p.x_gap0 = kv.get_num("weave_x_gap", p.x_gap0);
        p.accel_noise = kv.get_num("weave_accel_noise", p.accel_noise);
        p.lateral_noise = kv.get_num("weave_lateral_noise", p.lateral_noise);
        p.duration = kv.get_num("weave_duration", p.duration);
        ds.dt = p.dt;
        for (int i = 0; i < count; ++i)
            ds.scenes.push_back(synth::gen_traffic_weave(p, seed + static_cast<uint64_t>(i), i));
    } else if (kind == "crossing4") {
        // robot crosses the corridor; the human picks one of four exits
        synth::SocialForcesParams p;
        p.duration = kv.get_num("ped_duration", 16.0);
        p.starts = {{0.0, -6.0}, {-6.0, 0.0}};
        p.goals = {{0.0, 6.0}, {6.0, 0.0}};
        p.goal_choices = {{}, {{6.0, 3.0}, {6.0, 1.0}, {6.0, -1.0}, {6.0, -3.0}}};
        ds.dt = p.dt;
        for (int i = 0; i < count; ++i)
            ds.scenes.push_back(synth::gen_social_forces(p, seed + static_cast<uint64_t>(i), i));
    } else if (kind == "pedestrians") {
        const int n = kv.get_int("ped_n", 4);
        synth::SocialForcesParams p;
        p.duration = kv.get_num("ped_duration", 20.0);
        ds.dt = p.dt;
        for (int i = 0; i < count; ++i) {
            Rng layout(seed + static_cast<uint64_t>(i));
            p.starts.clear();
            p.goals.clear();
            const double r = 6.0;
            for (int a = 0; a < n; ++a) {
                const double th = 2.0 * M_PI * a / n + layout.uniform(-0.2, 0.2);
                p.starts.push_back({r * std::cos(th), r * std::sin(th)});
                p.goals.push_back({-r * std::cos(th) + layout.uniform(-0.5, 0.5),
                                   -r * std::sin(th) + layout.uniform(-0.5, 0.5)});
            }
            ds.scenes.push_back(synth::gen_social_forces(p, seed + static_cast<uint64_t>(i), i));
        }
    } else if (kind == "idm") {
        synth::IdmParams p;
        p.n_vehicles = kv.get_int("idm_n", p.n_vehicles);
        p.duration = kv.get_num("idm_duration", p.duration);
        if (kv.get_str("idm_leader", "constant") == "brake") p.leader = synth::IdmParams::Leader::brake;
        ds.dt = p.dt;
        for (int i = 0; i < count; ++i)
            ds.scenes.push_back(synth::gen_idm_string(p, seed + static_cast<uint64_t>(i), i));
    } else {
        throw InputError("unknown scenario kind '" + kind +
                         "' (expected weave, crossing4, pedestrians or idm)");
    }
    return ds;
}

int cmd_generate(const std::string& kind, const std::string& config_path, uint64_t seed, int count,
                 const std::string& out) {
    const auto kv = load_config_or_empty(config_path);
    const Dataset ds = generate_dataset(kind, kv, seed, count);
    const auto rc =
        runconfig_hash(kv.serialize(), seed, "generate:" + kind + ":" + std::to_string(count));
    io::save_dataset(ds, out, rc);

    size_t rows = 0;
    std::map<std::string, int> labels;
    for (const auto& sc : ds.scenes) {
        for (const auto& tr : sc.tracks) rows += tr.states.size();
        if (!sc.label.empty()) labels[sc.label]++;
    }
    std::printf("wrote %s: %zu scenes, %zu rows, dt=%.3g\n", out.c_str(), ds.scenes.size(), rows,
                ds.dt);
    for (const auto& [l, n] : labels) std::printf("  label %-10s %d\n", l.c_str(), n);
    return 0;
}

// ------------------------------------------------------------ checkpoint plumbing

struct LoadedModel {
    std::unique_ptr<cvae::Model> model;
    diff::Checkpoint ck;
    uint64_t split_salt = 0;
};

LoadedModel load_model(const std::string& path) {
    LoadedModel lm;
    lm.ck = diff::Checkpoint::load(path);
    if (lm.ck.blobs.count("meta.config") == 0)
        throw InputError("checkpoint has no embedded model config: " + path);
    const auto cfg = cvae::ModelConfig::from_text(lm.ck.blobs.at("meta.config"));
    lm.model = std::make_unique<cvae::Model>(cfg);
    lm.ck.load_params(lm.model->params());
    if (lm.ck.blobs.count("meta.split_salt") > 0)
        lm.split_salt = std::stoull(lm.ck.blobs.at("meta.split_salt"));
    return lm;
}

std::vector<cvae::WindowRef> windows_of_split(const Dataset& ds, const cvae::ModelConfig& cfg,
                                              uint64_t salt, std::optional<Split> split) {
    auto windows = cvae::enumerate_windows(ds, cfg);
    if (!split) return windows;
    std::vector<cvae::WindowRef> out;
    for (const auto& w : windows) {
        const int sid = ds.scenes[static_cast<size_t>(w.scene_index)].scene_id;
        if (scene_split(sid, salt) == *split) out.push_back(w);
    }
    return out;
}

// ------------------------------------------------------------ train

int cmd_train(const std::string& config_path, const std::string& dataset_path,
              const std::string& out, uint64_t seed_flag, bool seed_given,
              const std::string& resume, int stop_after) {
    const auto kv = load_config_or_empty(config_path);
    const auto cfg = cvae::ModelConfig::from_kv(kv);
    auto tc = cvae::TrainConfig::from_kv(kv);
    if (seed_given) tc.seed = seed_flag;
    if (stop_after > 0) tc.stop_after_epoch = stop_after;

    const Dataset ds = io::load_dataset(dataset_path);
    const uint64_t salt = fnv1a("split", tc.seed);
    auto model = std::make_unique<cvae::Model>(cfg);
    Rng rng(tc.seed);

    auto opt = std::unique_ptr<diff::Optimizer>(
        tc.optimizer == "adam"
            ? static_cast<diff::Optimizer*>(new diff::Adam(tc.learning_rate, tc.clip_norm))
            : new diff::Sgd(tc.learning_rate, tc.clip_norm));

    int start_epoch = 0;
    if (!resume.empty()) {
        const auto ck = diff::Checkpoint::load(resume);
        if (ck.blobs.at("meta.config") != cfg.to_text())
            throw InputError("resume checkpoint was trained with a different model config");
        ck.load_params(model->params());
        std::map<std::string, std::vector<double>> st;
        for (const auto& [name, tv] : ck.tensors)
            if (name.rfind("adam.", 0) == 0) st[name] = tv.values;
        opt->load_state(st, static_cast<int64_t>(ck.get_scalar("train.step")));
        start_epoch = static_cast<int>(ck.get_scalar("train.epoch"));
        std::istringstream rs(ck.blobs.at("meta.rng"));
        rng.load(rs);
        std::printf("resuming at epoch %d from %s\n", start_epoch, resume.c_str());
    } else {
        model->init_params(rng);
    }

    const auto rc = runconfig_hash(kv.serialize(), tc.seed, "train:" + dataset_path);
    const std::string log_path = out + ".log";
    std::ofstream log(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw InputError("cannot open training log: " + log_path);
    log << "# trajcast training log, runconfig=" << rc << "\n";
    log << "# epoch train_elbo_loss train_kl kl_weight val_mll\n";

    const auto train_w = windows_of_split(ds, cfg, salt, Split::train);
    const auto val_w = windows_of_split(ds, cfg, salt, Split::val);
    if (train_w.empty()) throw InputError("training split is empty");
    std::printf("windows: %zu train, %zu val; params: %zu scalars; kernels: %s\n", train_w.size(),
                val_w.size(), model->params().scalar_count(), kernels::backend_name());

    auto save_checkpoint = [&](int next_epoch) {
        diff::Checkpoint ck;
        ck.store_params(model->params());
        for (const auto& [name, vals] : opt->state())
            ck.tensors[name] =
                diff::Checkpoint::Tensor{diff::Shape{1, static_cast<int>(vals.size())}, vals};
        ck.set_scalar("train.epoch", next_epoch);
        ck.set_scalar("train.step", static_cast<double>(opt->step_count()));
        ck.blobs["meta.config"] = cfg.to_text();
        ck.blobs["meta.train"] = tc.to_kv().serialize();
        ck.blobs["meta.split_salt"] = std::to_string(salt);
        ck.blobs["meta.runconfig"] = rc;
        std::ostringstream rs;
        rng.save(rs);
        ck.blobs["meta.rng"] = rs.str();
        ck.save(out);
    };

    try {
        const auto result = cvae::train_model(
            *model, *opt, ds, train_w, val_w, tc, rng,
            [&](const cvae::EpochLog& el) {
                std::printf("epoch %3d  loss %9.4f  kl %7.4f  klw %4.2f  val_mll %9.4f\n", el.epoch,
                            el.train_loss, el.train_kl, el.kl_weight, el.val_mll);
                std::fflush(stdout);
                log << el.epoch << " " << el.train_loss << " " << el.train_kl << " " << el.kl_weight
                    << " " << el.val_mll << "\n";
                log.flush();
                save_checkpoint(el.epoch + 1);
            },
            start_epoch);
        // final save carries the best-validation parameters
        save_checkpoint(result.log.empty() ? start_epoch : result.log.back().epoch + 1);
        std::printf("done: best epoch %d, best val_mll %.4f%s\n", result.best_epoch,
                    result.best_val_mll, result.early_stopped ? " (early stop)" : "");
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical abort: %s\nlast-good checkpoint retained at %s\n", e.what(),
                     out.c_str());
        return 3;
    }
    return 0;
}

// ------------------------------------------------------------ predict

std::vector<AgentState> load_robot_future(const std::string& path, int horizon) {
    const auto text = read_text(path);
    std::istringstream is(text);
    std::string line;
    std::vector<AgentState> out;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        AgentState s;
        if (!(ls >> s.pos[0] >> s.pos[1] >> s.vel[0] >> s.vel[1]))
            throw InputError("robot future line " + std::to_string(lineno) +
                             ": expected 'x y vx vy'");
        s.type = AgentType::robot;
        out.push_back(s);
    }
    if (static_cast<int>(out.size()) != horizon)
        throw InputError("robot future has " + std::to_string(out.size()) +
                         " steps, model horizon is " + std::to_string(horizon));
    return out;
}

json traj_json(const std::vector<Vec2>& tr) {
    json arr = json::array();
    for (const auto& p : tr) arr.push_back({p[0], p[1]});
    return arr;
}

int cmd_predict(const std::string& ckpt, const std::string& dataset_path, const std::string& out,
                std::vector<int> scene_ids, int t0_flag, const std::string& robot_future_path,
                const std::string& mode_str, int n_samples, uint64_t seed,
                const std::string& svg_path) {
    auto lm = load_model(ckpt);
    const auto& cfg = lm.model->config();
    const Dataset ds = io::load_dataset(dataset_path);

    cvae::PredictMode mode;
    if (mode_str == "sampled")
        mode = cvae::PredictMode::sampled;
    else if (mode_str == "most-likely")
        mode = cvae::PredictMode::most_likely;
    else if (mode_str == "analytic")
        mode = cvae::PredictMode::analytic;
    else
        throw InputError("unknown prediction mode '" + mode_str + "'");

    std::vector<AgentState> robot_future;
    if (!robot_future_path.empty()) robot_future = load_robot_future(robot_future_path, cfg.horizon);

    if (scene_ids.empty())
        for (const auto& sc : ds.scenes) scene_ids.push_back(sc.scene_id);

    json doc;
    doc["format"] = "trajcast-predictions-v1";
    doc["runconfig"] = runconfig_hash(cfg.to_text(), seed, "predict:" + mode_str);
    doc["mode"] = mode_str;
    doc["dt"] = cfg.dt;
    doc["windows"] = json::array();

    io::SvgPlot plot;
    bool plotted = false;
    Rng rng(seed);

    for (const int sid : scene_ids) {
        const Scene* scene = nullptr;
        for (const auto& sc : ds.scenes)
            if (sc.scene_id == sid) scene = &sc;
        if (scene == nullptr) throw InputError("scene " + std::to_string(sid) + " not in dataset");

        for (const auto& tr : scene->tracks) {
            if (tr.type == AgentType::robot) continue;
            const int t0 = t0_flag >= 0 ? t0_flag : tr.first_t;
            cvae::Example ex;
            try {
                ex = cvae::make_example(ds, *scene, cfg, tr.agent_id, t0, -1,
                                        robot_future.empty() ? nullptr : &robot_future,
                                        /*require_future=*/false);
            } catch (const InputError&) {
                continue;  // window does not fit this track
            }
            Rng wrng =
                rng.fork(static_cast<uint64_t>(sid) * 1000 + static_cast<uint64_t>(tr.agent_id));
            const auto pred = lm.model->predict(ex, mode, n_samples, &wrng);

            json w;
            w["scene"] = sid;
            w["focus"] = tr.agent_id;
            w["t0"] = t0;
            json probs = json::array();
            for (const auto& m : pred.modes) probs.push_back(m.prob);
            w["mode_probs"] = probs;
            if (mode == cvae::PredictMode::sampled) {
                json modes = json::array();
                for (const auto& m : pred.modes) {
                    json sm = json::array();
                    for (const auto& s : m.samples) sm.push_back(traj_json(s));
                    modes.push_back(sm);
                }
                w["samples"] = modes;
            } else if (mode == cvae::PredictMode::most_likely) {
                for (const auto& m : pred.modes)
                    if (!m.mean_traj.empty()) w["trajectory"] = traj_json(m.mean_traj);
            } else {
                json modes = json::array();
                for (const auto& m : pred.modes) {
                    json g;
                    g["prob"] = m.prob;
                    json steps = json::array();
                    for (const auto& s : m.analytic)
                        steps.push_back(
                            {{"mean", {s.mean[0], s.mean[1]}}, {"cov", {s.cov.xx, s.cov.xy, s.cov.yy}}});
                    g["steps"] = steps;
                    modes.push_back(g);
                }
                w["gaussians"] = modes;
            }
            doc["windows"].push_back(w);

            if (!svg_path.empty() && !plotted) {
                // history (solid black), ground truth (dashed grey), robot
                // future (dashed blue), prediction fans colored by mode
                const int stride = cvae::model_stride(ds.dt, cfg);
                std::vector<Vec2> hist;
                for (int k = 0; k < cfg.history; ++k) hist.push_back(tr.at(t0 + k * stride).pos);
                plot.polyline(hist, "black", 2.0);
                std::vector<Vec2> gt;
                for (int k = 1; k <= cfg.horizon; ++k) {
                    const int tk = t0 + (cfg.history - 1 + k) * stride;
                    if (tr.present_at(tk)) gt.push_back(tr.at(tk).pos);
                }
                if (!gt.empty()) plot.polyline(gt, "#555555", 1.5, true);
                const auto* robot = scene->robot_track();
                if (robot != nullptr) {
                    std::vector<Vec2> rf;
                    for (int k = 1; k <= cfg.horizon; ++k) {
                        const int tk = t0 + (cfg.history - 1 + k) * stride;
                        if (robot->present_at(tk)) rf.push_back(robot->at(tk).pos);
                    }
                    if (!rf.empty()) plot.polyline(rf, "#1f4fd8", 1.5, true);
                }
                for (size_t z = 0; z < pred.modes.size(); ++z) {
                    const auto color = io::SvgPlot::mode_color(static_cast<int>(z));
                    for (const auto& s : pred.modes[z].samples) plot.polyline(s, color, 0.8);
                    if (!pred.modes[z].mean_traj.empty())
                        plot.polyline(pred.modes[z].mean_traj, color, 1.5);
                    for (const auto& g : pred.modes[z].analytic) plot.ellipse(g.mean, g.cov, color);
                }
                plotted = true;
            }
        }
    }

    write_text(out, doc.dump(1) + "\n");
    if (!svg_path.empty())
        write_text(svg_path, plot.render(900, "trajcast predictions, runconfig=" +
                                                  doc["runconfig"].get<std::string>()));
    std::printf("wrote %s (%zu windows)\n", out.c_str(), doc["windows"].size());
    return 0;
}

// ------------------------------------------------------------ evaluate

struct WindowScores {
    double bon_ade = 0, bon_fde = 0, kde = 0, analytic = 0, cv_ade = 0, cv_fde = 0, cv_nll = 0;
    double ms = 0;
    bool kde_floored = false;
};

int cmd_evaluate(const std::string& ckpt, const std::string& dataset_path, const std::string& out,
                 std::string metrics_csv, int n_bon, int n_kde, const std::string& split_str,
                 bool allow_train, int workers, uint64_t seed) {
    auto lm = load_model(ckpt);
    const auto& cfg = lm.model->config();
    const Dataset ds = io::load_dataset(dataset_path);

    Split split = Split::test;
    if (split_str == "train")
        split = Split::train;
    else if (split_str == "val")
        split = Split::val;
    else if (split_str != "test")
        throw InputError("unknown split '" + split_str + "'");
    if (split == Split::train && !allow_train)
        throw InputError(
            "refusing to evaluate on the training split (pass --allow-train to override)");

    std::vector<std::string> wanted;
    {
        std::stringstream ss(metrics_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) wanted.push_back(tok);
    }
    auto want = [&](const std::string& m) {
        for (const auto& w : wanted)
            if (w == m || w == "all") return true;
        return false;
    };

    const auto windows = windows_of_split(ds, cfg, lm.split_salt, split);
    if (windows.empty()) throw InputError("no windows in the requested split");

    // constant-velocity residual scale fitted on the training split
    double cv_sigma2 = 0.25;
    {
        const auto train_w = windows_of_split(ds, cfg, lm.split_salt, Split::train);
        double acc = 0.0;
        size_t cnt = 0;
        for (size_t i = 0; i < train_w.size() && i < 2000; ++i) {
            const auto& w = train_w[i];
            const Scene& sc = ds.scenes[static_cast<size_t>(w.scene_index)];
            const auto ex = cvae::make_example(ds, sc, cfg, w.focus_id, w.t0);
            const int stride = cvae::model_stride(ds.dt, cfg);
            std::vector<AgentState> hist;
            for (int k = 0; k < cfg.history; ++k)
                hist.push_back(sc.find_track(w.focus_id)->at(w.t0 + k * stride));
            const auto cv = metrics::const_velocity_baseline(hist, cfg.horizon, cfg.dt);
            for (size_t k = 0; k < cv.size(); ++k) {
                const Vec2 r = cv[k] - ex.gt_future[k];
                acc += 0.5 * (r[0] * r[0] + r[1] * r[1]);
                ++cnt;
            }
        }
        if (cnt > 0) cv_sigma2 = std::max(1e-6, acc / static_cast<double>(cnt));
    }

    std::vector<WindowScores> scores(windows.size());
    std::atomic<size_t> next{0};
    const int nw = std::max(1, workers);
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= windows.size()) break;
            const auto& w = windows[i];
            const Scene& sc = ds.scenes[static_cast<size_t>(w.scene_index)];
            const auto ex = cvae::make_example(ds, sc, cfg, w.focus_id, w.t0);
            Rng wrng = Rng(seed).fork(i);
            WindowScores& s = scores[i];

            const auto start = std::chrono::steady_clock::now();
            const auto bon_samples = lm.model->sample_mixture(ex, n_bon, wrng);
            s.bon_ade = metrics::best_of_n(bon_samples, ex.gt_future, metrics::Displacement::ade);
            s.bon_fde = metrics::best_of_n(bon_samples, ex.gt_future, metrics::Displacement::fde);
            if (want("kde_nll")) {
                const auto kde_samples = lm.model->sample_mixture(ex, n_kde, wrng);
                const auto kr = metrics::kde_nll(kde_samples, ex.gt_future);
                s.kde = kr.nll;
                s.kde_floored = kr.floored;
            }
            if (want("analytic_nll") && cfg.mixture_m == 1) {
                const auto pred = lm.model->predict(ex, cvae::PredictMode::analytic, 0, nullptr);
                std::vector<metrics::WeightedGaussTraj> modes;
                for (const auto& m : pred.modes) modes.push_back({m.prob, m.analytic});
                s.analytic = metrics::analytic_nll(modes, ex.gt_future);
            }
            s.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                       .count();

            const int stride = cvae::model_stride(ds.dt, cfg);
            std::vector<AgentState> hist;
            for (int k = 0; k < cfg.history; ++k)
                hist.push_back(sc.find_track(w.focus_id)->at(w.t0 + k * stride));
            const auto cv = metrics::const_velocity_baseline(hist, cfg.horizon, cfg.dt);
            s.cv_ade = metrics::ade(cv, ex.gt_future);
            s.cv_fde = metrics::fde(cv, ex.gt_future);
            dyn::GaussianTrajectory cv_traj;
            for (const auto& p : cv) cv_traj.push_back({p, {cv_sigma2, 0.0, cv_sigma2}});
            s.cv_nll = metrics::analytic_nll({{1.0, cv_traj}}, ex.gt_future);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < nw; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    metrics::MetricReport rep;
    auto mean_of = [&](auto field) {
        double acc = 0.0;
        for (const auto& s : scores) acc += s.*field;
        return acc / static_cast<double>(scores.size());
    };
    if (want("bon_ade")) rep.set("bon_ade", mean_of(&WindowScores::bon_ade));
    if (want("bon_fde")) rep.set("bon_fde", mean_of(&WindowScores::bon_fde));
    if (want("kde_nll")) rep.set("kde_nll", mean_of(&WindowScores::kde));
    if (want("analytic_nll") && cfg.mixture_m == 1)
        rep.set("analytic_nll", mean_of(&WindowScores::analytic));
    if (want("cv_ade")) rep.set("cv_ade", mean_of(&WindowScores::cv_ade));
    if (want("cv_fde")) rep.set("cv_fde", mean_of(&WindowScores::cv_fde));
    if (want("cv_nll")) rep.set("cv_nll", mean_of(&WindowScores::cv_nll));

    if (want("mode_recovery")) {
        std::vector<int> calib_z, test_z;
        std::vector<std::string> calib_l, test_l;
        const auto calib_w = windows_of_split(ds, cfg, lm.split_salt, Split::val);
        for (const auto& w : calib_w) {
            const Scene& sc = ds.scenes[static_cast<size_t>(w.scene_index)];
            if (sc.label.empty()) throw InputError("mode_recovery requested on unlabeled data");
            const auto ex = cvae::make_example(ds, sc, cfg, w.focus_id, w.t0);
            const auto post = lm.model->posterior_probs(ex);
            calib_z.push_back(
                static_cast<int>(std::max_element(post.begin(), post.end()) - post.begin()));
            calib_l.push_back(sc.label);
        }
        for (const auto& w : windows) {
            const Scene& sc = ds.scenes[static_cast<size_t>(w.scene_index)];
            if (sc.label.empty()) throw InputError("mode_recovery requested on unlabeled data");
            const auto ex = cvae::make_example(ds, sc, cfg, w.focus_id, w.t0);
            const auto post = lm.model->posterior_probs(ex);
            test_z.push_back(
                static_cast<int>(std::max_element(post.begin(), post.end()) - post.begin()));
            test_l.push_back(sc.label);
        }
        rep.set("mode_recovery", metrics::mode_recovery(calib_z, calib_l, test_z, test_l).agreement);
    }

    rep.set("n_windows", static_cast<double>(windows.size()));
    rep.set("n_bon", n_bon);
    rep.set("n_kde", n_kde);
    rep.set("runtime_ms_per_prediction", mean_of(&WindowScores::ms));
    for (const auto& s : scores)
        if (s.kde_floored) {
            rep.flags.push_back("kde log-density floored on at least one window");
            break;
        }

    const auto rc = runconfig_hash(cfg.to_text(), seed, "evaluate:" + split_str);
    write_text(out, rep.to_keyvalues(rc));
    std::fputs(rep.to_table().c_str(), stdout);
    return 0;
}

// ------------------------------------------------------------ analyze-latent

int cmd_analyze_latent(const std::string& ckpt, const std::string& dataset_path,
                       const std::string& out, const std::string& split_str,
                       const std::string& keep_csv, const std::string& prune_out) {
    auto lm = load_model(ckpt);
    const Dataset ds = io::load_dataset(dataset_path);
    std::optional<Split> split;
    if (split_str == "train")
        split = Split::train;
    else if (split_str == "val")
        split = Split::val;
    else if (split_str == "test")
        split = Split::test;
    else if (split_str != "all")
        throw InputError("unknown split '" + split_str + "'");

    const auto windows = windows_of_split(ds, lm.model->config(), lm.split_salt, split);
    const auto usage = cvae::mode_usage(*lm.model, ds, windows);

    std::string txt = "# trajcast latent usage over " + std::to_string(windows.size()) + " windows\n";
    double cum = 0.0;
    for (int z : usage.by_mass) {
        cum += usage.mass[static_cast<size_t>(z)];
        char buf[96];
        std::snprintf(buf, sizeof(buf), "mode %2d  mass %.6f  cumulative %.6f\n", z,
                      usage.mass[static_cast<size_t>(z)], cum);
        txt += buf;
    }
    txt += "cover_99 =";
    for (int z : usage.cover_99) txt += " " + std::to_string(z);
    txt += "\n";
    write_text(out, txt);
    std::fputs(txt.c_str(), stdout);

    if (!prune_out.empty()) {
        std::vector<int> keep;
        if (keep_csv.empty()) {
            keep = usage.cover_99;
        } else {
            std::stringstream ss(keep_csv);
            std::string tok;
            while (std::getline(ss, tok, ',')) keep.push_back(std::stoi(tok));
        }
        auto pruned = cvae::prune_modes(*lm.model, keep);
        diff::Checkpoint ck;
        ck.store_params(pruned->params());
        ck.blobs["meta.config"] = pruned->config().to_text();
        ck.blobs["meta.split_salt"] = std::to_string(lm.split_salt);
        ck.save(prune_out);
        std::printf("pruned %d -> %zu modes, wrote %s\n", lm.model->config().latent_k, keep.size(),
                    prune_out.c_str());
    }
    return 0;
}

// ------------------------------------------------------------ bench-online

int cmd_bench_online(const std::string& ckpt, const std::string& dataset_path,
                     const std::string& out, int max_scenes) {
    auto lm = load_model(ckpt);
    const auto& cfg = lm.model->config();
    const Dataset ds = io::load_dataset(dataset_path);
    const int stride = cvae::model_stride(ds.dt, cfg);

    using clock = std::chrono::steady_clock;
    std::vector<double> inc_graph, inc_encode, inc_predict, full_ms;
    double worst_rel = 0.0;
    int scenes_done = 0;

    for (const auto& sc : ds.scenes) {
        if (scenes_done >= max_scenes) break;
        const AgentTrack* focus = nullptr;
        for (const auto& tr : sc.tracks)
            if (tr.type != AgentType::robot) focus = &tr;
        const AgentTrack* robot = sc.robot_track();
        if (focus == nullptr || robot == nullptr) continue;
        const int steps = (focus->last_t() - focus->first_t) / stride + 1 - cfg.horizon;
        if (steps < 2) continue;

        cvae::OnlinePredictor online(*lm.model, focus->agent_id);
        double g_ms = 0, e_ms = 0;
        for (int k = 0; k < steps; ++k) {
            std::vector<AgentState> states;
            for (const auto& tr : sc.tracks)
                if (tr.present_at(focus->first_t + k * stride))
                    states.push_back(tr.at(focus->first_t + k * stride));
            const auto t0 = clock::now();
            online.observe(states, k);
            const auto t1 = clock::now();
            if (k == steps - 1)
                e_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            (void)g_ms;
        }
        std::vector<AgentState> robot_future;
        for (int k = 1; k <= cfg.horizon; ++k)
            robot_future.push_back(robot->at(focus->first_t + (steps - 1 + k) * stride));

        const auto t2 = clock::now();
        const auto online_x = online.condition_values(robot_future);
        const auto t3 = clock::now();
        const auto pred = online.predict(robot_future, cvae::PredictMode::most_likely, 0, nullptr);
        const auto t4 = clock::now();
        inc_encode.push_back(e_ms + std::chrono::duration<double, std::milli>(t3 - t2).count());
        inc_predict.push_back(std::chrono::duration<double, std::milli>(t4 - t3).count());

        const auto t5 = clock::now();
        const auto full_ex =
            cvae::make_example(ds, sc, cfg, focus->agent_id, focus->first_t, steps, nullptr, false);
        diff::Tape tape(1 << 15);
        const auto full_x = tape.val(lm.model->encode_condition(tape, full_ex));
        const auto t6 = clock::now();
        full_ms.push_back(std::chrono::duration<double, std::milli>(t6 - t5).count());

        for (size_t i = 0; i < full_x.size(); ++i) {
            const double rel =
                std::fabs(online_x[i] - full_x[i]) / std::max(1.0, std::fabs(full_x[i]));
            worst_rel = std::max(worst_rel, rel);
        }
        (void)pred;
        ++scenes_done;
    }
    if (scenes_done == 0) throw InputError("no replayable scenes in the dataset");

    auto stats = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        const double p95 = v[static_cast<size_t>(0.95 * (v.size() - 1))];
        return std::make_pair(mean, p95);
    };
    const auto [enc_mean, enc_p95] = stats(inc_encode);
    const auto [prd_mean, prd_p95] = stats(inc_predict);
    const auto [full_mean, full_p95] = stats(full_ms);

    metrics::MetricReport rep;
    rep.set("scenes", scenes_done);
    rep.set("incremental_update_ms_mean", enc_mean);
    rep.set("incremental_update_ms_p95", enc_p95);
    rep.set("predict_ms_mean", prd_mean);
    rep.set("predict_ms_p95", prd_p95);
    rep.set("full_reencode_ms_mean", full_mean);
    rep.set("full_reencode_ms_p95", full_p95);
    rep.set("speedup_mean", full_mean / std::max(1e-9, enc_mean));
    rep.set("max_rel_difference", worst_rel);
    write_text(out, rep.to_keyvalues(runconfig_hash(cfg.to_text(), 0, "bench-online")));
    std::fputs(rep.to_table().c_str(), stdout);

    if (worst_rel > 1e-6) {
        std::fprintf(stderr, "incremental/full disagreement %.3g exceeds 1e-6\n", worst_rel);
        return 3;
    }
    return 0;
}

// ------------------------------------------------------------ plot

int cmd_plot(const std::string& dataset_path, int scene_id, const std::string& out) {
    const Dataset ds = io::load_dataset(dataset_path);
    const Scene* scene = nullptr;
    for (const auto& sc : ds.scenes)
        if (sc.scene_id == scene_id) scene = &sc;
    if (scene == nullptr) throw InputError("scene " + std::to_string(scene_id) + " not in dataset");

    io::SvgPlot plot;
    int idx = 0;
    for (const auto& tr : scene->tracks) {
        std::vector<Vec2> pts;
        for (const auto& s : tr.states) pts.push_back(s.pos);
        const std::string color =
            tr.type == AgentType::robot ? "#1f4fd8" : io::SvgPlot::mode_color(idx++);
        plot.polyline(pts, color, tr.type == AgentType::robot ? 2.0 : 1.5);
        plot.circle(pts.front(), 0.15, color);
    }
    write_text(out, plot.render(900, "trajcast scene " + std::to_string(scene_id) +
                                         (scene->label.empty() ? "" : " label=" + scene->label)));
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    kernels::select_auto();
    CLI::App app{"trajcast: multimodal, interaction-aware trajectory forecasting"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    std::string g_kind = "weave", g_config, g_out = "dataset.txt";
    uint64_t g_seed = 1;
    int g_count = 100;
    gen->add_option("--kind", g_kind, "weave | crossing4 | pedestrians | idm");
    gen->add_option("--config", g_config, "scenario parameter overrides (key = value)");
    gen->add_option("--seed", g_seed, "base seed; scene i uses seed + i");
    gen->add_option("--count", g_count, "number of episodes");
    gen->add_option("--out", g_out, "output dataset path")->required();

    auto* trn = app.add_subcommand("train", "train a model");
    std::string t_config, t_dataset, t_out = "model.ckpt", t_resume;
    uint64_t t_seed = 1;
    bool t_seed_given = false;
    int t_stop_after = 0;
    trn->add_option("--config", t_config, "model + training config file");
    trn->add_option("--dataset", t_dataset, "training dataset")->required();
    trn->add_option("--out", t_out, "checkpoint output path");
    trn->add_option("--resume", t_resume, "resume from an earlier checkpoint");
    trn->add_option("--seed", t_seed, "training seed (overrides config)")
        ->each([&](const std::string&) { t_seed_given = true; });
    trn->add_option("--stop-after", t_stop_after,
                    "pause after this epoch (schedule unchanged; resume later)");

    auto* prd = app.add_subcommand("predict", "predict futures for dataset scenes");
    std::string p_ckpt, p_dataset, p_out = "predictions.json", p_robot, p_mode = "sampled", p_svg;
    std::vector<int> p_scenes;
    int p_n = 20, p_t0 = -1;
    uint64_t p_seed = 1;
    prd->add_option("--checkpoint", p_ckpt)->required();
    prd->add_option("--dataset", p_dataset)->required();
    prd->add_option("--out", p_out);
    prd->add_option("--scene", p_scenes, "scene ids (default: all)");
    prd->add_option("--t0", p_t0, "window start timestep (default: track start)");
    prd->add_option("--robot-future", p_robot, "candidate robot future file (x y vx vy per line)");
    prd->add_option("--mode", p_mode, "sampled | most-likely | analytic");
    prd->add_option("--n-samples", p_n, "samples per latent mode (sampled mode)");
    prd->add_option("--seed", p_seed);
    prd->add_option("--svg", p_svg, "also write an SVG of the first window");

    auto* evl = app.add_subcommand("evaluate", "run the metric suite on a held-out split");
    std::string e_ckpt, e_dataset, e_out = "report.txt", e_metrics = "all", e_split = "test";
    int e_bon = 20, e_kde = 200, e_workers = 1;
    bool e_allow_train = false;
    uint64_t e_seed = 1;
    evl->add_option("--checkpoint", e_ckpt)->required();
    evl->add_option("--dataset", e_dataset)->required();
    evl->add_option("--out", e_out);
    evl->add_option("--metrics", e_metrics,
                    "comma list: bon_ade,bon_fde,kde_nll,analytic_nll,cv_ade,cv_fde,cv_nll,"
                    "mode_recovery or 'all'");
    evl->add_option("--n-samples", e_bon, "best-of-N sampling budget");
    evl->add_option("--kde-samples", e_kde, "samples for the KDE likelihood");
    evl->add_option("--split", e_split, "test | val | train");
    evl->add_flag("--allow-train", e_allow_train, "permit evaluating on the training split");
    evl->add_option("--workers", e_workers, "parallel scene workers");
    evl->add_option("--seed", e_seed);

    auto* anl = app.add_subcommand("analyze-latent", "latent mode usage and pruning");
    std::string a_ckpt, a_dataset, a_out = "latent.txt", a_split = "val", a_keep, a_prune;
    anl->add_option("--checkpoint", a_ckpt)->required();
    anl->add_option("--dataset", a_dataset)->required();
    anl->add_option("--out", a_out);
    anl->add_option("--split", a_split, "train | val | test | all");
    anl->add_option("--keep", a_keep, "comma list of modes to keep when pruning");
    anl->add_option("--prune-out", a_prune, "write a pruned checkpoint here");

    auto* bch = app.add_subcommand("bench-online", "incremental vs full re-encode benchmark");
    std::string b_ckpt, b_dataset, b_out = "bench.txt";
    int b_scenes = 100;
    bch->add_option("--checkpoint", b_ckpt)->required();
    bch->add_option("--dataset", b_dataset)->required();
    bch->add_option("--out", b_out);
    bch->add_option("--scenes", b_scenes, "max scenes to replay");

    auto* plt = app.add_subcommand("plot", "render a scene to SVG");
    std::string l_dataset, l_out = "scene.svg";
    int l_scene = 0;
    plt->add_option("--dataset", l_dataset)->required();
    plt->add_option("--scene", l_scene);
    plt->add_option("--out", l_out);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_generate(g_kind, g_config, g_seed, g_count, g_out);
        if (trn->parsed())
            return cmd_train(t_config, t_dataset, t_out, t_seed, t_seed_given, t_resume,
                             t_stop_after);
        if (prd->parsed())
            return cmd_predict(p_ckpt, p_dataset, p_out, p_scenes, p_t0, p_robot, p_mode, p_n,
                               p_seed, p_svg);
        if (evl->parsed())
            return cmd_evaluate(e_ckpt, e_dataset, e_out, e_metrics, e_bon, e_kde, e_split,
                                e_allow_train, e_workers, e_seed);
        if (anl->parsed())
            return cmd_analyze_latent(a_ckpt, a_dataset, a_out, a_split, a_keep, a_prune);
        if (bch->parsed()) return cmd_bench_online(b_ckpt, b_dataset, b_out, b_scenes);
        if (plt->parsed()) return cmd_plot(l_dataset, l_scene, l_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical abort: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
