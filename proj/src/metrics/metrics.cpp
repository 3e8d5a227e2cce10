#include "trajcast/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace trajcast::metrics {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double ade(std::span<const Vec2> pred, std::span<const Vec2> gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw InputError("ade: length mismatch or empty input");
    double acc = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) acc += dist(pred[i], gt[i]);
    return acc / static_cast<double>(pred.size());
}

double fde(std::span<const Vec2> pred, std::span<const Vec2> gt) {
    if (pred.size() != gt.size() || pred.empty())
        throw InputError("fde: length mismatch or empty input");
    return dist(pred.back(), gt.back());
}

double best_of_n(const std::vector<std::vector<Vec2>>& samples, std::span<const Vec2> gt,
                 Displacement which) {
    if (samples.empty()) throw InputError("best_of_n: no samples");
    double best = 1e300;
    for (const auto& s : samples) {
        const double v = which == Displacement::ade ? ade(s, gt) : fde(s, gt);
        best = std::min(best, v);
    }
    return best;
}

KdeResult kde_nll(const std::vector<std::vector<Vec2>>& samples, std::span<const Vec2> gt,
                  const KdeOptions& opt) {
    const size_t n = samples.size();
    if (n < 2) throw InputError("kde_nll: need at least two samples per timestep");
    for (const auto& s : samples)
        if (s.size() != gt.size()) throw InputError("kde_nll: sample horizon mismatch");

    KdeResult res;
    double acc = 0.0;
    const double exponent = opt.bandwidth == KdeOptions::Bandwidth::scott ? -1.0 / 6.0 : -0.25;
    const double factor = std::pow(static_cast<double>(n), exponent);
    for (size_t k = 0; k < gt.size(); ++k) {
        Vec2 mean{0, 0};
        for (const auto& s : samples) mean = mean + s[k];
        mean = (1.0 / static_cast<double>(n)) * mean;
        double vx = 0.0, vy = 0.0;
        for (const auto& s : samples) {
            vx += (s[k][0] - mean[0]) * (s[k][0] - mean[0]);
            vy += (s[k][1] - mean[1]) * (s[k][1] - mean[1]);
        }
        vx /= static_cast<double>(n - 1);
        vy /= static_cast<double>(n - 1);
        const double hx = std::sqrt(vx) * factor;
        const double hy = std::sqrt(vy) * factor;

        double logdens;
        if (hx < 1e-12 || hy < 1e-12) {
            logdens = opt.floor_nats;  // degenerate cloud
            res.floored = true;
        } else {
            // log of the mean kernel value, max-shifted for stability
            double mx = -1e300;
            std::vector<double> expo(n);
            for (size_t i = 0; i < n; ++i) {
                const double dx = (gt[k][0] - samples[i][k][0]) / hx;
                const double dy = (gt[k][1] - samples[i][k][1]) / hy;
                expo[i] = -0.5 * (dx * dx + dy * dy);
                mx = std::max(mx, expo[i]);
            }
            double sum = 0.0;
            for (double e : expo) sum += std::exp(e - mx);
            logdens = mx + std::log(sum) - std::log(static_cast<double>(n)) - kLog2Pi -
                      std::log(hx) - std::log(hy);
            if (logdens < opt.floor_nats) {
                logdens = opt.floor_nats;
                res.floored = true;
            }
        }
        acc += logdens;
    }
    res.nll = -acc / static_cast<double>(gt.size());
    return res;
}

double analytic_nll(const std::vector<WeightedGaussTraj>& modes, std::span<const Vec2> gt) {
    if (modes.empty()) throw InputError("analytic_nll: no modes");
    for (const auto& m : modes)
        if (m.traj.size() != gt.size()) throw InputError("analytic_nll: horizon mismatch");

    double acc = 0.0;
    for (size_t k = 0; k < gt.size(); ++k) {
        double mx = -1e300;
        std::vector<double> terms;
        terms.reserve(modes.size());
        for (const auto& m : modes) {
            const auto& g = m.traj[k];
            const double det = g.cov.det();
            if (!(det > 0.0) || !(g.cov.xx > 0.0))
                throw InputError("analytic_nll: covariance not positive definite");
            const double dx = gt[k][0] - g.mean[0], dy = gt[k][1] - g.mean[1];
            const double q =
                (g.cov.yy * dx * dx - 2.0 * g.cov.xy * dx * dy + g.cov.xx * dy * dy) / det;
            const double logn = -kLog2Pi - 0.5 * std::log(det) - 0.5 * q;
            const double term = (m.prob > 0.0 ? std::log(m.prob) : -1e300) + logn;
            terms.push_back(term);
            mx = std::max(mx, term);
        }
        double sum = 0.0;
        for (double t : terms) sum += std::exp(t - mx);
        acc += mx + std::log(sum);
    }
    return -acc / static_cast<double>(gt.size());
}

std::vector<Vec2> const_velocity_baseline(std::span<const AgentState> history, int horizon,
                                          double dt) {
    if (history.size() < 2) throw InputError("const_velocity_baseline: need at least two points");
    const AgentState& last = history.back();
    std::vector<Vec2> out;
    out.reserve(static_cast<size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) out.push_back(last.pos + (k * dt) * last.vel);
    return out;
}

ModeRecovery mode_recovery(const std::vector<int>& calib_modes,
                           const std::vector<std::string>& calib_labels,
                           const std::vector<int>& test_modes,
                           const std::vector<std::string>& test_labels) {
    if (calib_modes.size() != calib_labels.size() || test_modes.size() != test_labels.size())
        throw InputError("mode_recovery: modes/labels size mismatch");
    if (calib_modes.empty() || test_modes.empty())
        throw InputError("mode_recovery: empty split");
    for (const auto& l : calib_labels)
        if (l.empty()) throw InputError("mode_recovery: unlabeled calibration example");

    std::map<int, std::map<std::string, int>> votes;
    for (size_t i = 0; i < calib_modes.size(); ++i) votes[calib_modes[i]][calib_labels[i]]++;

    ModeRecovery out;
    for (const auto& [mode, counts] : votes) {
        const auto best = std::max_element(counts.begin(), counts.end(),
                                           [](const auto& a, const auto& b) { return a.second < b.second; });
        out.mapping[mode] = best->first;
    }
    int hits = 0;
    for (size_t i = 0; i < test_modes.size(); ++i) {
        const auto it = out.mapping.find(test_modes[i]);
        if (it != out.mapping.end() && it->second == test_labels[i]) ++hits;
    }
    out.agreement = static_cast<double>(hits) / static_cast<double>(test_modes.size());
    return out;
}

void MetricReport::set(const std::string& name, double v) {
    for (auto& [k, old] : values) {
        if (k == name) {
            old = v;
            return;
        }
    }
    values.emplace_back(name, v);
}

bool MetricReport::has(const std::string& name) const {
    for (const auto& [k, v] : values)
        if (k == name) return true;
    return false;
}

double MetricReport::get(const std::string& name) const {
    for (const auto& [k, v] : values)
        if (k == name) return v;
    throw InputError("metric report has no entry '" + name + "'");
}

std::string MetricReport::to_keyvalues(const std::string& runconfig_hash) const {
    std::string out = "format = trajcast-report-v1\nrunconfig = " + runconfig_hash + "\n";
    char buf[64];
    for (const auto& [k, v] : values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out += k;
        out += " = ";
        out += buf;
        out += "\n";
    }
    for (const auto& f : flags) out += "flag = " + f + "\n";
    return out;
}

std::string MetricReport::to_table() const {
    size_t w = 6;
    for (const auto& [k, v] : values) w = std::max(w, k.size());
    std::ostringstream os;
    os << std::string(w + 14, '-') << "\n";
    for (const auto& [k, v] : values) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%12.4f", v);
        os << k << std::string(w - k.size(), ' ') << "  " << buf << "\n";
    }
    for (const auto& f : flags) os << "! " << f << "\n";
    os << std::string(w + 14, '-') << "\n";
    return os.str();
}

}  // namespace trajcast::metrics
