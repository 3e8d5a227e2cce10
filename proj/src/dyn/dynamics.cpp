#include "trajcast/dyn/dynamics.hpp"

#include <cmath>

#include "trajcast/core/phi.hpp"

namespace trajcast::dyn {

SiState si_propagate(const SiState& s, const ActionDist& u, double dt) {
    if (dt <= 0.0) throw InputError("si_propagate: dt must be positive");
    if (!s.cov.psd() || !u.cov.psd()) throw InputError("si_propagate: covariance not PSD");
    SiState out;
    out.mean = s.mean + dt * u.mean;
    out.cov = s.cov + u.cov.scaled(dt * dt);
    return out;
}

std::array<double, 4> unicycle_step_mean(const std::array<double, 4>& s, double omega, double a,
                                         double dt) {
    const double phi_0 = s[2], v = s[3];
    const double th = omega * dt;
    const double cp = std::cos(phi_0), sp = std::sin(phi_0);
    // S1/C1 integrate cos/sin along the arc, S2/C2 the time-weighted part
    const double S1 = cp * phi::g1(th) - sp * phi::h1(th);
    const double C1 = sp * phi::g1(th) + cp * phi::h1(th);
    const double S2 = cp * phi::u2(th) - sp * phi::w2(th);
    const double C2 = sp * phi::u2(th) + cp * phi::w2(th);
    return {s[0] + dt * (v * S1 + a * dt * S2),
            s[1] + dt * (v * C1 + a * dt * C2),
            phi_0 + th,
            v + a * dt};
}

void unicycle_jacobians(const std::array<double, 4>& s, double omega, double a, double dt,
                        std::array<double, 16>& A, std::array<double, 8>& B) {
    const double phi_0 = s[2], v = s[3];
    const double th = omega * dt;
    const double cp = std::cos(phi_0), sp = std::sin(phi_0);
    const double g1 = phi::g1(th), h1 = phi::h1(th), u2 = phi::u2(th), w2 = phi::w2(th);
    const double S1 = cp * g1 - sp * h1;
    const double C1 = sp * g1 + cp * h1;
    const double S2 = cp * u2 - sp * w2;
    const double C2 = sp * u2 + cp * w2;
    const double dx = dt * (v * S1 + a * dt * S2);
    const double dy = dt * (v * C1 + a * dt * C2);

    A = {1, 0, -dy, dt * S1,
         0, 1, dx, dt * C1,
         0, 0, 1, 0,
         0, 0, 0, 1};

    // d/d omega goes through th = omega*dt in every phi argument
    const double dS1 = cp * phi::g1d(th) - sp * phi::h1d(th);
    const double dC1 = sp * phi::g1d(th) + cp * phi::h1d(th);
    const double dS2 = cp * phi::u2d(th) - sp * phi::w2d(th);
    const double dC2 = sp * phi::u2d(th) + cp * phi::w2d(th);
    const double dx_dw = dt * dt * (v * dS1 + a * dt * dS2);
    const double dy_dw = dt * dt * (v * dC1 + a * dt * dC2);

    B = {dx_dw, dt * dt * S2,
         dy_dw, dt * dt * C2,
         dt, 0,
         0, dt};
}

UniState unicycle_propagate(const UniState& s, const ActionDist& u, double dt) {
    if (dt <= 0.0) throw InputError("unicycle_propagate: dt must be positive");
    if (!u.cov.psd()) throw InputError("unicycle_propagate: action covariance not PSD");
    std::array<double, 16> A;
    std::array<double, 8> B;
    unicycle_jacobians(s.mean, u.mean[0], u.mean[1], dt, A, B);

    UniState out;
    out.mean = unicycle_step_mean(s.mean, u.mean[0], u.mean[1], dt);

    // AS = A * cov
    std::array<double, 16> AS{};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += A[4 * i + k] * s.cov[4 * k + j];
            AS[4 * i + j] = acc;
        }
    // out.cov = AS * A^T
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += AS[4 * i + k] * A[4 * j + k];
            out.cov[4 * i + j] = acc;
        }
    // + B * u.cov * B^T (u.cov packed 2x2)
    const double q[4] = {u.cov.xx, u.cov.xy, u.cov.xy, u.cov.yy};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) acc += B[2 * i + k] * q[2 * k + l] * B[2 * j + l];
            out.cov[4 * i + j] += acc;
        }
    // symmetrize against roundoff drift
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double m = 0.5 * (out.cov[4 * i + j] + out.cov[4 * j + i]);
            out.cov[4 * i + j] = m;
            out.cov[4 * j + i] = m;
        }
    return out;
}

GaussianTrajectory integrate_prediction(const InitialState& init, std::span<const ActionDist> actions,
                                        double dt, DynModel model, const Limits& lim) {
    GaussianTrajectory out;
    out.reserve(actions.size());
    if (model == DynModel::integrator) {
        SiState s{init.pos, init.pos_cov};
        for (const auto& u : actions) {
            s = si_propagate(s, u, dt);
            out.push_back({s.mean, s.cov});
        }
    } else {
        UniState s;
        s.mean = {init.pos[0], init.pos[1], init.heading, init.speed};
        for (const auto& u : actions) {
            ActionDist cu = u;
            cu.mean[0] = clamp(cu.mean[0], -lim.omega_max, lim.omega_max);
            cu.mean[1] = clamp(cu.mean[1], -lim.a_max, lim.a_max);
            s = unicycle_propagate(s, cu, dt);
            s.mean[3] = clamp(s.mean[3], 0.0, lim.v_max);
            out.push_back({Vec2{s.mean[0], s.mean[1]},
                           Cov2{s.cov[0], s.cov[1], s.cov[5]}});
        }
    }
    return out;
}

Vec2 sample_gauss2(const Vec2& mean, const Cov2& cov, Rng& rng) {
    if (!cov.psd()) throw InputError("sample_gauss2: covariance not PSD");
    // Cholesky: [[l11, 0], [l21, l22]]
    const double l11 = std::sqrt(std::max(cov.xx, 0.0));
    const double l21 = l11 > 0.0 ? cov.xy / l11 : 0.0;
    const double l22 = std::sqrt(std::max(cov.yy - l21 * l21, 0.0));
    const double z1 = rng.normal(), z2 = rng.normal();
    return {mean[0] + l11 * z1, mean[1] + l21 * z1 + l22 * z2};
}

std::vector<Vec2> sample_rollout(const InitialState& init, std::span<const ActionDist> actions,
                                 double dt, DynModel model, const Limits& lim, Rng& rng) {
    std::vector<Vec2> out;
    out.reserve(actions.size());
    if (model == DynModel::integrator) {
        Vec2 p = init.pos;
        for (const auto& u : actions) {
            const Vec2 a = sample_gauss2(u.mean, u.cov, rng);
            p = p + dt * a;
            out.push_back(p);
        }
    } else {
        std::array<double, 4> s{init.pos[0], init.pos[1], init.heading, init.speed};
        for (const auto& u : actions) {
            Vec2 a = sample_gauss2(u.mean, u.cov, rng);
            a[0] = clamp(a[0], -lim.omega_max, lim.omega_max);
            a[1] = clamp(a[1], -lim.a_max, lim.a_max);
            s = unicycle_step_mean(s, a[0], a[1], dt);
            s[3] = clamp(s[3], 0.0, lim.v_max);
            out.push_back({s[0], s[1]});
        }
    }
    return out;
}

}  // namespace trajcast::dyn
