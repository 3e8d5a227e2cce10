#include "trajcast/dyn/tape_dynamics.hpp"

#include <array>

namespace trajcast::dyn {

using diff::Fn;
using diff::Shape;

TapeSiState tape_si_init(Tape& t, int rows, double px, double py) {
    std::vector<double> m(static_cast<size_t>(rows) * 2);
    for (int i = 0; i < rows; ++i) {
        m[2 * static_cast<size_t>(i)] = px;
        m[2 * static_cast<size_t>(i) + 1] = py;
    }
    return {t.constant(Shape{rows, 2}, m), t.constant(Shape{rows, 3}, 0.0)};
}

TapeSiState tape_si_propagate(Tape& t, const TapeSiState& s, Var action_mean, Var action_cov,
                              double dt) {
    return {t.add_scaled(s.mean, dt, action_mean), t.add_scaled(s.cov, dt * dt, action_cov)};
}

Var tape_si_pos_logp(Tape& t, const TapeSiState& s, double px, double py, double jitter) {
    Var xx = t.add_const(t.slice_cols(s.cov, 0, 1), jitter);
    Var xy = t.slice_cols(s.cov, 1, 1);
    Var yy = t.add_const(t.slice_cols(s.cov, 2, 1), jitter);
    const std::array<Var, 3> cs{xx, xy, yy};
    return t.gauss2_logp(s.mean, t.concat_cols(cs), px, py);
}

TapeUniState tape_uni_init(Tape& t, int rows, double x0, double y0, double phi0, double v0) {
    TapeUniState s;
    const Shape col{rows, 1};
    s.x = t.constant(col, x0);
    s.y = t.constant(col, y0);
    s.phi = t.constant(col, phi0);
    s.v = t.constant(col, v0);
    Var z = t.constant(col, 0.0);
    s.pxx = s.pxy = s.pyy = z;
    s.cxp = s.cxv = s.cyp = s.cyv = z;
    s.qpp = s.qpv = s.qvv = z;
    return s;
}

namespace {

// a*x + b*y on [n x 1] columns
Var lc2(Tape& t, Var a, Var x, Var b, Var y) { return t.add(t.mul(a, x), t.mul(b, y)); }

// quadratic form entries of M S M^T for 2x2 M = [[m00,m01],[m10,m11]] and
// symmetric S = (s00, s01, s11); returns (r00, r01, r11)
struct Sym2 {
    Var a, b, c;
};
Sym2 sandwich(Tape& t, Var m00, Var m01, Var m10, Var m11, Var s00, Var s01, Var s11) {
    Sym2 r;
    r.a = t.add(t.add(t.mul(t.mul(m00, m00), s00), t.scale(t.mul(t.mul(m00, m01), s01), 2.0)),
                t.mul(t.mul(m01, m01), s11));
    r.b = t.add(t.add(t.mul(t.mul(m00, m10), s00),
                      t.mul(t.add(t.mul(m00, m11), t.mul(m01, m10)), s01)),
                t.mul(t.mul(m01, m11), s11));
    r.c = t.add(t.add(t.mul(t.mul(m10, m10), s00), t.scale(t.mul(t.mul(m10, m11), s01), 2.0)),
                t.mul(t.mul(m11, m11), s11));
    return r;
}

}  // namespace

TapeUniState tape_uni_propagate(Tape& t, const TapeUniState& s, Var omega, Var accel,
                                Var action_cov, double dt) {
    Var th = t.scale(omega, dt);
    Var cp = t.apply(Fn::cos_, s.phi);
    Var sp = t.apply(Fn::sin_, s.phi);
    Var G1 = t.apply(Fn::g1, th);
    Var G2 = t.apply(Fn::g2, th);
    Var H1 = t.apply(Fn::h1, th);
    Var U2 = t.apply(Fn::u2, th);
    Var W2 = t.apply(Fn::w2, th);
    Var W3 = t.apply(Fn::w3, th);
    Var U3 = t.apply(Fn::u3, th);

    Var S1 = t.sub(t.mul(cp, G1), t.mul(sp, H1));
    Var C1 = t.add(t.mul(sp, G1), t.mul(cp, H1));
    Var S2 = t.sub(t.mul(cp, U2), t.mul(sp, W2));
    Var C2 = t.add(t.mul(sp, U2), t.mul(cp, W2));

    // displacement: dt*v*S1 + dt^2*a*S2 (same for y with C1, C2)
    Var dx = t.add(t.scale(t.mul(s.v, S1), dt), t.scale(t.mul(accel, S2), dt * dt));
    Var dy = t.add(t.scale(t.mul(s.v, C1), dt), t.scale(t.mul(accel, C2), dt * dt));

    TapeUniState o;
    o.x = t.add(s.x, dx);
    o.y = t.add(s.y, dy);
    o.phi = t.add(s.phi, th);
    o.v = t.add_scaled(s.v, dt, accel);

    // state Jacobian block J = d(pos')/d(phi, v)
    Var j00 = t.scale(dy, -1.0);
    Var j01 = t.scale(S1, dt);
    Var j10 = dx;
    Var j11 = t.scale(C1, dt);

    // action Jacobian block Bp = d(pos')/d(omega, a); derivatives of the
    // phi family: g1' = -w2, h1' = g1 - g2, u2' = u3, w2' = g1 - 2 w3
    Var dS1 = t.sub(t.scale(t.mul(cp, W2), -1.0), t.mul(sp, t.sub(G1, G2)));
    Var dC1 = t.add(t.scale(t.mul(sp, W2), -1.0), t.mul(cp, t.sub(G1, G2)));
    Var w2d = t.add_scaled(G1, -2.0, W3);
    Var dS2 = t.sub(t.mul(cp, U3), t.mul(sp, w2d));
    Var dC2 = t.add(t.mul(sp, U3), t.mul(cp, w2d));
    Var b00 = t.scale(t.add(t.mul(s.v, dS1), t.scale(t.mul(accel, dS2), dt)), dt * dt);
    Var b10 = t.scale(t.add(t.mul(s.v, dC1), t.scale(t.mul(accel, dC2), dt)), dt * dt);
    Var b01 = t.scale(S2, dt * dt);
    Var b11 = t.scale(C2, dt * dt);

    Var sww = t.slice_cols(action_cov, 0, 1);
    Var swa = t.slice_cols(action_cov, 1, 1);
    Var saa = t.slice_cols(action_cov, 2, 1);

    // P' = P + J C^T + (J C^T)^T + J Q J^T + Bp Su Bp^T
    Var jc00 = lc2(t, j00, s.cxp, j01, s.cxv);
    Var jc01 = lc2(t, j00, s.cyp, j01, s.cyv);
    Var jc10 = lc2(t, j10, s.cxp, j11, s.cxv);
    Var jc11 = lc2(t, j10, s.cyp, j11, s.cyv);
    const Sym2 jqj = sandwich(t, j00, j01, j10, j11, s.qpp, s.qpv, s.qvv);
    const Sym2 bsb = sandwich(t, b00, b01, b10, b11, sww, swa, saa);
    o.pxx = t.add(t.add(s.pxx, t.scale(jc00, 2.0)), t.add(jqj.a, bsb.a));
    o.pxy = t.add(t.add(s.pxy, t.add(jc01, jc10)), t.add(jqj.b, bsb.b));
    o.pyy = t.add(t.add(s.pyy, t.scale(jc11, 2.0)), t.add(jqj.c, bsb.c));

    // C' = C + J Q + dt * Bp Su   (Bq = dt*I)
    o.cxp = t.add(s.cxp, t.add(lc2(t, j00, s.qpp, j01, s.qpv),
                               t.scale(lc2(t, b00, sww, b01, swa), dt)));
    o.cxv = t.add(s.cxv, t.add(lc2(t, j00, s.qpv, j01, s.qvv),
                               t.scale(lc2(t, b00, swa, b01, saa), dt)));
    o.cyp = t.add(s.cyp, t.add(lc2(t, j10, s.qpp, j11, s.qpv),
                               t.scale(lc2(t, b10, sww, b11, swa), dt)));
    o.cyv = t.add(s.cyv, t.add(lc2(t, j10, s.qpv, j11, s.qvv),
                               t.scale(lc2(t, b10, swa, b11, saa), dt)));

    // Q' = Q + dt^2 Su
    o.qpp = t.add_scaled(s.qpp, dt * dt, sww);
    o.qpv = t.add_scaled(s.qpv, dt * dt, swa);
    o.qvv = t.add_scaled(s.qvv, dt * dt, saa);
    return o;
}

Var tape_uni_pos_logp(Tape& t, const TapeUniState& s, double px, double py, double jitter) {
    const std::array<Var, 2> ms{s.x, s.y};
    Var mu = t.concat_cols(ms);
    const std::array<Var, 3> cs{t.add_const(s.pxx, jitter), s.pxy, t.add_const(s.pyy, jitter)};
    return t.gauss2_logp(mu, t.concat_cols(cs), px, py);
}

}  // namespace trajcast::dyn
