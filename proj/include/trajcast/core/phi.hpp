#pragma once

#include <cmath>

// The "phi" family: entire functions with removable singularities at
// theta = 0 that appear when integrating constant-control unicycle
// motion over one step (theta = omega * dt). Each has a closed form
// away from zero and a truncated Taylor series inside |theta| < 0.1,
// where the dropped term is below 1e-16 relative. The derivative of
// each member is again expressible in the family:
//
//   g1' = -w2      g2' = g2d       h1' = g1 - g2
//   u2' = u3       w2' = g1 - 2*w3 w3' = w3d       u3' = u3d
namespace trajcast::phi {

inline constexpr double kSeriesCut = 0.1;

// sin(t)/t
inline double g1(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return 1.0 + t2 * (-1.0 / 6.0 + t2 * (1.0 / 120.0 + t2 * (-1.0 / 5040.0)));
    }
    return std::sin(t) / t;
}

// (1 - cos(t))/t^2
inline double g2(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return 0.5 + t2 * (-1.0 / 24.0 + t2 * (1.0 / 720.0 + t2 * (-1.0 / 40320.0)));
    }
    return (1.0 - std::cos(t)) / (t * t);
}

// (1 - cos(t))/t
inline double h1(double t) { return t * g2(t); }

// (cos(t) + t*sin(t) - 1)/t^2
inline double u2(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return 0.5 + t2 * (-1.0 / 8.0 + t2 * (1.0 / 144.0 + t2 * (-1.0 / 5760.0)));
    }
    return (std::cos(t) + t * std::sin(t) - 1.0) / (t * t);
}

// (sin(t) - t*cos(t))/t^2
inline double w2(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return t * (1.0 / 3.0 + t2 * (-1.0 / 30.0 + t2 * (1.0 / 840.0 + t2 * (-1.0 / 45360.0))));
    }
    return (std::sin(t) - t * std::cos(t)) / (t * t);
}

// (sin(t) - t*cos(t))/t^3
inline double w3(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return 1.0 / 3.0 + t2 * (-1.0 / 30.0 + t2 * (1.0 / 840.0 + t2 * (-1.0 / 45360.0)));
    }
    return (std::sin(t) - t * std::cos(t)) / (t * t * t);
}

// (t^2*cos(t) - 2*cos(t) - 2*t*sin(t) + 2)/t^3  ( = u2' )
inline double u3(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return t * (-1.0 / 4.0 + t2 * (1.0 / 36.0 + t2 * (-1.0 / 960.0 + t2 * (1.0 / 50400.0))));
    }
    return ((t * t - 2.0) * std::cos(t) - 2.0 * t * std::sin(t) + 2.0) / (t * t * t);
}

// derivative of g2: (t*sin(t) + 2*cos(t) - 2)/t^3
inline double g2d(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return t * (-1.0 / 12.0 + t2 * (1.0 / 180.0 + t2 * (-1.0 / 6720.0)));
    }
    return (t * std::sin(t) + 2.0 * std::cos(t) - 2.0) / (t * t * t);
}

// derivative of w3: (t^2*sin(t) + 3*t*cos(t) - 3*sin(t))/t^4
inline double w3d(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return t * (-1.0 / 15.0 + t2 * (1.0 / 210.0 + t2 * (-1.0 / 7560.0)));
    }
    return (t * t * std::sin(t) + 3.0 * t * std::cos(t) - 3.0 * std::sin(t)) / (t * t * t * t);
}

// derivative of u3: (-t^3*sin(t) - 3*t^2*cos(t) + 6*t*sin(t) + 6*cos(t) - 6)/t^4
inline double u3d(double t) {
    if (std::fabs(t) < kSeriesCut) {
        const double t2 = t * t;
        return -1.0 / 4.0 + t2 * (1.0 / 12.0 + t2 * (-1.0 / 192.0 + t2 * (1.0 / 7200.0)));
    }
    const double s = std::sin(t), c = std::cos(t);
    return (-t * t * t * s - 3.0 * t * t * c + 6.0 * t * s + 6.0 * c - 6.0) / (t * t * t * t);
}

inline double g1d(double t) { return -w2(t); }
inline double h1d(double t) { return g1(t) - g2(t); }
inline double u2d(double t) { return u3(t); }
inline double w2d(double t) { return g1(t) - 2.0 * w3(t); }

}  // namespace trajcast::phi
