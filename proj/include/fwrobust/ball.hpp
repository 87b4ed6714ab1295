#pragma once

#include <cmath>
#include <limits>

#include "fwrobust/numerics.hpp"

namespace fwrobust {

/// The constraint set B_p(eps) = { v : ||v||_p <= eps }.
/// p is 1, a finite value in (1, inf), or infinity; eps >= 0 (eps = 0 is
/// the degenerate ball {0}, used by zero-budget attacks).
struct BallSpec {
    double p = std::numeric_limits<double>::infinity();
    double epsilon = 0.0;

    BallSpec() = default;
    BallSpec(double p_, double epsilon_);

    bool is_inf() const { return std::isinf(p); }
    /// Dual exponent q with 1/p + 1/q = 1.
    double dual_exponent() const;
};

BallSpec linf_ball(double epsilon);
BallSpec l2_ball(double epsilon);
BallSpec l1_ball(double epsilon);

struct LmoResult {
    Vec direction;              // argmax over the ball of <delta, gradient>
    bool zero_gradient = false; // gradient was identically zero (stationary signal)
};

/// Closed-form linear maximization oracle over B_p(eps):
///   p = 1:       eps * sgn(g_{i*}) e_{i*},  i* = argmax |g_i| (lowest index on ties)
///   1 < p < inf: eps * sgn(g_i) |g_i|^{q/p} / ||g||_q^{q/p}
///   p = inf:     eps * sgn(g_i), with sgn(0) = 0
/// A zero gradient returns the zero vector with zero_gradient set.
LmoResult lmo(const Vec& gradient, const BallSpec& ball);

/// Euclidean projection onto the ball; only p in {2, inf} has a closed form
/// (componentwise clamp / radial scaling). Other p raises an
/// unsupported-norm error.
Vec project(const Vec& z, const BallSpec& ball);

/// ||v||_p <= eps * (1 + tol).
bool contains(const Vec& v, const BallSpec& ball, double tol);

}  // namespace fwrobust
