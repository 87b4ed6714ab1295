#include "fwrobust/ball.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fwrobust {

namespace {

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

BallSpec::BallSpec(double p_, double epsilon_) : p(p_), epsilon(epsilon_) {
    if (!(p >= 1.0)) throw std::invalid_argument("BallSpec: p must be >= 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("BallSpec: epsilon must be >= 0");
}

double BallSpec::dual_exponent() const {
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

BallSpec linf_ball(double epsilon) { return BallSpec(std::numeric_limits<double>::infinity(), epsilon); }
BallSpec l2_ball(double epsilon) { return BallSpec(2.0, epsilon); }
BallSpec l1_ball(double epsilon) { return BallSpec(1.0, epsilon); }

LmoResult lmo(const Vec& gradient, const BallSpec& ball) {
    if (gradient.empty()) throw std::invalid_argument("lmo: empty gradient");
    const std::size_t d = gradient.size();
    LmoResult res;
    res.direction.assign(d, 0.0);

    double maxabs = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const double a = std::fabs(gradient[i]);
        if (a > maxabs) {
            maxabs = a;
            argmax = i;
        }
    }
    if (maxabs == 0.0) {
        res.zero_gradient = true;
        return res;
    }

    if (ball.p == 1.0) {
        res.direction[argmax] = ball.epsilon * sgn(gradient[argmax]);
    } else if (ball.is_inf()) {
        for (std::size_t i = 0; i < d; ++i) res.direction[i] = ball.epsilon * sgn(gradient[i]);
    } else {
        // eps * sgn(g_i) (|g_i|/m)^{q/p} / ||g/m||_q^{q/p}; normalizing by the
        // max magnitude keeps the powers in range for any p.
        const double q = ball.dual_exponent();
        const double e = q / ball.p;
        double qs = 0.0;
        for (std::size_t i = 0; i < d; ++i) qs += std::pow(std::fabs(gradient[i]) / maxabs, q);
        const double denom = std::pow(qs, e / q);  // = ||g/m||_q^{q/p}
        for (std::size_t i = 0; i < d; ++i) {
            const double mag = std::pow(std::fabs(gradient[i]) / maxabs, e) / denom;
            res.direction[i] = ball.epsilon * sgn(gradient[i]) * mag;
        }
    }
    return res;
}

Vec project(const Vec& z, const BallSpec& ball) {
    if (ball.is_inf()) {
        Vec out = z;
        for (auto& x : out) x = std::clamp(x, -ball.epsilon, ball.epsilon);
        return out;
    }
    if (ball.p == 2.0) {
        const double n = l2_norm(z);
        if (n <= ball.epsilon) return z;
        Vec out = z;
        const double s = ball.epsilon / n;
        for (auto& x : out) x *= s;
        return out;
    }
    throw std::invalid_argument("project: only p in {2, inf} is supported");
}

bool contains(const Vec& v, const BallSpec& ball, double tol) {
    if (tol < 0.0) throw std::invalid_argument("contains: tol must be >= 0");
    if (v.empty()) return true;
    return lp_norm(v, ball.p) <= ball.epsilon * (1.0 + tol);
}

}  // namespace fwrobust
