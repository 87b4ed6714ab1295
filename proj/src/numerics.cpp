#include "fwrobust/numerics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

namespace fwrobust {

namespace {

constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t master_seed, std::uint64_t stream_id) {
    // Two finalizer rounds decorrelate nearby (seed, stream) keys.
    state_ = mix64(master_seed + kSplitmixGamma);
    state_ = mix64(state_ ^ (stream_id * 0xBF58476D1CE4E5B9ULL + 0x94D049BB133111EBULL));
}

std::uint64_t SeededRng::next_u64() {
    state_ += kSplitmixGamma;
    return mix64(state_);
}

double SeededRng::uniform(double a, double b) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
}

std::uint64_t SeededRng::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
    if (n == 1) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t draw;
    do {
        draw = next_u64();
    } while (draw >= limit);
    return draw % n;
}

double SeededRng::normal() {
    // u1 in (0, 1] keeps the log argument positive.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double lp_norm(const Vec& v, double p) {
    if (v.empty()) throw std::invalid_argument("lp_norm: empty vector");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");

    double maxabs = 0.0;
    for (double x : v) maxabs = std::max(maxabs, std::fabs(x));
    if (std::isinf(p) || maxabs == 0.0) return maxabs;

    if (p == 1.0) {
        double s = 0.0;
        for (double x : v) s += std::fabs(x);
        return s;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (double x : v) {
            const double t = x / maxabs;
            s += t * t;
        }
        return maxabs * std::sqrt(s);
    }
    double s = 0.0;
    for (double x : v) s += std::pow(std::fabs(x) / maxabs, p);
    return maxabs * std::pow(s, 1.0 / p);
}

double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vec finite_difference_gradient(const std::function<double(const Vec&)>& f,
                               const Vec& x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference_gradient: h must be > 0");
    Vec grad(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f(probe);
        probe[i] = x[i] - h;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw std::runtime_error("finite_difference_gradient: non-finite probe at coordinate " +
                                     std::to_string(i));
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

Vec sample_uniform_box(SeededRng& rng, std::size_t d, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("sample_uniform_box: zeta must be > 0");
    if (d == 0) throw std::invalid_argument("sample_uniform_box: d must be >= 1");
    Vec v(d);
    for (auto& x : v) x = rng.uniform(-zeta, zeta);
    return v;
}

Vec sample_gaussian_sphere(SeededRng& rng, std::size_t d, double zeta) {
    if (!(zeta > 0.0)) throw std::invalid_argument("sample_gaussian_sphere: zeta must be > 0");
    if (d == 0) throw std::invalid_argument("sample_gaussian_sphere: d must be >= 1");
    Vec v(d);
    double norm = 0.0;
    // Degenerate all-zero draws are astronomically unlikely but would divide
    // by zero, so redraw.
    do {
        for (auto& x : v) x = rng.normal();
        norm = l2_norm(v);
    } while (norm == 0.0);
    for (auto& x : v) x = zeta * (x / norm);
    return v;
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::string to_precise_string(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::uint64_t combine_stream(std::uint64_t purpose, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = mix64(purpose + kSplitmixGamma);
    h = mix64(h ^ (a + 0xBF58476D1CE4E5B9ULL));
    h = mix64(h ^ (b + 0x94D049BB133111EBULL));
    return h;
}

}  // namespace fwrobust
