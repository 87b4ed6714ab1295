#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fwrobust {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Deterministic splittable generator keyed by (master_seed, stream_id).
/// Same key gives the same draw sequence on every platform; distinct
/// stream_ids give statistically independent streams. The core is the
/// splitmix64 sequence with a per-stream starting state.
class SeededRng {
  public:
    SeededRng(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    /// Uniform on [a, b). Uses the top 53 bits of one draw.
    double uniform(double a, double b);

    /// Uniform over {0, ..., n-1} via rejection sampling; n >= 1.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal (Box-Muller, one fresh pair per call).
    double normal();

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    std::uint64_t state_;
};

/// (sum_i |v_i|^p)^(1/p) for finite p >= 1, max_i |v_i| for p = infinity.
/// Finite p > 1 is evaluated with the largest magnitude factored out so
/// that large p cannot overflow. Empty input is a dimension error.
double lp_norm(const Vec& v, double p);

double l2_norm(const Vec& v);
double dot(const Vec& a, const Vec& b);

/// Central differences (f(x+h e_i) - f(x-h e_i)) / (2h) per coordinate.
/// h must be positive; a non-finite probe value raises a numerical error
/// naming the offending coordinate.
Vec finite_difference_gradient(const std::function<double(const Vec&)>& f,
                               const Vec& x, double h);

/// Each coordinate i.i.d. uniform on [-zeta, zeta]; zeta > 0, d >= 1.
Vec sample_uniform_box(SeededRng& rng, std::size_t d, double zeta);

/// zeta * u / ||u||_2 with u standard normal, so the L2 norm is exactly zeta.
Vec sample_gaussian_sphere(SeededRng& rng, std::size_t d, double zeta);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Outputs must go
/// to per-index slots; the partition is static so results do not depend on
/// scheduling. workers <= 1 runs inline.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

/// Shortest decimal that round-trips the exact double (%.17g).
std::string to_precise_string(double v);

/// Collision-resistant stream id from a purpose tag and up to two indices,
/// for deriving independent SeededRng streams per (phase, epoch, example).
std::uint64_t combine_stream(std::uint64_t purpose, std::uint64_t a, std::uint64_t b = 0);

}  // namespace fwrobust
