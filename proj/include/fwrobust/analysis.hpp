#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwrobust/attacks.hpp"
#include "fwrobust/ball.hpp"
#include "fwrobust/data.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/numerics.hpp"

namespace fwrobust {

/// Convex-combination weights alpha_l = gamma_l prod_{i>l} (1 - gamma_i) of
/// the K LMO outputs in the final FW iterate. Evaluated by a backward
/// recurrence so c=1 yields exactly 1/K and the sequence is monotone bit for
/// bit; the naive product drifts by a few ulp.
Vec fw_coefficients(int steps, double c);

struct Prop1Check {
    double max_abs_error = 0.0;
    bool pass = false;
};

/// Rebuilds the final iterate as sum_l alpha_l * lmo_l from the trace and
/// compares per coordinate against the recorded delta_K. Works for any init
/// because gamma_0 = 1 erases the starting point. Pass threshold 1e-10.
Prop1Check verify_prop1(const AttackTrace& trace, const BallSpec& ball);

/// n[l][j] = number of coordinates where sign vectors l and j differ.
/// Symmetric with zero diagonal.
struct SignChangeMatrix {
    std::size_t steps = 0;
    std::vector<std::vector<int>> n;
};

SignChangeMatrix sign_change_matrix(const std::vector<Vec>& signs);

struct DistortionPrediction {
    double sign_count_form = 0.0;  // eps sqrt(d) sqrt(1 - 2/d sum alpha_l alpha_j n_lj)
    double cosine_form = 0.0;      // eps sqrt(d) sqrt(sum alpha_l alpha_j cos beta_lj)
};

/// Predicted L2 norm of eps * sum_l alpha_l s_l for sign vectors in {-1,+1}^d.
/// Any zero coordinate violates the ||s||_2 = sqrt(d) premise and is
/// rejected. Both forms agree to roundoff; they differ only in whether the
/// pairwise overlap enters as a change count or a dot-product cosine.
DistortionPrediction distortion_from_signs(const std::vector<Vec>& signs, const Vec& coeffs,
                                           double epsilon, std::size_t dim);

struct Thm1Check {
    double rel_error = 0.0;
    bool pass = false;
};

/// Compares the sign-count prediction against the directly measured
/// ||delta_K||_2 of a p=inf FW trace. Pass threshold 1e-9. Traces with a
/// zero gradient coordinate are rejected rather than patched: remapping
/// sgn(0) would verify a different statement.
Thm1Check verify_thm1(const AttackTrace& trace, const BallSpec& ball);

/// Randomized end-to-end sweeps behind the `verify` subcommand.
struct SweepSummary {
    int pass_count = 0;
    int checked_count = 0;    // traces that satisfied the premise
    int generated_count = 0;  // all traces generated
    double worst_error = 0.0;
};

SweepSummary prop1_sweep(std::uint64_t master_seed, int trace_count);
SweepSummary thm1_sweep(std::uint64_t master_seed, int target_checked);

struct DistortionRecord {
    double l2 = 0.0;
    double linf = 0.0;
    std::string attack;     // "fw" | "pgd"
    std::string model_tag;  // "standard" | "robust"
};

struct DistortionStudy {
    std::vector<DistortionRecord> records;
    Vec ratio_standard;  // per-example ||delta_fw||_2 / ||delta_pgd||_2, sorted
    Vec ratio_robust;
    double median_ratio_standard = 0.0;
    double median_ratio_robust = 0.0;
    double median_fw_l2_standard = 0.0;
    double median_fw_l2_robust = 0.0;
};

/// Runs the FW and PGD configs on every example against both models and
/// collects L2/Linf distortions plus the per-example FW/PGD L2 ratio (the
/// sorted ratios are the empirical CDF support).
DistortionStudy distortion_study(const MlpModel& standard_model, const MlpModel& robust_model,
                                 const Dataset& data, const AttackConfig& fw_cfg,
                                 const AttackConfig& pgd_cfg, std::uint64_t master_seed,
                                 unsigned workers);

struct LandscapeGrid {
    Vec offsets;  // shared axis values, grid_n entries on [-extent, extent]
    Vec losses;   // row-major grid_n x grid_n, losses[i*grid_n+j] at (a_i, b_j)
    Vec u;        // normalized adversarial direction
    Vec v;        // random direction, Gram-Schmidt orthogonal to u
};

/// Cross-entropy surface over x + a*u + b*v. The random direction is drawn
/// from the given rng, so the grid is reproducible.
LandscapeGrid loss_landscape(const MlpModel& model, const Vec& x, int y, const Vec& adv_direction,
                             double extent, int grid_n, SeededRng rng);

struct MaskingPoint {
    double margin_whitebox = 0.0;
    double margin_blackbox = 0.0;
};

struct MaskingScatter {
    std::vector<MaskingPoint> points;
    int below_diagonal_count = 0;  // blackbox margin < whitebox margin - 1e-6
};

/// Margins after a white-box PGD attack vs a gradient-free attack on the
/// same examples. Points below the diagonal are the masking signature: the
/// query-only attack found a stronger perturbation than the gradient did.
MaskingScatter masking_scatter(const MlpModel& model, const Dataset& data,
                               const AttackConfig& white_box, long black_box_queries,
                               double black_box_step, std::uint64_t master_seed,
                               unsigned workers);

struct SaliencyMap {
    Vec values;  // |d loss / d x_i|, max-normalized to [0,1]
    bool zero_gradient = false;
};

SaliencyMap saliency_map(const MlpModel& model, const Vec& x, int y);

/// Per-step |l(x_{k+1}) - l(x_k) - gamma_k g_k| / (gamma_k g_k + 1e-12),
/// the first-order progress diagnostic. c must match the trace's schedule.
Vec loss_progress_ratios(const AttackTrace& trace, double c);

/// Running minimum of the FW gap, min_{s <= t} g(delta_s); diagnostic for
/// the O(1/sqrt(t)) stationarity rate.
Vec min_gap_curve(const AttackTrace& trace);

double median(Vec values);

}  // namespace fwrobust
