#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fwrobust/ball.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/numerics.hpp"

namespace fwrobust {

enum class InitKind { zero, uniform_box, gaussian_sphere };

std::string init_name(InitKind k);
InitKind init_from_name(const std::string& name);

struct AttackConfig {
    BallSpec ball = linf_ball(0.1);
    int steps = 10;             // K
    double schedule_c = 2.0;    // gamma_k = c/(c+k)
    ObjectiveSpec objective;
    InitKind init = InitKind::zero;
    double init_radius = 0.0;   // zeta, required for the random inits
    double pgd_step = 0.0;      // alpha; <= 0 selects the default 2*eps/K
};

/// Every violated constraint, one message each; empty means valid.
std::vector<std::string> attack_config_errors(const AttackConfig& cfg);

/// Full record of one attack run. Per-step arrays cover the K update steps;
/// iterates/objective_values/fw_gaps also include the final point, so they
/// hold K+1 entries. signed_gradients is filled for p=inf only and
/// schedule_coefficients by the FW attack only. zero_gradient_coordinate is
/// set when any update-step gradient has a coordinate that is exactly zero
/// (the premise the distortion formula needs to rule out).
struct AttackTrace {
    std::vector<Vec> iterates;
    std::vector<Vec> lmo_outputs;
    std::vector<Vec> signed_gradients;
    Vec fw_gaps;
    Vec objective_values;
    Vec schedule_coefficients;
    bool zero_gradient_coordinate = false;
};

struct AttackResult {
    Vec delta;
    AttackTrace trace;
};

/// Step size gamma_k = c/(c+k); gamma_0 = 1 for every c, which is what lets
/// the first step erase the initialization.
double schedule_gamma(int k, double c);

/// Attack objective as a function of the perturbed point x + delta.
using GradientObjective = std::function<ObjectiveEval(const Vec& point)>;
using ValueObjective = std::function<double(const Vec& point)>;

/// Stationarity gap <lmo(grad) - delta, grad> at x + delta. Nonnegative up to
/// roundoff; zero exactly at constrained stationary points.
double fw_gap(const MlpModel& model, const Vec& x, int y, const Vec& delta, const BallSpec& ball,
              const ObjectiveSpec& obj);

/// Frank-Wolfe ascent: delta <- (1-gamma_k) delta + gamma_k lmo(grad).
/// The convex-combination form keeps every iterate feasible and makes the
/// K=1 zero-init run equal the LMO output bit for bit.
AttackResult fw_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg,
                       SeededRng rng);
AttackResult fw_attack_on(const GradientObjective& objective, const Vec& x,
                          const AttackConfig& cfg, SeededRng rng);

/// Projected gradient ascent, signed gradient for p=inf and normalized
/// gradient for p=2. Other norms are rejected.
AttackResult pgd_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg,
                        SeededRng rng);
AttackResult pgd_attack_on(const GradientObjective& objective, const Vec& x,
                           const AttackConfig& cfg, SeededRng rng);

/// Single signed-gradient step eps*sgn(grad); the K=1 special case of
/// fw_attack over the inf ball with zero init.
AttackResult fgsm_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg);

struct GradientFreeResult {
    Vec delta;
    long query_count = 0;  // forward evaluations spent
};

/// SimBA-style coordinate search: walk seeded permutations of the coordinates,
/// try delta +/- step*e_i clamped to the ball, keep strict improvements.
/// `queries` bounds the number of forward evaluations.
GradientFreeResult gradient_free_attack(const MlpModel& model, const Vec& x, int y,
                                        const BallSpec& ball, long queries, double step,
                                        SeededRng rng, const ObjectiveSpec& obj = {});
GradientFreeResult gradient_free_attack_on(const ValueObjective& objective, const Vec& x,
                                           const BallSpec& ball, long queries, double step,
                                           SeededRng rng);

/// Uniform draw over the class_count-1 classes other than y.
int sample_random_target(SeededRng& rng, int y, int class_count);

enum class AttackKind { fw, pgd, fgsm, gradient_free };

std::string attack_kind_name(AttackKind k);
AttackKind attack_kind_from_name(const std::string& name);

/// One attack recipe as the CLI and evaluation loops consume it.
struct AttackPlan {
    AttackKind kind = AttackKind::fw;
    AttackConfig config;
    long queries = 200;    // gradient_free budget
    double gf_step = 0.0;  // gradient_free step, <= 0 selects ball.epsilon
};

/// Runs the planned attack for one example. rng feeds random inits, the
/// gradient-free search, and TL/TM target sampling when no target is set.
Vec attack_delta(const MlpModel& model, const Vec& x, int y, const AttackPlan& plan,
                 SeededRng rng);

}  // namespace fwrobust
