#include "fwrobust/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fwrobust/analysis.hpp"

namespace fwrobust {
namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

bool has_zero_coordinate(const Vec& g) {
    for (double v : g)
        if (v == 0.0) return true;
    return false;
}

void throw_if_invalid(const AttackConfig& cfg) {
    const std::vector<std::string> errors = attack_config_errors(cfg);
    if (errors.empty()) return;
    std::string joined = "invalid attack config: " + errors[0];
    for (std::size_t i = 1; i < errors.size(); ++i) joined += "; " + errors[i];
    throw std::invalid_argument(joined);
}

/// Sampled starts are pulled back radially when the draw lands outside the
/// ball (the box/sphere radius is measured in its own norm, not the ball's).
Vec initial_delta(const AttackConfig& cfg, std::size_t d, SeededRng& rng) {
    if (cfg.init == InitKind::zero) return Vec(d, 0.0);
    Vec v = cfg.init == InitKind::uniform_box ? sample_uniform_box(rng, d, cfg.init_radius)
                                              : sample_gaussian_sphere(rng, d, cfg.init_radius);
    const double norm = lp_norm(v, cfg.ball.p);
    if (norm > cfg.ball.epsilon) {
        const double scale = cfg.ball.epsilon / norm;
        for (double& x : v) x *= scale;
    }
    return v;
}

GradientObjective bind_objective(const MlpModel& model, int y, const ObjectiveSpec& obj) {
    return [&model, y, obj](const Vec& point) {
        return objective_value_and_input_gradient(model, point, y, obj);
    };
}

Vec perturbed(const Vec& x, const Vec& delta) {
    Vec point(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + delta[i];
    return point;
}

double gap_value(const Vec& lmo_dir, const Vec& delta, const Vec& grad) {
    double g = 0.0;
    for (std::size_t i = 0; i < grad.size(); ++i) g += (lmo_dir[i] - delta[i]) * grad[i];
    return g;
}

void record_step(AttackTrace& trace, const Vec& delta, const Vec& grad, const BallSpec& ball,
                 double value, Vec* lmo_out) {
    const LmoResult res = lmo(grad, ball);
    trace.objective_values.push_back(value);
    trace.fw_gaps.push_back(gap_value(res.direction, delta, grad));
    trace.lmo_outputs.push_back(res.direction);
    if (ball.is_inf()) {
        Vec s(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) s[i] = sgn(grad[i]);
        trace.signed_gradients.push_back(std::move(s));
    }
    if (has_zero_coordinate(grad)) trace.zero_gradient_coordinate = true;
    if (lmo_out != nullptr) *lmo_out = res.direction;
}

/// The final point gets a gap/value entry but no lmo/sign record: those
/// arrays describe the K update steps the convex combination is built from.
void record_final(AttackTrace& trace, const GradientObjective& objective, const Vec& x,
                  const Vec& delta, const BallSpec& ball) {
    const ObjectiveEval eval = objective(perturbed(x, delta));
    const LmoResult res = lmo(eval.input_gradient, ball);
    trace.objective_values.push_back(eval.value);
    trace.fw_gaps.push_back(gap_value(res.direction, delta, eval.input_gradient));
}

}  // namespace

std::string init_name(InitKind k) {
    switch (k) {
        case InitKind::zero: return "zero";
        case InitKind::uniform_box: return "uniform_box";
        case InitKind::gaussian_sphere: return "gaussian_sphere";
    }
    return "zero";
}

InitKind init_from_name(const std::string& name) {
    if (name == "zero") return InitKind::zero;
    if (name == "uniform_box") return InitKind::uniform_box;
    if (name == "gaussian_sphere") return InitKind::gaussian_sphere;
    throw std::invalid_argument("unknown init '" + name +
                                "' (expected zero, uniform_box or gaussian_sphere)");
}

std::vector<std::string> attack_config_errors(const AttackConfig& cfg) {
    std::vector<std::string> errors;
    if (cfg.steps < 1) errors.push_back("steps must be >= 1, got " + std::to_string(cfg.steps));
    if (!(cfg.schedule_c >= 1.0))
        errors.push_back("schedule_c must be >= 1, got " + to_precise_string(cfg.schedule_c));
    if (cfg.init != InitKind::zero) {
        if (!(cfg.init_radius > 0.0) || cfg.init_radius > cfg.ball.epsilon)
            errors.push_back("init_radius must lie in (0, epsilon] for random inits, got " +
                             to_precise_string(cfg.init_radius));
    }
    if (cfg.objective.kind == ObjectiveKind::TL || cfg.objective.kind == ObjectiveKind::TM) {
        if (cfg.objective.target < -1)
            errors.push_back("objective target must be a class index or -1 (sample at run time)");
    }
    return errors;
}

double schedule_gamma(int k, double c) {
    if (k < 0) throw std::invalid_argument("schedule_gamma: k must be >= 0");
    if (!(c >= 1.0)) throw std::invalid_argument("schedule_gamma: c must be >= 1");
    return c / (c + static_cast<double>(k));
}

double fw_gap(const MlpModel& model, const Vec& x, int y, const Vec& delta, const BallSpec& ball,
              const ObjectiveSpec& obj) {
    if (!contains(delta, ball, 1e-9))
        throw std::invalid_argument("fw_gap: delta lies outside the ball (norm " +
                                    to_precise_string(lp_norm(delta, ball.p)) + " > epsilon " +
                                    to_precise_string(ball.epsilon) + ")");
    const ObjectiveEval e = objective_value_and_input_gradient(model, perturbed(x, delta), y, obj);
    const LmoResult res = lmo(e.input_gradient, ball);
    return gap_value(res.direction, delta, e.input_gradient);
}

AttackResult fw_attack_on(const GradientObjective& objective, const Vec& x,
                          const AttackConfig& cfg, SeededRng rng) {
    throw_if_invalid(cfg);
    AttackResult out;
    AttackTrace& trace = out.trace;
    Vec delta = initial_delta(cfg, x.size(), rng);
    trace.iterates.push_back(delta);
    for (int k = 0; k < cfg.steps; ++k) {
        const ObjectiveEval eval = objective(perturbed(x, delta));
        Vec direction;
        record_step(trace, delta, eval.input_gradient, cfg.ball, eval.value, &direction);
        const double gamma = schedule_gamma(k, cfg.schedule_c);
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta[i] = (1.0 - gamma) * delta[i] + gamma * direction[i];
        trace.iterates.push_back(delta);
    }
    record_final(trace, objective, x, delta, cfg.ball);
    trace.schedule_coefficients = fw_coefficients(cfg.steps, cfg.schedule_c);
    out.delta = std::move(delta);
    return out;
}

AttackResult fw_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg,
                       SeededRng rng) {
    return fw_attack_on(bind_objective(model, y, cfg.objective), x, cfg, std::move(rng));
}

AttackResult pgd_attack_on(const GradientObjective& objective, const Vec& x,
                           const AttackConfig& cfg, SeededRng rng) {
    throw_if_invalid(cfg);
    if (!cfg.ball.is_inf() && cfg.ball.p != 2.0)
        throw std::invalid_argument("pgd_attack supports p in {2, inf}, got p=" +
                                    to_precise_string(cfg.ball.p));
    const double alpha = cfg.pgd_step > 0.0
                             ? cfg.pgd_step
                             : 2.0 * cfg.ball.epsilon / static_cast<double>(cfg.steps);
    AttackResult out;
    AttackTrace& trace = out.trace;
    Vec delta = initial_delta(cfg, x.size(), rng);
    trace.iterates.push_back(delta);
    for (int k = 0; k < cfg.steps; ++k) {
        const ObjectiveEval eval = objective(perturbed(x, delta));
        const Vec& grad = eval.input_gradient;
        record_step(trace, delta, grad, cfg.ball, eval.value, nullptr);
        Vec step(delta.size(), 0.0);
        if (cfg.ball.is_inf()) {
            for (std::size_t i = 0; i < grad.size(); ++i) step[i] = sgn(grad[i]);
        } else {
            const double norm = l2_norm(grad);
            if (norm > 0.0)
                for (std::size_t i = 0; i < grad.size(); ++i) step[i] = grad[i] / norm;
        }
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += alpha * step[i];
        delta = project(delta, cfg.ball);
        trace.iterates.push_back(delta);
    }
    record_final(trace, objective, x, delta, cfg.ball);
    out.delta = std::move(delta);
    return out;
}

AttackResult pgd_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg,
                        SeededRng rng) {
    return pgd_attack_on(bind_objective(model, y, cfg.objective), x, cfg, std::move(rng));
}

AttackResult fgsm_attack(const MlpModel& model, const Vec& x, int y, const AttackConfig& cfg) {
    if (!cfg.ball.is_inf())
        throw std::invalid_argument("fgsm_attack requires p=inf, got p=" +
                                    to_precise_string(cfg.ball.p));
    AttackConfig one = cfg;
    one.steps = 1;
    one.init = InitKind::zero;
    return fw_attack(model, x, y, one, SeededRng(0, 0));
}

GradientFreeResult gradient_free_attack_on(const ValueObjective& objective, const Vec& x,
                                           const BallSpec& ball, long queries, double step,
                                           SeededRng rng) {
    if (!ball.is_inf())
        throw std::invalid_argument("gradient_free_attack requires p=inf, got p=" +
                                    to_precise_string(ball.p));
    if (queries < 0) throw std::invalid_argument("gradient_free_attack: negative query budget");
    if (!(step > 0.0)) throw std::invalid_argument("gradient_free_attack: step must be > 0");
    GradientFreeResult out;
    out.delta.assign(x.size(), 0.0);
    if (queries == 0 || x.empty()) return out;
    double best = objective(perturbed(x, out.delta));
    out.query_count = 1;
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    while (out.query_count < queries) {
        rng.shuffle(order);  // fresh pass order each sweep
        for (std::size_t i : order) {
            for (double direction : {+1.0, -1.0}) {
                if (out.query_count >= queries) return out;
                Vec candidate = out.delta;
                candidate[i] =
                    std::clamp(candidate[i] + direction * step, -ball.epsilon, ball.epsilon);
                const double value = objective(perturbed(x, candidate));
                ++out.query_count;
                if (value > best) {
                    best = value;
                    out.delta = std::move(candidate);
                    break;  // coordinate improved; move to the next one
                }
            }
        }
    }
    return out;
}

GradientFreeResult gradient_free_attack(const MlpModel& model, const Vec& x, int y,
                                        const BallSpec& ball, long queries, double step,
                                        SeededRng rng, const ObjectiveSpec& obj) {
    const ValueObjective fn = [&model, y, obj](const Vec& point) {
        return objective_value(model, point, y, obj);
    };
    return gradient_free_attack_on(fn, x, ball, queries, step, std::move(rng));
}

int sample_random_target(SeededRng& rng, int y, int class_count) {
    if (class_count < 2)
        throw std::invalid_argument("sample_random_target needs at least 2 classes");
    if (y < 0 || y >= class_count)
        throw std::invalid_argument("sample_random_target: label outside [0, class_count)");
    const std::size_t r = rng.uniform_index(static_cast<std::size_t>(class_count - 1));
    const int candidate = static_cast<int>(r);
    return candidate < y ? candidate : candidate + 1;
}

std::string attack_kind_name(AttackKind k) {
    switch (k) {
        case AttackKind::fw: return "fw";
        case AttackKind::pgd: return "pgd";
        case AttackKind::fgsm: return "fgsm";
        case AttackKind::gradient_free: return "gradient_free";
    }
    return "fw";
}

AttackKind attack_kind_from_name(const std::string& name) {
    if (name == "fw") return AttackKind::fw;
    if (name == "pgd") return AttackKind::pgd;
    if (name == "fgsm") return AttackKind::fgsm;
    if (name == "gradient_free" || name == "simba") return AttackKind::gradient_free;
    throw std::invalid_argument("unknown attack kind '" + name +
                                "' (expected fw, pgd, fgsm or gradient_free)");
}

Vec attack_delta(const MlpModel& model, const Vec& x, int y, const AttackPlan& plan,
                 SeededRng rng) {
    ObjectiveSpec obj = plan.config.objective;
    if ((obj.kind == ObjectiveKind::TL || obj.kind == ObjectiveKind::TM) && obj.target < 0)
        obj.target = sample_random_target(rng, y, model.class_count());
    AttackConfig cfg = plan.config;
    cfg.objective = obj;
    switch (plan.kind) {
        case AttackKind::fw: return fw_attack(model, x, y, cfg, std::move(rng)).delta;
        case AttackKind::pgd: return pgd_attack(model, x, y, cfg, std::move(rng)).delta;
        case AttackKind::fgsm: return fgsm_attack(model, x, y, cfg).delta;
        case AttackKind::gradient_free: {
            const double step = plan.gf_step > 0.0 ? plan.gf_step : cfg.ball.epsilon;
            return gradient_free_attack(model, x, y, cfg.ball, plan.queries, step,
                                        std::move(rng), obj)
                .delta;
        }
    }
    return Vec(x.size(), 0.0);
}

}  // namespace fwrobust
