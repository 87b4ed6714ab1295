#include "fwrobust/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fwrobust {
namespace {

constexpr std::uint64_t kStreamProp1Case = 1001;
constexpr std::uint64_t kStreamProp1Model = 1002;
constexpr std::uint64_t kStreamProp1Attack = 1003;
constexpr std::uint64_t kStreamThm1Case = 1101;
constexpr std::uint64_t kStreamThm1Model = 1102;
constexpr std::uint64_t kStreamThm1Attack = 1103;
constexpr std::uint64_t kStreamDistortion = 2001;
constexpr std::uint64_t kStreamMaskingWhite = 3001;
constexpr std::uint64_t kStreamMaskingBlack = 3002;
constexpr std::uint64_t kStreamLandscape = 3101;

void check_complete_fw_trace(const AttackTrace& trace) {
    const std::size_t steps = trace.lmo_outputs.size();
    if (steps == 0 || trace.schedule_coefficients.size() != steps ||
        trace.iterates.size() != steps + 1)
        throw std::invalid_argument(
            "trace is not a complete FW trace (lmo outputs, schedule coefficients and iterates "
            "disagree on K)");
}

}  // namespace

Vec fw_coefficients(int steps, double c) {
    if (steps < 1) throw std::invalid_argument("fw_coefficients: steps must be >= 1");
    if (!(c >= 1.0)) throw std::invalid_argument("fw_coefficients: c must be >= 1");
    Vec alpha(static_cast<std::size_t>(steps));
    alpha[steps - 1] = c / (c + static_cast<double>(steps - 1));
    for (int l = steps - 2; l >= 0; --l)
        alpha[l] = alpha[l + 1] * (static_cast<double>(l + 1) / (c + static_cast<double>(l)));
    return alpha;
}

Prop1Check verify_prop1(const AttackTrace& trace, const BallSpec& ball) {
    (void)ball;  // the reconstruction reuses the recorded LMO outputs, which already encode it
    check_complete_fw_trace(trace);
    const std::size_t steps = trace.lmo_outputs.size();
    const std::size_t dim = trace.iterates.back().size();
    Vec rebuilt(dim, 0.0);
    for (std::size_t l = 0; l < steps; ++l) {
        const double a = trace.schedule_coefficients[l];
        const Vec& dir = trace.lmo_outputs[l];
        for (std::size_t i = 0; i < dim; ++i) rebuilt[i] += a * dir[i];
    }
    Prop1Check check;
    const Vec& final_delta = trace.iterates.back();
    for (std::size_t i = 0; i < dim; ++i)
        check.max_abs_error = std::max(check.max_abs_error, std::abs(rebuilt[i] - final_delta[i]));
    check.pass = check.max_abs_error <= 1e-10;
    return check;
}

SignChangeMatrix sign_change_matrix(const std::vector<Vec>& signs) {
    SignChangeMatrix m;
    m.steps = signs.size();
    m.n.assign(m.steps, std::vector<int>(m.steps, 0));
    for (std::size_t l = 0; l < m.steps; ++l) {
        for (std::size_t j = l + 1; j < m.steps; ++j) {
            if (signs[j].size() != signs[l].size())
                throw std::invalid_argument("sign vectors have mismatched dimensions");
            int count = 0;
            for (std::size_t i = 0; i < signs[l].size(); ++i)
                if (signs[l][i] != signs[j][i]) ++count;
            m.n[l][j] = count;
            m.n[j][l] = count;
        }
    }
    return m;
}

DistortionPrediction distortion_from_signs(const std::vector<Vec>& signs, const Vec& coeffs,
                                           double epsilon, std::size_t dim) {
    if (signs.empty() || signs.size() != coeffs.size())
        throw std::invalid_argument("need one coefficient per sign vector");
    if (dim == 0) throw std::invalid_argument("dim must be >= 1");
    for (std::size_t l = 0; l < signs.size(); ++l) {
        if (signs[l].size() != dim)
            throw std::invalid_argument("sign vector " + std::to_string(l) +
                                        " has wrong dimension");
        for (double v : signs[l])
            if (v != 1.0 && v != -1.0)
                throw std::runtime_error(
                    "premise violation: sign vectors must lie in {-1,+1}^d, found " +
                    to_precise_string(v));
    }
    const SignChangeMatrix m = sign_change_matrix(signs);
    const double d = static_cast<double>(dim);
    const std::size_t steps = signs.size();

    double weighted_changes = 0.0;  // ordered pairs l != j
    for (std::size_t l = 0; l < steps; ++l)
        for (std::size_t j = 0; j < steps; ++j)
            if (l != j) weighted_changes += coeffs[l] * coeffs[j] * static_cast<double>(m.n[l][j]);

    double cosine_sum = 0.0;  // all pairs, cos beta_ll = 1
    for (std::size_t l = 0; l < steps; ++l) {
        for (std::size_t j = 0; j < steps; ++j) {
            const double cos_beta = l == j ? 1.0 : dot(signs[l], signs[j]) / d;
            cosine_sum += coeffs[l] * coeffs[j] * cos_beta;
        }
    }

    DistortionPrediction out;
    out.sign_count_form =
        epsilon * std::sqrt(d) * std::sqrt(std::max(0.0, 1.0 - (2.0 / d) * weighted_changes));
    out.cosine_form = epsilon * std::sqrt(d) * std::sqrt(std::max(0.0, cosine_sum));
    return out;
}

Thm1Check verify_thm1(const AttackTrace& trace, const BallSpec& ball) {
    if (!ball.is_inf())
        throw std::invalid_argument("verify_thm1: the distortion formula covers p=inf only");
    if (trace.zero_gradient_coordinate)
        throw std::runtime_error(
            "premise violation: a gradient coordinate was exactly zero in some step");
    check_complete_fw_trace(trace);
    if (trace.signed_gradients.size() != trace.lmo_outputs.size())
        throw std::invalid_argument("verify_thm1: trace lacks per-step signed gradients");
    const std::size_t dim = trace.iterates.back().size();
    const DistortionPrediction prediction = distortion_from_signs(
        trace.signed_gradients, trace.schedule_coefficients, ball.epsilon, dim);
    const double direct = l2_norm(trace.iterates.back());
    Thm1Check check;
    if (direct == 0.0)
        check.rel_error = prediction.sign_count_form == 0.0
                              ? 0.0
                              : std::numeric_limits<double>::infinity();
    else
        check.rel_error = std::abs(prediction.sign_count_form - direct) / direct;
    check.pass = check.rel_error <= 1e-9;
    return check;
}

namespace {

struct RandomCase {
    MlpModel model;
    Vec x;
    int y = 0;
    AttackConfig cfg;
};

/// One randomized (model, input, attack) trial for the verification sweeps.
RandomCase random_case(std::uint64_t master_seed, std::uint64_t case_stream,
                       std::uint64_t model_stream, int index, bool force_inf,
                       bool softplus_only) {
    SeededRng gen(master_seed, combine_stream(case_stream, static_cast<std::uint64_t>(index)));
    RandomCase rc;
    const int d = force_inf ? 2 + static_cast<int>(gen.uniform_index(29))
                            : 2 + static_cast<int>(gen.uniform_index(49));
    const int classes = 2 + static_cast<int>(gen.uniform_index(3));
    const int hidden = 4 + static_cast<int>(gen.uniform_index(9));
    const Activation act = softplus_only || gen.uniform(0.0, 1.0) < 0.8 ? Activation::softplus
                                                                        : Activation::relu;
    rc.model = make_mlp({d, hidden, classes}, act,
                        SeededRng(master_seed, combine_stream(model_stream,
                                                              static_cast<std::uint64_t>(index))));
    rc.x.resize(static_cast<std::size_t>(d));
    for (double& v : rc.x) v = 1.5 * gen.normal();
    rc.y = static_cast<int>(gen.uniform_index(static_cast<std::size_t>(classes)));

    if (force_inf) {
        rc.cfg.ball = linf_ball(0.05 + 0.45 * gen.uniform(0.0, 1.0));
        const double c_choices[] = {1.0, 1.5, 2.0, 5.0};
        rc.cfg.schedule_c = c_choices[gen.uniform_index(4)];
        rc.cfg.steps = 1 + static_cast<int>(gen.uniform_index(15));
    } else {
        const double p_choices[] = {1.0, 1.5, 2.0, 3.0,
                                    std::numeric_limits<double>::infinity()};
        rc.cfg.ball = BallSpec(p_choices[gen.uniform_index(5)], 0.05 + 0.45 * gen.uniform(0.0, 1.0));
        const double c_choices[] = {1.0, 2.0, 5.0};
        rc.cfg.schedule_c = c_choices[gen.uniform_index(3)];
        rc.cfg.steps = 1 + static_cast<int>(gen.uniform_index(20));
    }

    const ObjectiveKind kinds[] = {ObjectiveKind::UL, ObjectiveKind::UM, ObjectiveKind::TL,
                                   ObjectiveKind::TM};
    rc.cfg.objective.kind = kinds[gen.uniform_index(4)];
    if (rc.cfg.objective.kind == ObjectiveKind::TL || rc.cfg.objective.kind == ObjectiveKind::TM)
        rc.cfg.objective.target = sample_random_target(gen, rc.y, classes);

    if (!force_inf && gen.uniform(0.0, 1.0) < 0.2) {
        rc.cfg.init = InitKind::uniform_box;
        rc.cfg.init_radius = rc.cfg.ball.epsilon * (0.1 + 0.9 * gen.uniform(0.0, 1.0));
    }
    return rc;
}

}  // namespace

SweepSummary prop1_sweep(std::uint64_t master_seed, int trace_count) {
    SweepSummary summary;
    for (int t = 0; t < trace_count; ++t) {
        const RandomCase rc = random_case(master_seed, kStreamProp1Case, kStreamProp1Model, t,
                                          /*force_inf=*/false, /*softplus_only=*/false);
        const AttackResult result =
            fw_attack(rc.model, rc.x, rc.y, rc.cfg,
                      SeededRng(master_seed,
                                combine_stream(kStreamProp1Attack, static_cast<std::uint64_t>(t))));
        const Prop1Check check = verify_prop1(result.trace, rc.cfg.ball);
        ++summary.generated_count;
        ++summary.checked_count;
        if (check.pass) ++summary.pass_count;
        summary.worst_error = std::max(summary.worst_error, check.max_abs_error);
    }
    return summary;
}

SweepSummary thm1_sweep(std::uint64_t master_seed, int target_checked) {
    SweepSummary summary;
    const int max_attempts = target_checked * 20;
    for (int t = 0; summary.checked_count < target_checked && t < max_attempts; ++t) {
        const RandomCase rc = random_case(master_seed, kStreamThm1Case, kStreamThm1Model, t,
                                          /*force_inf=*/true, /*softplus_only=*/false);
        const AttackResult result =
            fw_attack(rc.model, rc.x, rc.y, rc.cfg,
                      SeededRng(master_seed,
                                combine_stream(kStreamThm1Attack, static_cast<std::uint64_t>(t))));
        ++summary.generated_count;
        if (result.trace.zero_gradient_coordinate) continue;  // premise not satisfied
        const Thm1Check check = verify_thm1(result.trace, rc.cfg.ball);
        ++summary.checked_count;
        if (check.pass) ++summary.pass_count;
        summary.worst_error = std::max(summary.worst_error, check.rel_error);
    }
    return summary;
}

DistortionStudy distortion_study(const MlpModel& standard_model, const MlpModel& robust_model,
                                 const Dataset& data, const AttackConfig& fw_cfg,
                                 const AttackConfig& pgd_cfg, std::uint64_t master_seed,
                                 unsigned workers) {
    DistortionStudy study;
    struct PerExample {
        double fw_l2 = 0.0, fw_linf = 0.0, pgd_l2 = 0.0, pgd_linf = 0.0;
    };
    const std::size_t n = data.size();
    const MlpModel* models[2] = {&standard_model, &robust_model};
    const char* tags[2] = {"standard", "robust"};
    for (int m = 0; m < 2; ++m) {
        std::vector<PerExample> results(n);
        parallel_for(n, workers, [&](std::size_t i) {
            const SeededRng rng_fw(master_seed, combine_stream(kStreamDistortion,
                                                               static_cast<std::uint64_t>(m) * 2,
                                                               i));
            const SeededRng rng_pgd(master_seed, combine_stream(kStreamDistortion,
                                                                static_cast<std::uint64_t>(m) * 2 + 1,
                                                                i));
            const Vec fw_delta =
                fw_attack(*models[m], data.features[i], data.labels[i], fw_cfg, rng_fw).delta;
            const Vec pgd_delta =
                pgd_attack(*models[m], data.features[i], data.labels[i], pgd_cfg, rng_pgd).delta;
            results[i] = {l2_norm(fw_delta),
                          lp_norm(fw_delta, std::numeric_limits<double>::infinity()),
                          l2_norm(pgd_delta),
                          lp_norm(pgd_delta, std::numeric_limits<double>::infinity())};
        });
        Vec ratios;
        Vec fw_l2s;
        for (std::size_t i = 0; i < n; ++i) {
            study.records.push_back({results[i].fw_l2, results[i].fw_linf, "fw", tags[m]});
            study.records.push_back({results[i].pgd_l2, results[i].pgd_linf, "pgd", tags[m]});
            fw_l2s.push_back(results[i].fw_l2);
            if (results[i].pgd_l2 > 0.0) ratios.push_back(results[i].fw_l2 / results[i].pgd_l2);
        }
        std::sort(ratios.begin(), ratios.end());
        const double ratio_median =
            ratios.empty() ? std::numeric_limits<double>::quiet_NaN() : median(ratios);
        const double fw_median =
            fw_l2s.empty() ? std::numeric_limits<double>::quiet_NaN() : median(fw_l2s);
        if (m == 0) {
            study.ratio_standard = std::move(ratios);
            study.median_ratio_standard = ratio_median;
            study.median_fw_l2_standard = fw_median;
        } else {
            study.ratio_robust = std::move(ratios);
            study.median_ratio_robust = ratio_median;
            study.median_fw_l2_robust = fw_median;
        }
    }
    return study;
}

LandscapeGrid loss_landscape(const MlpModel& model, const Vec& x, int y, const Vec& adv_direction,
                             double extent, int grid_n, SeededRng rng) {
    if (grid_n < 2) throw std::invalid_argument("loss_landscape: grid_n must be >= 2");
    if (!(extent > 0.0)) throw std::invalid_argument("loss_landscape: extent must be > 0");
    if (x.size() < 2)
        throw std::invalid_argument("loss_landscape: needs dimension >= 2 for an orthogonal axis");
    if (adv_direction.size() != x.size())
        throw std::invalid_argument("loss_landscape: direction dimension mismatch");
    const double adv_norm = l2_norm(adv_direction);
    if (adv_norm == 0.0) throw std::invalid_argument("loss_landscape: adv_direction is zero");

    LandscapeGrid grid;
    grid.u.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grid.u[i] = adv_direction[i] / adv_norm;

    // Random axis, made orthogonal to u; redraw on the measure-zero failures.
    for (;;) {
        Vec w(x.size());
        for (double& v : w) v = rng.normal();
        const double overlap = dot(w, grid.u);
        for (std::size_t i = 0; i < x.size(); ++i) w[i] -= overlap * grid.u[i];
        const double norm = l2_norm(w);
        if (norm > 1e-9) {
            grid.v.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) grid.v[i] = w[i] / norm;
            break;
        }
    }

    grid.offsets.resize(static_cast<std::size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i)
        grid.offsets[i] = -extent + 2.0 * extent * static_cast<double>(i) /
                                        static_cast<double>(grid_n - 1);

    grid.losses.resize(static_cast<std::size_t>(grid_n) * grid_n);
    Vec point(x.size());
    for (int i = 0; i < grid_n; ++i) {
        for (int j = 0; j < grid_n; ++j) {
            const double a = grid.offsets[i];
            const double b = grid.offsets[j];
            for (std::size_t k = 0; k < x.size(); ++k)
                point[k] = x[k] + a * grid.u[k] + b * grid.v[k];
            grid.losses[static_cast<std::size_t>(i) * grid_n + j] = cross_entropy(model, point, y);
        }
    }
    return grid;
}

MaskingScatter masking_scatter(const MlpModel& model, const Dataset& data,
                               const AttackConfig& white_box, long black_box_queries,
                               double black_box_step, std::uint64_t master_seed,
                               unsigned workers) {
    MaskingScatter scatter;
    const std::size_t n = data.size();
    scatter.points.resize(n);
    const double step = black_box_step > 0.0 ? black_box_step : white_box.ball.epsilon;
    parallel_for(n, workers, [&](std::size_t i) {
        const Vec& x = data.features[i];
        const int y = data.labels[i];
        const Vec white_delta =
            pgd_attack(model, x, y, white_box,
                       SeededRng(master_seed, combine_stream(kStreamMaskingWhite, i)))
                .delta;
        Vec white_point(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) white_point[k] = x[k] + white_delta[k];

        const Vec black_delta =
            gradient_free_attack(model, x, y, white_box.ball, black_box_queries, step,
                                 SeededRng(master_seed, combine_stream(kStreamMaskingBlack, i)),
                                 white_box.objective)
                .delta;
        Vec black_point(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) black_point[k] = x[k] + black_delta[k];

        scatter.points[i] = {margin(model, white_point, y), margin(model, black_point, y)};
    });
    for (const MaskingPoint& p : scatter.points)
        if (p.margin_blackbox < p.margin_whitebox - 1e-6) ++scatter.below_diagonal_count;
    return scatter;
}

SaliencyMap saliency_map(const MlpModel& model, const Vec& x, int y) {
    const ObjectiveEval eval =
        objective_value_and_input_gradient(model, x, y, ObjectiveSpec{ObjectiveKind::UL, -1});
    SaliencyMap map;
    map.values.resize(x.size());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        map.values[i] = std::abs(eval.input_gradient[i]);
        max_abs = std::max(max_abs, map.values[i]);
    }
    if (max_abs == 0.0) {
        map.zero_gradient = true;
        return map;
    }
    for (double& v : map.values) v /= max_abs;
    return map;
}

Vec loss_progress_ratios(const AttackTrace& trace, double c) {
    if (trace.objective_values.size() < 2 ||
        trace.fw_gaps.size() + 1 < trace.objective_values.size())
        throw std::invalid_argument("loss_progress_ratios: incomplete trace");
    const std::size_t steps = trace.objective_values.size() - 1;
    Vec ratios(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double gamma = schedule_gamma(static_cast<int>(k), c);
        const double predicted = gamma * trace.fw_gaps[k];
        const double actual = trace.objective_values[k + 1] - trace.objective_values[k];
        ratios[k] = std::abs(actual - predicted) / (predicted + 1e-12);
    }
    return ratios;
}

Vec min_gap_curve(const AttackTrace& trace) {
    Vec curve(trace.fw_gaps.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trace.fw_gaps.size(); ++i) {
        best = std::min(best, trace.fw_gaps[i]);
        curve[i] = best;
    }
    return curve;
}

double median(Vec values) {
    if (values.empty()) throw std::invalid_argument("median of empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace fwrobust
