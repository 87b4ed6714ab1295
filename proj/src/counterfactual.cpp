#include "fwrobust/counterfactual.hpp"

#include <stdexcept>

#include "fwrobust/csv.hpp"

namespace fwrobust {

std::string cf_direction_name(CfDirection d) {
    return d == CfDirection::maximize ? "maximize" : "minimize";
}

CfDirection cf_direction_from_name(const std::string& name) {
    if (name == "maximize") return CfDirection::maximize;
    if (name == "minimize") return CfDirection::minimize;
    throw std::invalid_argument("unknown direction '" + name +
                                "' (expected maximize or minimize)");
}

CounterfactualResult generate_counterfactual(const MlpModel& model, const Vec& x, int y,
                                             CfDirection direction, const BallSpec& ball,
                                             int steps, double schedule_c) {
    if (ball.p != 1.0 && ball.p != 2.0)
        throw std::invalid_argument("counterfactuals use p in {1, 2}, got p=" +
                                    to_precise_string(ball.p));
    const ObjectiveSpec ul{ObjectiveKind::UL, -1};
    GradientObjective objective;
    if (direction == CfDirection::maximize) {
        objective = [&model, y, ul](const Vec& point) {
            return objective_value_and_input_gradient(model, point, y, ul);
        };
    } else {
        objective = [&model, y, ul](const Vec& point) {
            ObjectiveEval eval = objective_value_and_input_gradient(model, point, y, ul);
            eval.value = -eval.value;
            for (double& g : eval.input_gradient) g = -g;
            return eval;
        };
    }
    AttackConfig cfg;
    cfg.ball = ball;
    cfg.steps = steps;
    cfg.schedule_c = schedule_c;
    const AttackResult attack = fw_attack_on(objective, x, cfg, SeededRng(0, 0));

    CounterfactualResult result;
    result.delta = attack.delta;
    result.direction = direction;
    result.ball = ball;
    result.label = y;
    result.original_prediction = predict(model, x);
    Vec point(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = x[i] + result.delta[i];
    result.perturbed_prediction = predict(model, point);
    for (double v : result.delta)
        if (v != 0.0) ++result.nonzero_coordinate_count;
    result.loss_before = cross_entropy(model, x, y);
    result.loss_after = cross_entropy(model, point, y);
    return result;
}

void write_counterfactual_report(const std::vector<CounterfactualResult>& results,
                                 const std::string& path) {
    CsvTable table;
    table.header = {"label",       "prediction", "adv_prediction", "direction",
                    "l1",          "l2",         "nonzero_count",  "loss_before",
                    "loss_after"};
    for (const CounterfactualResult& r : results) {
        table.rows.push_back({std::to_string(r.label), std::to_string(r.original_prediction),
                              std::to_string(r.perturbed_prediction),
                              cf_direction_name(r.direction),
                              to_precise_string(lp_norm(r.delta, 1.0)),
                              to_precise_string(l2_norm(r.delta)),
                              std::to_string(r.nonzero_coordinate_count),
                              to_precise_string(r.loss_before), to_precise_string(r.loss_after)});
    }
    write_csv(path, table);
}

}  // namespace fwrobust
