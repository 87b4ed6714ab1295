#pragma once

#include <string>
#include <vector>

#include "fwrobust/attacks.hpp"
#include "fwrobust/ball.hpp"
#include "fwrobust/model.hpp"

namespace fwrobust {

enum class CfDirection { maximize, minimize };

std::string cf_direction_name(CfDirection d);
CfDirection cf_direction_from_name(const std::string& name);

struct CounterfactualResult {
    Vec delta;
    CfDirection direction = CfDirection::maximize;
    BallSpec ball = l2_ball(1.0);
    int label = 0;                     // true class the loss is taken against
    int original_prediction = 0;
    int perturbed_prediction = 0;
    int nonzero_coordinate_count = 0;
    double loss_before = 0.0;
    double loss_after = 0.0;
};

/// FW on the cross-entropy (maximize) or its negation (minimize) over an L1
/// or L2 ball. The L1 LMO touches one coordinate per step, so minimize and
/// maximize runs with p=1 change at most K coordinates.
CounterfactualResult generate_counterfactual(const MlpModel& model, const Vec& x, int y,
                                             CfDirection direction, const BallSpec& ball,
                                             int steps, double schedule_c);

/// One row per result: label, prediction, adversarial prediction, direction,
/// L1/L2 size and sparsity of delta.
void write_counterfactual_report(const std::vector<CounterfactualResult>& results,
                                 const std::string& path);

}  // namespace fwrobust
