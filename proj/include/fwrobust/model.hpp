#pragma once

#include <string>
#include <vector>

#include "fwrobust/numerics.hpp"

namespace fwrobust {

enum class Activation { relu, softplus };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Fully connected classifier: affine + activation per hidden layer, final
/// layer affine with no activation. Weights are (out x in) row-major.
struct MlpModel {
    std::vector<int> layer_dims;  // [d, h1, ..., C]
    std::vector<Matrix> weights;
    std::vector<Vec> biases;
    Activation activation = Activation::relu;

    int input_dim() const { return layer_dims.front(); }
    int class_count() const { return layer_dims.back(); }
    std::size_t layer_count() const { return weights.size(); }
};

/// Seeded initialization, per-layer uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)].
MlpModel make_mlp(const std::vector<int>& layer_dims, Activation activation, SeededRng rng);

Vec forward_logits(const MlpModel& model, const Vec& x);

/// Log-softmax with max subtraction; exp of the entries sums to one.
Vec log_probabilities(const Vec& logits);

/// Cross-entropy -log p_y(x).
double cross_entropy(const MlpModel& model, const Vec& x, int y);

/// Logit margin f_y - max_{j != y} f_j; positive iff the prediction is y.
/// Identical to the log-probability margin because the softmax shift cancels.
double margin(const MlpModel& model, const Vec& x, int y);

/// argmax of the logits, lowest index on ties.
int predict(const MlpModel& model, const Vec& x);

enum class ObjectiveKind { UL, TL, UM, TM };

std::string objective_name(ObjectiveKind k);
ObjectiveKind objective_from_name(const std::string& name);

/// Attack objective. target is the random class r, required for TL/TM and
/// must differ from the true label.
struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::UL;
    int target = -1;
};

/// The scalar the attacker maximizes:
///   UL:  loss(x, y)        TL:  loss(x, r)
///   UM: -margin(x, y)      TM:  margin(x, r)
double objective_value(const MlpModel& model, const Vec& x, int y, const ObjectiveSpec& obj);

struct ObjectiveEval {
    double value = 0.0;
    Vec input_gradient;
};

/// Value and gradient with respect to x of the maximized scalar.
ObjectiveEval objective_value_and_input_gradient(const MlpModel& model, const Vec& x, int y,
                                                 const ObjectiveSpec& obj);

/// Gradient of the mean cross-entropy over a batch with respect to all
/// parameters; shapes mirror the model's weights/biases.
struct ParamGradient {
    std::vector<Matrix> weights;
    std::vector<Vec> biases;
    double mean_loss = 0.0;
};

struct BatchExample {
    const Vec* x = nullptr;
    const Vec* delta = nullptr;  // nullptr means no perturbation
    int y = 0;
};

ParamGradient parameter_gradient(const MlpModel& model, const std::vector<BatchExample>& batch);

/// Smallest |pre-activation| over all hidden units; used to keep relu
/// finite-difference checks away from the kinks.
double min_abs_preactivation(const MlpModel& model, const Vec& x);

/// Checkpoint I/O. Single JSON document {format:"fwat-model", version:1,
/// layer_dims, activation, weights, biases} with every real written at 17
/// significant digits so reloading is bit-exact.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace fwrobust
