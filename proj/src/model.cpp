#include "fwrobust/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace fwrobust {
namespace {

double activate(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? z : 0.0;
    // softplus, stable on both tails
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double activate_derivative(double z, Activation a) {
    if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct ForwardCache {
    std::vector<Vec> inputs;   // inputs[l] feeds weights[l]; inputs[0] = x
    std::vector<Vec> preacts;  // preacts[l] = W_l inputs[l] + b_l; back() = logits
};

ForwardCache forward_cached(const MlpModel& model, const Vec& x) {
    if (static_cast<int>(x.size()) != model.input_dim())
        throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                    ", model expects " + std::to_string(model.input_dim()));
    ForwardCache cache;
    const std::size_t layers = model.layer_count();
    cache.inputs.resize(layers);
    cache.preacts.resize(layers);
    cache.inputs[0] = x;
    for (std::size_t l = 0; l < layers; ++l) {
        const Matrix& w = model.weights[l];
        const Vec& in = cache.inputs[l];
        Vec z = model.biases[l];
        for (std::size_t r = 0; r < w.rows; ++r) {
            double acc = 0.0;
            const double* row = &w.values[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * in[c];
            z[r] += acc;
        }
        if (l + 1 < layers) {
            Vec a(z.size());
            for (std::size_t i = 0; i < z.size(); ++i) a[i] = activate(z[i], model.activation);
            cache.inputs[l + 1] = std::move(a);
        }
        cache.preacts[l] = std::move(z);
    }
    return cache;
}

/// Backpropagates d(objective)/d(logits) to the input. When accumulate is
/// non-null also adds the parameter gradients, scaled by `scale`.
Vec backprop_to_input(const MlpModel& model, const ForwardCache& cache, Vec delta,
                      ParamGradient* accumulate, double scale) {
    const std::size_t layers = model.layer_count();
    for (std::size_t l = layers; l-- > 0;) {
        const Matrix& w = model.weights[l];
        const Vec& in = cache.inputs[l];
        if (accumulate != nullptr) {
            Matrix& dw = accumulate->weights[l];
            Vec& db = accumulate->biases[l];
            for (std::size_t r = 0; r < w.rows; ++r) {
                const double dr = delta[r] * scale;
                db[r] += dr;
                double* out = &dw.values[r * w.cols];
                for (std::size_t c = 0; c < w.cols; ++c) out[c] += dr * in[c];
            }
        }
        Vec prev(w.cols, 0.0);
        for (std::size_t r = 0; r < w.rows; ++r) {
            const double dr = delta[r];
            const double* row = &w.values[r * w.cols];
            for (std::size_t c = 0; c < w.cols; ++c) prev[c] += row[c] * dr;
        }
        if (l == 0) return prev;
        const Vec& z = cache.preacts[l - 1];
        for (std::size_t i = 0; i < prev.size(); ++i)
            prev[i] *= activate_derivative(z[i], model.activation);
        delta = std::move(prev);
    }
    return {};  // unreachable, layer_count() >= 1
}

Vec softmax_from_logits(const Vec& logits) {
    Vec p = log_probabilities(logits);
    for (double& v : p) v = std::exp(v);
    return p;
}

int argmax_excluding(const Vec& v, int excluded) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(v.size()); ++i) {
        if (i == excluded) continue;
        if (best < 0 || v[i] > v[best]) best = i;
    }
    return best;
}

void check_label(const MlpModel& model, int y) {
    if (y < 0 || y >= model.class_count())
        throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(model.class_count()) + ")");
}

void check_objective(const MlpModel& model, int y, const ObjectiveSpec& obj) {
    check_label(model, y);
    if (obj.kind == ObjectiveKind::TL || obj.kind == ObjectiveKind::TM) {
        if (obj.target < 0 || obj.target >= model.class_count())
            throw std::invalid_argument("target class " + std::to_string(obj.target) +
                                        " outside [0, " + std::to_string(model.class_count()) + ")");
        if (obj.target == y)
            throw std::invalid_argument("target class equals the true label " + std::to_string(y));
    }
}

}  // namespace

std::string activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "softplus";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "softplus") return Activation::softplus;
    throw std::invalid_argument("unknown activation '" + name + "' (expected relu or softplus)");
}

std::string objective_name(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::UL: return "UL";
        case ObjectiveKind::TL: return "TL";
        case ObjectiveKind::UM: return "UM";
        case ObjectiveKind::TM: return "TM";
    }
    return "UL";
}

ObjectiveKind objective_from_name(const std::string& name) {
    if (name == "UL") return ObjectiveKind::UL;
    if (name == "TL") return ObjectiveKind::TL;
    if (name == "UM") return ObjectiveKind::UM;
    if (name == "TM") return ObjectiveKind::TM;
    throw std::invalid_argument("unknown objective '" + name + "' (expected UL, TL, UM or TM)");
}

MlpModel make_mlp(const std::vector<int>& layer_dims, Activation activation, SeededRng rng) {
    if (layer_dims.size() < 2)
        throw std::invalid_argument("layer_dims needs at least input and output entries");
    for (int d : layer_dims)
        if (d < 1) throw std::invalid_argument("layer_dims entries must be positive");
    MlpModel model;
    model.layer_dims = layer_dims;
    model.activation = activation;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        const std::size_t fan_in = static_cast<std::size_t>(layer_dims[l]);
        const std::size_t fan_out = static_cast<std::size_t>(layer_dims[l + 1]);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_out, fan_in);
        for (double& v : w.values) v = rng.uniform(-bound, bound);
        Vec b(fan_out);
        for (double& v : b) v = rng.uniform(-bound, bound);
        model.weights.push_back(std::move(w));
        model.biases.push_back(std::move(b));
    }
    return model;
}

Vec forward_logits(const MlpModel& model, const Vec& x) {
    return forward_cached(model, x).preacts.back();
}

Vec log_probabilities(const Vec& logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    const double lse = m + std::log(sum);
    Vec out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

double cross_entropy(const MlpModel& model, const Vec& x, int y) {
    check_label(model, y);
    return -log_probabilities(forward_logits(model, x))[y];
}

double margin(const MlpModel& model, const Vec& x, int y) {
    check_label(model, y);
    const Vec logits = forward_logits(model, x);
    const int rival = argmax_excluding(logits, y);
    return logits[y] - logits[rival];
}

int predict(const MlpModel& model, const Vec& x) {
    const Vec logits = forward_logits(model, x);
    return argmax_excluding(logits, -1);
}

double objective_value(const MlpModel& model, const Vec& x, int y, const ObjectiveSpec& obj) {
    check_objective(model, y, obj);
    const Vec logits = forward_logits(model, x);
    switch (obj.kind) {
        case ObjectiveKind::UL: return -log_probabilities(logits)[y];
        case ObjectiveKind::TL: return -log_probabilities(logits)[obj.target];
        case ObjectiveKind::UM: {
            const int rival = argmax_excluding(logits, y);
            return logits[rival] - logits[y];
        }
        case ObjectiveKind::TM: {
            const int rival = argmax_excluding(logits, obj.target);
            return logits[obj.target] - logits[rival];
        }
    }
    return 0.0;
}

ObjectiveEval objective_value_and_input_gradient(const MlpModel& model, const Vec& x, int y,
                                                 const ObjectiveSpec& obj) {
    check_objective(model, y, obj);
    const ForwardCache cache = forward_cached(model, x);
    const Vec& logits = cache.preacts.back();
    ObjectiveEval eval;
    Vec dlogits(logits.size(), 0.0);
    switch (obj.kind) {
        case ObjectiveKind::UL: {
            eval.value = -log_probabilities(logits)[y];
            dlogits = softmax_from_logits(logits);
            dlogits[y] -= 1.0;
            break;
        }
        case ObjectiveKind::TL: {
            eval.value = -log_probabilities(logits)[obj.target];
            dlogits = softmax_from_logits(logits);
            dlogits[obj.target] -= 1.0;
            break;
        }
        case ObjectiveKind::UM: {
            const int rival = argmax_excluding(logits, y);
            eval.value = logits[rival] - logits[y];
            dlogits[rival] = 1.0;
            dlogits[y] = -1.0;
            break;
        }
        case ObjectiveKind::TM: {
            const int rival = argmax_excluding(logits, obj.target);
            eval.value = logits[obj.target] - logits[rival];
            dlogits[obj.target] = 1.0;
            dlogits[rival] = -1.0;
            break;
        }
    }
    eval.input_gradient = backprop_to_input(model, cache, std::move(dlogits), nullptr, 0.0);
    return eval;
}

ParamGradient parameter_gradient(const MlpModel& model, const std::vector<BatchExample>& batch) {
    if (batch.empty()) throw std::invalid_argument("parameter_gradient needs a non-empty batch");
    ParamGradient grad;
    for (std::size_t l = 0; l < model.layer_count(); ++l) {
        grad.weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
        grad.biases.emplace_back(model.biases[l].size(), 0.0);
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const BatchExample& ex : batch) {
        check_label(model, ex.y);
        Vec point = *ex.x;
        if (ex.delta != nullptr) {
            if (ex.delta->size() != point.size())
                throw std::invalid_argument("perturbation dimension mismatch");
            for (std::size_t i = 0; i < point.size(); ++i) point[i] += (*ex.delta)[i];
        }
        const ForwardCache cache = forward_cached(model, point);
        const Vec& logits = cache.preacts.back();
        Vec dlogits = softmax_from_logits(logits);
        grad.mean_loss += -log_probabilities(logits)[ex.y] * scale;
        dlogits[ex.y] -= 1.0;
        backprop_to_input(model, cache, std::move(dlogits), &grad, scale);
    }
    return grad;
}

double min_abs_preactivation(const MlpModel& model, const Vec& x) {
    const ForwardCache cache = forward_cached(model, x);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l + 1 < cache.preacts.size(); ++l)
        for (double z : cache.preacts[l]) best = std::min(best, std::abs(z));
    return best;
}

namespace {

void write_real_array(std::ostream& out, const Vec& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << to_precise_string(v[i]);
    }
    out << ']';
}

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ostringstream out;
    out << "{\n  \"format\": \"fwat-model\",\n  \"version\": 1,\n  \"layer_dims\": [";
    for (std::size_t i = 0; i < model.layer_dims.size(); ++i) {
        if (i) out << ',';
        out << model.layer_dims[i];
    }
    out << "],\n  \"activation\": \"" << activation_name(model.activation) << "\",\n";
    out << "  \"weights\": [";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (l) out << ',';
        out << "\n    [";
        const Matrix& w = model.weights[l];
        for (std::size_t r = 0; r < w.rows; ++r) {
            if (r) out << ',';
            out << "\n      ";
            Vec row(w.values.begin() + r * w.cols, w.values.begin() + (r + 1) * w.cols);
            write_real_array(out, row);
        }
        out << "\n    ]";
    }
    out << "\n  ],\n  \"biases\": [";
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        if (l) out << ',';
        out << "\n    ";
        write_real_array(out, model.biases[l]);
    }
    out << "\n  ]\n}\n";
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << out.str();
    if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

namespace {

const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                    const std::string& path) {
    if (!j.contains(key))
        throw std::runtime_error("checkpoint '" + path + "' is missing field '" + key + "'");
    return j.at(key);
}

}  // namespace

MlpModel load_model(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(file);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    const auto& format = require_field(j, "format", path);
    if (!format.is_string() || format.get<std::string>() != "fwat-model")
        throw std::runtime_error("checkpoint '" + path + "' has format '" + format.dump() +
                                 "', expected \"fwat-model\"");
    const auto& version = require_field(j, "version", path);
    if (!version.is_number_integer() || version.get<int>() != 1)
        throw std::runtime_error("checkpoint '" + path + "' has version " + version.dump() +
                                 ", this reader supports version 1");
    MlpModel model;
    try {
        model.layer_dims = require_field(j, "layer_dims", path).get<std::vector<int>>();
        model.activation =
            activation_from_name(require_field(j, "activation", path).get<std::string>());
        const auto& weights = require_field(j, "weights", path);
        const auto& biases = require_field(j, "biases", path);
        if (model.layer_dims.size() < 2)
            throw std::runtime_error("layer_dims needs at least two entries");
        for (int d : model.layer_dims)
            if (d < 1) throw std::runtime_error("layer_dims entries must be positive");
        const std::size_t layers = model.layer_dims.size() - 1;
        if (weights.size() != layers || biases.size() != layers)
            throw std::runtime_error("expected " + std::to_string(layers) +
                                     " weight and bias entries, found " +
                                     std::to_string(weights.size()) + " and " +
                                     std::to_string(biases.size()));
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t rows = static_cast<std::size_t>(model.layer_dims[l + 1]);
            const std::size_t cols = static_cast<std::size_t>(model.layer_dims[l]);
            const auto rows_json = weights.at(l).get<std::vector<std::vector<double>>>();
            if (rows_json.size() != rows)
                throw std::runtime_error("layer " + std::to_string(l) + " has " +
                                         std::to_string(rows_json.size()) + " weight rows, expected " +
                                         std::to_string(rows));
            Matrix w(rows, cols);
            for (std::size_t r = 0; r < rows; ++r) {
                if (rows_json[r].size() != cols)
                    throw std::runtime_error("layer " + std::to_string(l) + " row " +
                                             std::to_string(r) + " has " +
                                             std::to_string(rows_json[r].size()) +
                                             " entries, expected " + std::to_string(cols));
                std::copy(rows_json[r].begin(), rows_json[r].end(), w.values.begin() + r * cols);
            }
            model.weights.push_back(std::move(w));
            Vec b = biases.at(l).get<Vec>();
            if (b.size() != rows)
                throw std::runtime_error("layer " + std::to_string(l) + " bias has " +
                                         std::to_string(b.size()) + " entries, expected " +
                                         std::to_string(rows));
            model.biases.push_back(std::move(b));
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("checkpoint '" + path + "' is malformed: " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("checkpoint '" + path + "': " + e.what());
    }
    return model;
}

}  // namespace fwrobust
