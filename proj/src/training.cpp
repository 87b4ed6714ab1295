#include "fwrobust/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fwrobust/csv.hpp"

namespace fwrobust {
namespace {

constexpr std::uint64_t kStreamSplit = 4001;
constexpr std::uint64_t kStreamShuffle = 4002;
constexpr std::uint64_t kStreamBatchAttack = 4003;
constexpr std::uint64_t kStreamEval = 4100;

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> heldout;
};

Split split_indices(std::size_t n, double fraction, std::uint64_t master_seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    SeededRng rng(master_seed, kStreamSplit);
    rng.shuffle(order);
    Split split;
    const std::size_t heldout_count = static_cast<std::size_t>(fraction * static_cast<double>(n));
    split.heldout.assign(order.begin(), order.begin() + heldout_count);
    split.train.assign(order.begin() + heldout_count, order.end());
    return split;
}

double accuracy_with_optional_attack(const MlpModel& model, const Dataset& data,
                                     const std::optional<AttackPlan>& attack,
                                     std::uint64_t master_seed, unsigned workers) {
    const std::size_t n = data.size();
    if (n == 0) return 0.0;
    std::vector<char> correct(n, 0);
    parallel_for(n, workers, [&](std::size_t i) {
        Vec point = data.features[i];
        if (attack.has_value()) {
            const Vec delta = attack_delta(model, point, data.labels[i], *attack,
                                           SeededRng(master_seed, combine_stream(kStreamEval, i)));
            for (std::size_t k = 0; k < point.size(); ++k) point[k] += delta[k];
        }
        correct[i] = predict(model, point) == data.labels[i] ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char c : correct) hits += static_cast<std::size_t>(c);
    return static_cast<double>(hits) / static_cast<double>(n);
}

std::pair<MlpModel, TrainReport> train_impl(const MlpModel& start, const Dataset& data,
                                            const TrainConfig& cfg) {
    const std::vector<std::string> errors = train_config_errors(cfg);
    if (!errors.empty()) {
        std::string joined = "invalid train config: " + errors[0];
        for (std::size_t i = 1; i < errors.size(); ++i) joined += "; " + errors[i];
        throw std::invalid_argument(joined);
    }
    if (data.size() == 0) throw std::invalid_argument("training data is empty");

    const Split split = split_indices(data.size(), cfg.heldout_fraction, cfg.master_seed);
    if (split.train.empty()) throw std::invalid_argument("heldout split leaves no training data");
    // With no heldout examples the training split doubles as the selection set.
    const Dataset heldout = subset(data, split.heldout.empty() ? split.train : split.heldout);

    MlpModel model = start;
    MlpModel best = start;
    TrainReport report;
    double best_score = -1.0;

    std::vector<std::size_t> order = split.train;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch < cfg.lr.decay_epoch ? cfg.lr.initial : cfg.lr.decayed;
        SeededRng shuffle_rng(cfg.master_seed,
                              combine_stream(kStreamShuffle, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
            const std::size_t batch_n = end - begin;

            std::vector<Vec> deltas;
            std::vector<BatchExample> batch(batch_n);
            if (cfg.attack.has_value()) {
                deltas.resize(batch_n);
                parallel_for(batch_n, cfg.workers, [&](std::size_t b) {
                    const std::size_t idx = order[begin + b];
                    deltas[b] = attack_delta(
                        model, data.features[idx], data.labels[idx], *cfg.attack,
                        SeededRng(cfg.master_seed,
                                  combine_stream(kStreamBatchAttack,
                                                 static_cast<std::uint64_t>(epoch), idx)));
                });
            }
            for (std::size_t b = 0; b < batch_n; ++b) {
                const std::size_t idx = order[begin + b];
                batch[b].x = &data.features[idx];
                batch[b].y = data.labels[idx];
                batch[b].delta = cfg.attack.has_value() ? &deltas[b] : nullptr;
            }

            const ParamGradient grad = parameter_gradient(model, batch);
            if (!std::isfinite(grad.mean_loss))
                throw std::runtime_error("training loss diverged at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(begin / cfg.batch_size));
            loss_sum += grad.mean_loss * static_cast<double>(batch_n);
            for (std::size_t l = 0; l < model.layer_count(); ++l) {
                Matrix& w = model.weights[l];
                const Matrix& gw = grad.weights[l];
                for (std::size_t k = 0; k < w.values.size(); ++k) w.values[k] -= lr * gw.values[k];
                Vec& b = model.biases[l];
                const Vec& gb = grad.biases[l];
                for (std::size_t k = 0; k < b.size(); ++k) b[k] -= lr * gb[k];
            }
        }

        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(order.size());
        stats.clean_accuracy =
            accuracy_with_optional_attack(model, heldout, std::nullopt, cfg.master_seed,
                                          cfg.workers);
        stats.adversarial_accuracy =
            cfg.attack.has_value()
                ? accuracy_with_optional_attack(model, heldout, cfg.attack, cfg.master_seed,
                                                cfg.workers)
                : stats.clean_accuracy;
        report.epochs.push_back(stats);

        // Strict improvement keeps the earliest epoch on ties.
        const double score = stats.adversarial_accuracy;
        if (score > best_score) {
            best_score = score;
            best = model;
            report.selected_epoch = epoch;
        }
    }

    return {std::move(best), std::move(report)};
}

}  // namespace

std::vector<std::string> train_config_errors(const TrainConfig& cfg) {
    std::vector<std::string> errors;
    if (cfg.epochs < 0) errors.push_back("epochs must be >= 0, got " + std::to_string(cfg.epochs));
    if (cfg.batch_size < 1)
        errors.push_back("batch_size must be >= 1, got " + std::to_string(cfg.batch_size));
    if (!(cfg.lr.initial > 0.0))
        errors.push_back("lr initial must be > 0, got " + to_precise_string(cfg.lr.initial));
    if (!(cfg.lr.decayed > 0.0))
        errors.push_back("lr decayed must be > 0, got " + to_precise_string(cfg.lr.decayed));
    if (cfg.lr.decay_epoch < 0)
        errors.push_back("lr decay_epoch must be >= 0, got " +
                         std::to_string(cfg.lr.decay_epoch));
    if (!(cfg.heldout_fraction >= 0.0) || cfg.heldout_fraction >= 1.0)
        errors.push_back("heldout_fraction must lie in [0, 1), got " +
                         to_precise_string(cfg.heldout_fraction));
    if (cfg.attack.has_value()) {
        for (const std::string& e : attack_config_errors(cfg.attack->config))
            errors.push_back("attack: " + e);
    }
    return errors;
}

std::pair<MlpModel, TrainReport> train_standard(const MlpModel& start, const Dataset& data,
                                                const TrainConfig& cfg) {
    if (cfg.attack.has_value())
        throw std::invalid_argument("train_standard: config carries an attack; use "
                                    "train_adversarial");
    return train_impl(start, data, cfg);
}

std::pair<MlpModel, TrainReport> train_adversarial(const MlpModel& start, const Dataset& data,
                                                   const TrainConfig& cfg) {
    if (!cfg.attack.has_value())
        throw std::invalid_argument("train_adversarial: config carries no attack");
    return train_impl(start, data, cfg);
}

double evaluate(const MlpModel& model, const Dataset& data,
                const std::optional<AttackPlan>& attack, std::uint64_t master_seed,
                unsigned workers) {
    if (data.size() == 0) throw std::invalid_argument("evaluate: data is empty");
    return accuracy_with_optional_attack(model, data, attack, master_seed, workers);
}

void write_train_report(const TrainReport& report, const std::string& path) {
    CsvTable table;
    table.header = {"epoch", "clean_acc", "adv_acc", "mean_loss"};
    for (std::size_t e = 0; e < report.epochs.size(); ++e) {
        const EpochStats& s = report.epochs[e];
        table.rows.push_back({std::to_string(e), to_precise_string(s.clean_accuracy),
                              to_precise_string(s.adversarial_accuracy),
                              to_precise_string(s.mean_loss)});
    }
    write_csv(path, table);
}

}  // namespace fwrobust
