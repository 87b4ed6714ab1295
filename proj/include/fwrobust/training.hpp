#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwrobust/attacks.hpp"
#include "fwrobust/data.hpp"
#include "fwrobust/model.hpp"

namespace fwrobust {

/// Piecewise-constant rate: `initial` before decay_epoch, `decayed` from it on.
struct LrSchedule {
    double initial = 0.01;
    int decay_epoch = 50;
    double decayed = 0.001;
};

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    LrSchedule lr;
    std::optional<AttackPlan> attack;  // absent selects standard ERM
    std::uint64_t master_seed = 0;
    double heldout_fraction = 0.1;     // seeded split, taken off the front of a permutation
    unsigned workers = 1;
};

std::vector<std::string> train_config_errors(const TrainConfig& cfg);

struct EpochStats {
    double clean_accuracy = 0.0;        // heldout
    double adversarial_accuracy = 0.0;  // heldout; equals clean when training has no attack
    double mean_loss = 0.0;             // mean training loss over the epoch
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    int selected_epoch = -1;  // argmax heldout (adversarial) accuracy, earliest on ties
};

/// Minibatch SGD on cross-entropy from the given starting model. Returns the
/// best checkpoint by heldout clean accuracy. epochs=0 returns the start
/// model unchanged.
std::pair<MlpModel, TrainReport> train_standard(const MlpModel& start, const Dataset& data,
                                                const TrainConfig& cfg);

/// Adversarial training: per batch, attack every example against the current
/// parameters (cfg.attack), then take one SGD step on the perturbed batch.
/// Returns the best checkpoint by heldout adversarial accuracy. Pass a
/// pretrained standard model as `start` for the fine-tuning protocol.
std::pair<MlpModel, TrainReport> train_adversarial(const MlpModel& start, const Dataset& data,
                                                   const TrainConfig& cfg);

/// Fraction of examples still classified correctly, after the attack when one
/// is given. Deterministic: example i always draws the same attack stream.
double evaluate(const MlpModel& model, const Dataset& data,
                const std::optional<AttackPlan>& attack, std::uint64_t master_seed,
                unsigned workers);

/// epoch, clean_acc, adv_acc, mean_loss rows plus the selected epoch marker.
void write_train_report(const TrainReport& report, const std::string& path);

}  // namespace fwrobust
