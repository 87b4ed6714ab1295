#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwrobust/attacks.hpp"
#include "fwrobust/counterfactual.hpp"
#include "fwrobust/data.hpp"
#include "fwrobust/training.hpp"

namespace fwrobust {

/// Experiment document, one JSON file with dotted-path overrides. Every
/// field below has a default; resolve_config rejects unknown keys and type
/// mismatches, config_errors reports every violated constraint at once.
struct DataSection {
    std::string kind = "two_moons";  // blobs | two_moons | circles | idx | csv
    std::size_t n = 2000;
    std::size_t d = 2;      // blobs only
    int classes = 2;        // blobs only
    double noise = 0.15;
    std::string images_path;  // idx
    std::string labels_path;  // idx
    std::size_t max_n = 0;    // idx cap, 0 keeps all
    std::string csv_path;     // csv
    std::string label_column = "label";
};

struct ModelSection {
    std::vector<int> layer_dims = {2, 64, 64, 2};
    std::string activation = "relu";
    std::string checkpoint;         // load instead of random init when set
    std::string robust_checkpoint;  // second model for the distortion study
};

struct TrainSection {
    int epochs = 100;
    int batch_size = 32;
    double lr_initial = 0.01;
    int lr_decay_epoch = 50;
    double lr_decayed = 0.001;
    double heldout_fraction = 0.1;
    bool adversarial = false;  // train against the attack section
};

struct AttackSection {
    std::string kind = "fw";  // fw | pgd | fgsm | gradient_free
    std::string p = "inf";    // "1", "1.5", "2", "inf", ...
    double epsilon = 0.1;
    int steps = 10;
    double schedule_c = 2.0;
    std::string objective = "UL";
    int target = -1;  // -1 samples a random class per example for TL/TM
    std::string init = "zero";
    double init_radius = 0.0;
    double pgd_step = 0.0;  // 0 selects 2*eps/steps
    long queries = 200;     // gradient_free budget
    double gf_step = 0.0;   // 0 selects epsilon
};

struct AnalysisSection {
    int prop1_traces = 100;
    int thm1_traces = 500;
    int distortion_examples = 500;
    double landscape_extent = 0.2;
    int landscape_grid = 21;
    std::size_t landscape_example = 0;
    int masking_examples = 500;
    int counterfactual_examples = 100;
    std::string counterfactual_direction = "maximize";
};

struct ExperimentConfig {
    std::uint64_t master_seed = 42;
    std::string output_dir = "out";
    unsigned workers = 0;  // 0 selects the processor count
    DataSection data;
    ModelSection model;
    TrainSection train;
    AttackSection attack;
    AnalysisSection analysis;
};

ExperimentConfig default_config();

/// Loads the file (empty path keeps the defaults), then applies
/// "dotted.key=value" overrides. Unknown keys and type mismatches raise with
/// the offending key named.
ExperimentConfig resolve_config(const std::string& path,
                                const std::vector<std::string>& overrides);

/// Every violated constraint, one message per field; empty means valid.
std::vector<std::string> config_errors(const ExperimentConfig& cfg);

/// Echoes the fully resolved document; re-reading it reproduces the run.
void write_resolved_config(const ExperimentConfig& cfg, const std::string& path);

double parse_norm_order(const std::string& p);

BallSpec ball_from(const AttackSection& attack);
AttackPlan plan_from(const AttackSection& attack);
TrainConfig train_config_from(const ExperimentConfig& cfg);
Dataset load_dataset(const DataSection& data, std::uint64_t master_seed);

}  // namespace fwrobust
