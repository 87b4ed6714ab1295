#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <optional>
#include <stdexcept>

#include "fwrobust/csv.hpp"
#include "fwrobust/data.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/numerics.hpp"
#include "fwrobust/training.hpp"

using namespace fwrobust;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset blobs(std::size_t n, double noise = 0.2, std::uint64_t seed = 50) {
    return synth_dataset(SynthKind::blobs, n, 2, 2, noise, SeededRng(seed, 0));
}

TrainConfig quick_config(int epochs, std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 32;
    cfg.master_seed = seed;
    return cfg;
}

AttackPlan linf_plan(double eps, int steps = 3) {
    AttackPlan plan;
    plan.kind = AttackKind::fw;
    plan.config.ball = linf_ball(eps);
    plan.config.steps = steps;
    plan.config.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    return plan;
}

bool same_weights(const MlpModel& a, const MlpModel& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (std::size_t l = 0; l < a.layer_count(); ++l)
        if (a.weights[l].values != b.weights[l].values || a.biases[l] != b.biases[l])
            return false;
    return true;
}

}  // namespace

TEST_CASE("train_config_errors reports all violations, including nested attack ones") {
    CHECK(train_config_errors(quick_config(5)).empty());

    TrainConfig bad = quick_config(5);
    bad.batch_size = 0;
    bad.lr.initial = 0.0;
    bad.heldout_fraction = 1.0;
    bad.attack = linf_plan(0.1);
    bad.attack->config.steps = 0;
    auto errors = train_config_errors(bad);
    CHECK(errors.size() == 4);
    bool attack_prefixed = false;
    for (const auto& e : errors) attack_prefixed |= (e.rfind("attack: ", 0) == 0);
    CHECK(attack_prefixed);
}

TEST_CASE("zero epochs return the start model unchanged") {
    Dataset data = blobs(100);
    MlpModel start = make_mlp({2, 8, 2}, Activation::relu, SeededRng(3, 0));
    auto [model, report] = train_standard(start, data, quick_config(0));
    CHECK(same_weights(model, start));
    CHECK(report.epochs.empty());
    CHECK(report.selected_epoch == -1);
}

TEST_CASE("training is deterministic for a fixed master seed") {
    Dataset data = blobs(120);
    MlpModel start = make_mlp({2, 8, 2}, Activation::relu, SeededRng(3, 0));

    auto [m1, r1] = train_standard(start, data, quick_config(4, 9));
    auto [m2, r2] = train_standard(start, data, quick_config(4, 9));
    CHECK(same_weights(m1, m2));
    REQUIRE(r1.epochs.size() == r2.epochs.size());
    for (std::size_t e = 0; e < r1.epochs.size(); ++e)
        CHECK(r1.epochs[e].mean_loss == r2.epochs[e].mean_loss);

    auto [m3, r3] = train_standard(start, data, quick_config(4, 10));
    CHECK_FALSE(same_weights(m1, m3));  // different seed shuffles differently
}

TEST_CASE("adversarial training gives the same result with 1 and 4 workers") {
    Dataset data = blobs(80);
    MlpModel start = make_mlp({2, 8, 2}, Activation::relu, SeededRng(4, 0));
    TrainConfig cfg = quick_config(3, 12);
    cfg.attack = linf_plan(0.05);

    cfg.workers = 1;
    auto [serial, rs] = train_adversarial(start, data, cfg);
    cfg.workers = 4;
    auto [parallel, rp] = train_adversarial(start, data, cfg);
    CHECK(same_weights(serial, parallel));
    CHECK(rs.selected_epoch == rp.selected_epoch);
    for (std::size_t e = 0; e < rs.epochs.size(); ++e) {
        CHECK(rs.epochs[e].mean_loss == rp.epochs[e].mean_loss);
        CHECK(rs.epochs[e].adversarial_accuracy == rp.epochs[e].adversarial_accuracy);
    }
}

TEST_CASE("standard training separates well-separated blobs") {
    Dataset data = blobs(400, 0.2, 77);
    MlpModel start = make_mlp({2, 16, 2}, Activation::relu, SeededRng(5, 0));
    TrainConfig cfg = quick_config(30, 21);
    auto [model, report] = train_standard(start, data, cfg);
    CHECK(report.selected_epoch >= 0);
    double best = 0.0;
    for (const auto& s : report.epochs) best = std::max(best, s.clean_accuracy);
    CHECK(best >= 0.99);
    CHECK(evaluate(model, data, std::nullopt, 0, 1) >= 0.95);
}

TEST_CASE("adversarial training at eps=0 reproduces standard training bit for bit") {
    Dataset data = blobs(150, 0.3, 31);
    MlpModel start = make_mlp({2, 10, 2}, Activation::relu, SeededRng(6, 0));

    TrainConfig std_cfg = quick_config(5, 33);
    auto [std_model, std_report] = train_standard(start, data, std_cfg);

    TrainConfig adv_cfg = std_cfg;
    adv_cfg.attack = linf_plan(0.0);
    auto [adv_model, adv_report] = train_adversarial(start, data, adv_cfg);

    CHECK(same_weights(std_model, adv_model));
    CHECK(std_report.selected_epoch == adv_report.selected_epoch);
    REQUIRE(std_report.epochs.size() == adv_report.epochs.size());
    for (std::size_t e = 0; e < std_report.epochs.size(); ++e) {
        CHECK(std_report.epochs[e].mean_loss == adv_report.epochs[e].mean_loss);
        CHECK(std_report.epochs[e].clean_accuracy ==
              adv_report.epochs[e].adversarial_accuracy);
    }
}

TEST_CASE("the learning-rate switch is piecewise constant at decay_epoch") {
    Dataset data = blobs(100, 0.25, 41);
    MlpModel start = make_mlp({2, 8, 2}, Activation::relu, SeededRng(7, 0));

    // decay_epoch = 0 means the decayed rate applies from the first epoch,
    // which must match a run whose initial rate is that value.
    TrainConfig a = quick_config(4, 55);
    a.lr = LrSchedule{123.0, 0, 0.005};
    TrainConfig b = quick_config(4, 55);
    b.lr = LrSchedule{0.005, 100, 0.9};
    auto [ma, ra] = train_standard(start, data, a);
    auto [mb, rb] = train_standard(start, data, b);
    CHECK(same_weights(ma, mb));

    // And the initial rate really is used before the switch.
    TrainConfig c = quick_config(4, 55);
    c.lr = LrSchedule{0.05, 2, 0.005};
    auto [mc, rc] = train_standard(start, data, c);
    CHECK_FALSE(same_weights(mc, mb));
}

TEST_CASE("a divergent run fails loudly instead of returning garbage") {
    Dataset data = blobs(64, 0.2, 61);
    MlpModel start = make_mlp({2, 8, 2}, Activation::relu, SeededRng(8, 0));
    TrainConfig cfg = quick_config(3, 1);
    // sqrt(DBL_MAX)-scale rate: one step inflates the weights so far that the
    // next forward pass overflows, which the loss guard must catch.
    cfg.lr = LrSchedule{1e154, 50, 0.001};
    CHECK_THROWS_WITH_AS(train_standard(start, data, cfg), doctest::Contains("diverged"),
                         std::runtime_error);
}

TEST_CASE("train_standard and train_adversarial check the attack slot") {
    Dataset data = blobs(50);
    MlpModel start = make_mlp({2, 4, 2}, Activation::relu, SeededRng(9, 0));
    TrainConfig with_attack = quick_config(1);
    with_attack.attack = linf_plan(0.1);
    CHECK_THROWS_AS(train_standard(start, data, with_attack), std::invalid_argument);
    CHECK_THROWS_AS(train_adversarial(start, data, quick_config(1)), std::invalid_argument);

    Dataset empty;
    CHECK_THROWS_AS(train_standard(start, empty, quick_config(1)), std::invalid_argument);
}

TEST_CASE("evaluate: eps=0 attack equals clean accuracy; adversarial never beats clean on nested balls") {
    Dataset data = blobs(200, 0.4, 71);
    MlpModel start = make_mlp({2, 12, 2}, Activation::relu, SeededRng(10, 0));
    auto [model, report] = train_standard(start, data, quick_config(10, 77));

    double clean = evaluate(model, data, std::nullopt, 5, 2);
    double zero_eps = evaluate(model, data, std::make_optional(linf_plan(0.0)), 5, 2);
    CHECK(clean == zero_eps);

    double small = evaluate(model, data, std::make_optional(linf_plan(0.05, 5)), 5, 2);
    double large = evaluate(model, data, std::make_optional(linf_plan(0.2, 5)), 5, 2);
    CHECK(small <= clean);
    // Nested balls with identical seeds: a bigger budget can only help the attacker
    // up to attack suboptimality; allow the documented slack.
    CHECK(large <= small + 0.01);

    CHECK(evaluate(model, data, std::make_optional(linf_plan(0.05, 5)), 5, 4) == small);
}

TEST_CASE("write_train_report emits one row per epoch") {
    TrainReport report;
    report.epochs.push_back(EpochStats{0.75, 0.5, 1.25});
    report.epochs.push_back(EpochStats{0.875, 0.625, 0.5});
    report.selected_epoch = 1;
    const std::string path = "/tmp/fwrobust_train_report_test.csv";
    write_train_report(report, path);

    CsvTable table = read_csv(path);
    REQUIRE(table.header == std::vector<std::string>{"epoch", "clean_acc", "adv_acc",
                                                     "mean_loss"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][0] == "0");
    CHECK(table.rows[1][1] == "0.875");
    CHECK(table.rows[1][2] == "0.625");
    std::remove(path.c_str());
}
