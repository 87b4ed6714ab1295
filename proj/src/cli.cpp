#include "fwrobust/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"

#include "fwrobust/analysis.hpp"
#include "fwrobust/attacks.hpp"
#include "fwrobust/config.hpp"
#include "fwrobust/counterfactual.hpp"
#include "fwrobust/csv.hpp"
#include "fwrobust/data.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/training.hpp"

namespace fwrobust {
namespace {

constexpr std::uint64_t kStreamModelInit = 5002;
constexpr std::uint64_t kStreamCliAttack = 6001;
constexpr std::uint64_t kStreamCliLandscape = 6002;

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

MlpModel load_or_init_model(const ExperimentConfig& cfg) {
    if (!cfg.model.checkpoint.empty()) return load_model(cfg.model.checkpoint);
    return make_mlp(cfg.model.layer_dims, activation_from_name(cfg.model.activation),
                    SeededRng(cfg.master_seed, kStreamModelInit));
}

void check_model_matches_data(const MlpModel& model, const Dataset& data) {
    if (model.input_dim() != static_cast<int>(data.dim()))
        throw std::runtime_error("model expects dimension " + std::to_string(model.input_dim()) +
                                 " but the data has " + std::to_string(data.dim()));
    if (model.class_count() < data.class_count)
        throw std::runtime_error("model has " + std::to_string(model.class_count()) +
                                 " outputs but the data has " +
                                 std::to_string(data.class_count) + " classes");
}

Dataset head(const Dataset& data, std::size_t count) {
    if (count >= data.size()) return data;
    std::vector<std::size_t> indices(count);
    std::iota(indices.begin(), indices.end(), 0);
    return subset(data, indices);
}

int cmd_train(const ExperimentConfig& cfg) {
    const Dataset data = load_dataset(cfg.data, cfg.master_seed);
    const MlpModel start = load_or_init_model(cfg);
    check_model_matches_data(start, data);
    const TrainConfig train_cfg = train_config_from(cfg);
    const auto [model, report] = cfg.train.adversarial ? train_adversarial(start, data, train_cfg)
                                                       : train_standard(start, data, train_cfg);
    save_model(model, join_path(cfg.output_dir, "model.json"));
    write_train_report(report, join_path(cfg.output_dir, "train_report.csv"));
    if (report.epochs.empty()) {
        std::cout << "no epochs run; wrote the starting model unchanged\n";
    } else {
        const EpochStats& s = report.epochs[static_cast<std::size_t>(report.selected_epoch)];
        std::cout << "selected epoch " << report.selected_epoch << ": heldout clean "
                  << s.clean_accuracy << ", adversarial " << s.adversarial_accuracy << "\n";
    }
    return 0;
}

int cmd_attack(const ExperimentConfig& cfg) {
    const Dataset data = load_dataset(cfg.data, cfg.master_seed);
    const MlpModel model = load_or_init_model(cfg);
    check_model_matches_data(model, data);
    const AttackPlan plan = plan_from(cfg.attack);

    struct Row {
        int label = 0, clean_pred = 0, adv_pred = 0;
        double margin_before = 0.0, margin_after = 0.0, l2 = 0.0, linf = 0.0;
    };
    std::vector<Row> rows(data.size());
    parallel_for(data.size(), cfg.workers, [&](std::size_t i) {
        const Vec& x = data.features[i];
        const int y = data.labels[i];
        const Vec delta = attack_delta(model, x, y, plan,
                                       SeededRng(cfg.master_seed,
                                                 combine_stream(kStreamCliAttack, i)));
        Vec point(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) point[k] = x[k] + delta[k];
        rows[i] = {y,
                   predict(model, x),
                   predict(model, point),
                   margin(model, x, y),
                   margin(model, point, y),
                   l2_norm(delta),
                   lp_norm(delta, std::numeric_limits<double>::infinity())};
    });

    CsvTable table;
    table.header = {"index",        "label",        "prediction", "adv_prediction",
                    "margin_before", "margin_after", "l2",         "linf"};
    std::size_t clean_hits = 0, adv_hits = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& r = rows[i];
        clean_hits += r.clean_pred == r.label;
        adv_hits += r.adv_pred == r.label;
        table.rows.push_back({std::to_string(i), std::to_string(r.label),
                              std::to_string(r.clean_pred), std::to_string(r.adv_pred),
                              to_precise_string(r.margin_before),
                              to_precise_string(r.margin_after), to_precise_string(r.l2),
                              to_precise_string(r.linf)});
    }
    write_csv(join_path(cfg.output_dir, "attack_report.csv"), table);
    std::cout << attack_kind_name(plan.kind) << " on " << rows.size() << " examples: accuracy "
              << static_cast<double>(clean_hits) / static_cast<double>(rows.size()) << " -> "
              << static_cast<double>(adv_hits) / static_cast<double>(rows.size()) << "\n";
    return 0;
}

int cmd_eval(const ExperimentConfig& cfg) {
    const Dataset data = load_dataset(cfg.data, cfg.master_seed);
    const MlpModel model = load_or_init_model(cfg);
    check_model_matches_data(model, data);
    const AttackPlan plan = plan_from(cfg.attack);
    const double clean = evaluate(model, data, std::nullopt, cfg.master_seed, cfg.workers);
    const double adv = evaluate(model, data, plan, cfg.master_seed, cfg.workers);
    CsvTable table;
    table.header = {"metric", "value"};
    table.rows.push_back({"clean_accuracy", to_precise_string(clean)});
    table.rows.push_back({"adversarial_accuracy", to_precise_string(adv)});
    table.rows.push_back({"attack", attack_kind_name(plan.kind) + "(" +
                                        std::to_string(plan.config.steps) + ")"});
    write_csv(join_path(cfg.output_dir, "eval.csv"), table);
    std::cout << "clean accuracy " << clean << ", adversarial accuracy " << adv << "\n";
    return 0;
}

int cmd_distortion(const ExperimentConfig& cfg) {
    if (cfg.model.checkpoint.empty() || cfg.model.robust_checkpoint.empty())
        throw std::runtime_error(
            "distortion needs model.checkpoint (standard) and model.robust_checkpoint");
    const MlpModel standard_model = load_model(cfg.model.checkpoint);
    const MlpModel robust_model = load_model(cfg.model.robust_checkpoint);
    const Dataset data = head(load_dataset(cfg.data, cfg.master_seed),
                              static_cast<std::size_t>(cfg.analysis.distortion_examples));
    check_model_matches_data(standard_model, data);
    check_model_matches_data(robust_model, data);

    AttackConfig fw_cfg = plan_from(cfg.attack).config;
    AttackConfig pgd_cfg = fw_cfg;
    pgd_cfg.pgd_step = cfg.attack.pgd_step;
    const DistortionStudy study = distortion_study(standard_model, robust_model, data, fw_cfg,
                                                   pgd_cfg, cfg.master_seed, cfg.workers);

    CsvTable records;
    records.header = {"model", "attack", "l2", "linf"};
    for (const DistortionRecord& r : study.records)
        records.rows.push_back(
            {r.model_tag, r.attack, to_precise_string(r.l2), to_precise_string(r.linf)});
    write_csv(join_path(cfg.output_dir, "distortion.csv"), records);

    CsvTable summary;
    summary.header = {"metric", "value"};
    summary.rows.push_back(
        {"median_ratio_standard", to_precise_string(study.median_ratio_standard)});
    summary.rows.push_back({"median_ratio_robust", to_precise_string(study.median_ratio_robust)});
    summary.rows.push_back(
        {"median_fw_l2_standard", to_precise_string(study.median_fw_l2_standard)});
    summary.rows.push_back({"median_fw_l2_robust", to_precise_string(study.median_fw_l2_robust)});
    write_csv(join_path(cfg.output_dir, "distortion_summary.csv"), summary);
    std::cout << "median fw/pgd L2 ratio: standard " << study.median_ratio_standard << ", robust "
              << study.median_ratio_robust << "\n";
    return 0;
}

int cmd_landscape(const ExperimentConfig& cfg) {
    const Dataset data = load_dataset(cfg.data, cfg.master_seed);
    const MlpModel model = load_or_init_model(cfg);
    check_model_matches_data(model, data);
    const std::size_t index = cfg.analysis.landscape_example;
    if (index >= data.size())
        throw std::runtime_error("landscape_example " + std::to_string(index) +
                                 " is outside the dataset (n=" + std::to_string(data.size()) +
                                 ")");
    const Vec& x = data.features[index];
    const int y = data.labels[index];
    const AttackPlan plan = plan_from(cfg.attack);
    const Vec delta = attack_delta(model, x, y, plan,
                                   SeededRng(cfg.master_seed,
                                             combine_stream(kStreamCliAttack, index)));
    if (l2_norm(delta) == 0.0)
        throw std::runtime_error("the attack produced a zero direction; increase attack.epsilon");
    const LandscapeGrid grid =
        loss_landscape(model, x, y, delta, cfg.analysis.landscape_extent,
                       cfg.analysis.landscape_grid, SeededRng(cfg.master_seed,
                                                              kStreamCliLandscape));
    CsvTable table;
    table.header = {"a", "b", "loss"};
    const std::size_t n = grid.offsets.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            table.rows.push_back({to_precise_string(grid.offsets[i]),
                                  to_precise_string(grid.offsets[j]),
                                  to_precise_string(grid.losses[i * n + j])});
    write_csv(join_path(cfg.output_dir, "landscape.csv"), table);
    std::cout << "landscape grid " << n << "x" << n << " around example " << index << "\n";
    return 0;
}

int cmd_masking(const ExperimentConfig& cfg) {
    const Dataset data = head(load_dataset(cfg.data, cfg.master_seed),
                              static_cast<std::size_t>(cfg.analysis.masking_examples));
    const MlpModel model = load_or_init_model(cfg);
    check_model_matches_data(model, data);
    const AttackPlan plan = plan_from(cfg.attack);
    if (!plan.config.ball.is_inf())
        throw std::runtime_error("masking compares p=inf attacks; set attack.p=inf");
    const MaskingScatter scatter = masking_scatter(model, data, plan.config, plan.queries,
                                                   plan.gf_step, cfg.master_seed, cfg.workers);
    CsvTable table;
    table.header = {"margin_whitebox", "margin_blackbox"};
    for (const MaskingPoint& p : scatter.points)
        table.rows.push_back(
            {to_precise_string(p.margin_whitebox), to_precise_string(p.margin_blackbox)});
    write_csv(join_path(cfg.output_dir, "masking.csv"), table);
    std::cout << "black box beat the white box on " << scatter.below_diagonal_count << " of "
              << scatter.points.size() << " points\n";
    return 0;
}

int cmd_counterfactual(const ExperimentConfig& cfg) {
    const Dataset data = head(load_dataset(cfg.data, cfg.master_seed),
                              static_cast<std::size_t>(cfg.analysis.counterfactual_examples));
    const MlpModel model = load_or_init_model(cfg);
    check_model_matches_data(model, data);
    const BallSpec ball = ball_from(cfg.attack);
    if (ball.p != 1.0 && ball.p != 2.0)
        throw std::runtime_error("counterfactuals use p in {1, 2}; set attack.p");
    const CfDirection direction = cf_direction_from_name(cfg.analysis.counterfactual_direction);

    std::vector<CounterfactualResult> results(data.size());
    parallel_for(data.size(), cfg.workers, [&](std::size_t i) {
        results[i] = generate_counterfactual(model, data.features[i], data.labels[i], direction,
                                             ball, cfg.attack.steps, cfg.attack.schedule_c);
    });
    write_counterfactual_report(results, join_path(cfg.output_dir, "counterfactual.csv"));

    std::size_t flipped = 0, correct = 0;
    for (const CounterfactualResult& r : results) {
        if (r.original_prediction != r.label) continue;
        ++correct;
        flipped += r.perturbed_prediction != r.original_prediction;
    }
    std::cout << cf_direction_name(direction) << " flipped " << flipped << " of " << correct
              << " correctly classified examples\n";
    return 0;
}

int cmd_verify(const ExperimentConfig& cfg) {
    const SweepSummary prop = prop1_sweep(cfg.master_seed, cfg.analysis.prop1_traces);
    const SweepSummary thm = thm1_sweep(cfg.master_seed, cfg.analysis.thm1_traces);
    std::printf("prop1: %d/%d pass, thm1: %d/%d pass (%d premise-satisfying)\n", prop.pass_count,
                prop.checked_count, thm.pass_count, thm.checked_count, thm.checked_count);
    CsvTable table;
    table.header = {"check", "pass_count", "checked_count", "generated_count", "worst_error"};
    table.rows.push_back({"prop1", std::to_string(prop.pass_count),
                          std::to_string(prop.checked_count),
                          std::to_string(prop.generated_count),
                          to_precise_string(prop.worst_error)});
    table.rows.push_back({"thm1", std::to_string(thm.pass_count),
                          std::to_string(thm.checked_count), std::to_string(thm.generated_count),
                          to_precise_string(thm.worst_error)});
    write_csv(join_path(cfg.output_dir, "verify.csv"), table);
    const bool ok =
        prop.pass_count == prop.checked_count && thm.pass_count == thm.checked_count;
    return ok ? 0 : 1;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
    CLI::App app{"Frank-Wolfe adversarial robustness toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir;
    unsigned workers = 0;
    bool workers_given = false;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"train", "fit a model (standard or adversarial per train.adversarial)"},
        {"attack", "run the configured attack over the dataset"},
        {"eval", "clean and adversarial accuracy"},
        {"distortion", "L2 distortion of FW vs PGD on two models"},
        {"landscape", "loss surface along the attack and a random direction"},
        {"masking", "white-box vs gradient-free margins"},
        {"counterfactual", "dense or sparse counterfactual perturbations"},
        {"verify", "randomized checks of the coefficient and distortion identities"}};
    for (const auto& [name, description] : commands) {
        CLI::App* sub = app.add_subcommand(name, description);
        sub->add_option("--config", config_path, "experiment config file (JSON)");
        sub->add_option("--set", overrides, "dotted-path override, key=value");
        sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
            seed_given = true;
        });
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker threads (0 = all processors)")
            ->each([&](const std::string&) { workers_given = true; });
    }

    std::reverse(args.begin(), args.end());
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ExperimentConfig cfg = resolve_config(config_path, overrides);
        if (seed_given) cfg.master_seed = seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (workers_given) cfg.workers = workers;

        const std::vector<std::string> violations = config_errors(cfg);
        if (!violations.empty()) {
            std::cerr << "invalid config (" << violations.size() << " problems):\n";
            for (const std::string& v : violations) std::cerr << "  " << v << "\n";
            return 1;
        }

        std::filesystem::create_directories(cfg.output_dir);
        write_resolved_config(cfg, join_path(cfg.output_dir, "resolved_config.json"));

        const std::string command = app.get_subcommands().front()->get_name();
        if (command == "train") return cmd_train(cfg);
        if (command == "attack") return cmd_attack(cfg);
        if (command == "eval") return cmd_eval(cfg);
        if (command == "distortion") return cmd_distortion(cfg);
        if (command == "landscape") return cmd_landscape(cfg);
        if (command == "masking") return cmd_masking(cfg);
        if (command == "counterfactual") return cmd_counterfactual(cfg);
        if (command == "verify") return cmd_verify(cfg);
        std::cerr << "unknown subcommand '" << command << "'\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fwrobust
