#include "fwrobust/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace fwrobust {
namespace {

using nlohmann::json;

constexpr std::uint64_t kStreamData = 5001;

json to_json(const ExperimentConfig& c) {
    json j;
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    j["workers"] = c.workers;
    j["data"] = {{"kind", c.data.kind},
                 {"n", c.data.n},
                 {"d", c.data.d},
                 {"classes", c.data.classes},
                 {"noise", c.data.noise},
                 {"images_path", c.data.images_path},
                 {"labels_path", c.data.labels_path},
                 {"max_n", c.data.max_n},
                 {"csv_path", c.data.csv_path},
                 {"label_column", c.data.label_column}};
    j["model"] = {{"layer_dims", c.model.layer_dims},
                  {"activation", c.model.activation},
                  {"checkpoint", c.model.checkpoint},
                  {"robust_checkpoint", c.model.robust_checkpoint}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"lr_initial", c.train.lr_initial},
                  {"lr_decay_epoch", c.train.lr_decay_epoch},
                  {"lr_decayed", c.train.lr_decayed},
                  {"heldout_fraction", c.train.heldout_fraction},
                  {"adversarial", c.train.adversarial}};
    j["attack"] = {{"kind", c.attack.kind},
                   {"p", c.attack.p},
                   {"epsilon", c.attack.epsilon},
                   {"steps", c.attack.steps},
                   {"schedule_c", c.attack.schedule_c},
                   {"objective", c.attack.objective},
                   {"target", c.attack.target},
                   {"init", c.attack.init},
                   {"init_radius", c.attack.init_radius},
                   {"pgd_step", c.attack.pgd_step},
                   {"queries", c.attack.queries},
                   {"gf_step", c.attack.gf_step}};
    j["analysis"] = {{"prop1_traces", c.analysis.prop1_traces},
                     {"thm1_traces", c.analysis.thm1_traces},
                     {"distortion_examples", c.analysis.distortion_examples},
                     {"landscape_extent", c.analysis.landscape_extent},
                     {"landscape_grid", c.analysis.landscape_grid},
                     {"landscape_example", c.analysis.landscape_example},
                     {"masking_examples", c.analysis.masking_examples},
                     {"counterfactual_examples", c.analysis.counterfactual_examples},
                     {"counterfactual_direction", c.analysis.counterfactual_direction}};
    return j;
}

ExperimentConfig extract(const json& j) {
    ExperimentConfig c;
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.output_dir = j.at("output_dir").get<std::string>();
    c.workers = j.at("workers").get<unsigned>();
    const json& d = j.at("data");
    c.data.kind = d.at("kind").get<std::string>();
    c.data.n = d.at("n").get<std::size_t>();
    c.data.d = d.at("d").get<std::size_t>();
    c.data.classes = d.at("classes").get<int>();
    c.data.noise = d.at("noise").get<double>();
    c.data.images_path = d.at("images_path").get<std::string>();
    c.data.labels_path = d.at("labels_path").get<std::string>();
    c.data.max_n = d.at("max_n").get<std::size_t>();
    c.data.csv_path = d.at("csv_path").get<std::string>();
    c.data.label_column = d.at("label_column").get<std::string>();
    const json& m = j.at("model");
    c.model.layer_dims = m.at("layer_dims").get<std::vector<int>>();
    c.model.activation = m.at("activation").get<std::string>();
    c.model.checkpoint = m.at("checkpoint").get<std::string>();
    c.model.robust_checkpoint = m.at("robust_checkpoint").get<std::string>();
    const json& t = j.at("train");
    c.train.epochs = t.at("epochs").get<int>();
    c.train.batch_size = t.at("batch_size").get<int>();
    c.train.lr_initial = t.at("lr_initial").get<double>();
    c.train.lr_decay_epoch = t.at("lr_decay_epoch").get<int>();
    c.train.lr_decayed = t.at("lr_decayed").get<double>();
    c.train.heldout_fraction = t.at("heldout_fraction").get<double>();
    c.train.adversarial = t.at("adversarial").get<bool>();
    const json& a = j.at("attack");
    c.attack.kind = a.at("kind").get<std::string>();
    c.attack.p = a.at("p").get<std::string>();
    c.attack.epsilon = a.at("epsilon").get<double>();
    c.attack.steps = a.at("steps").get<int>();
    c.attack.schedule_c = a.at("schedule_c").get<double>();
    c.attack.objective = a.at("objective").get<std::string>();
    c.attack.target = a.at("target").get<int>();
    c.attack.init = a.at("init").get<std::string>();
    c.attack.init_radius = a.at("init_radius").get<double>();
    c.attack.pgd_step = a.at("pgd_step").get<double>();
    c.attack.queries = a.at("queries").get<long>();
    c.attack.gf_step = a.at("gf_step").get<double>();
    const json& an = j.at("analysis");
    c.analysis.prop1_traces = an.at("prop1_traces").get<int>();
    c.analysis.thm1_traces = an.at("thm1_traces").get<int>();
    c.analysis.distortion_examples = an.at("distortion_examples").get<int>();
    c.analysis.landscape_extent = an.at("landscape_extent").get<double>();
    c.analysis.landscape_grid = an.at("landscape_grid").get<int>();
    c.analysis.landscape_example = an.at("landscape_example").get<std::size_t>();
    c.analysis.masking_examples = an.at("masking_examples").get<int>();
    c.analysis.counterfactual_examples = an.at("counterfactual_examples").get<int>();
    c.analysis.counterfactual_direction = an.at("counterfactual_direction").get<std::string>();
    return c;
}

std::string kind_name(const json& v) {
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number_float()) return "number";
    if (v.is_string()) return "string";
    if (v.is_boolean()) return "boolean";
    if (v.is_array()) return "array";
    if (v.is_object()) return "object";
    return "null";
}

bool accepts(const json& slot, const json& v, const std::string& key) {
    if (slot.is_object()) return v.is_object();
    if (slot.is_array()) return v.is_array();
    if (slot.is_boolean()) return v.is_boolean();
    // The norm order is stored as a string but "attack.p: 2" should work.
    if (slot.is_string()) return v.is_string() || (key == "p" && v.is_number());
    if (slot.is_number_float()) return v.is_number();
    if (slot.is_number_integer() || slot.is_number_unsigned())
        return v.is_number_integer() || v.is_number_unsigned();
    return false;
}

void merge_into(json& base, const json& incoming, const std::string& prefix) {
    for (auto it = incoming.begin(); it != incoming.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key()))
            throw std::invalid_argument("unknown config key '" + path + "'");
        json& slot = base.at(it.key());
        if (!accepts(slot, it.value(), it.key()))
            throw std::invalid_argument("config key '" + path + "' expects " + kind_name(slot) +
                                        ", got " + kind_name(it.value()));
        if (slot.is_object()) {
            merge_into(slot, it.value(), path);
        } else if (slot.is_string() && it.value().is_number()) {
            slot = it.value().dump();  // numeric norm order like 2 or 1.5
        } else {
            slot = it.value();
        }
    }
}

void apply_override(json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* slot = &doc;
    std::size_t begin = 0;
    while (begin <= path.size()) {
        const std::size_t dot = path.find('.', begin);
        const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        if (!slot->is_object() || !slot->contains(key))
            throw std::invalid_argument("unknown config key '" + path + "'");
        slot = &slot->at(key);
        if (dot == std::string::npos) break;
        begin = dot + 1;
    }

    const std::string context = "config key '" + path + "'";
    if (slot->is_boolean()) {
        if (value == "true" || value == "1")
            *slot = true;
        else if (value == "false" || value == "0")
            *slot = false;
        else
            throw std::invalid_argument(context + " expects a boolean, got '" + value + "'");
    } else if (slot->is_number_float()) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (value.empty() || used != value.size())
            throw std::invalid_argument(context + " expects a number, got '" + value + "'");
        *slot = v;
    } else if (slot->is_number_integer() || slot->is_number_unsigned()) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(value, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (value.empty() || used != value.size() || (slot->is_number_unsigned() && v < 0))
            throw std::invalid_argument(context + " expects an integer, got '" + value + "'");
        if (slot->is_number_unsigned())
            *slot = static_cast<std::uint64_t>(v);
        else
            *slot = v;
    } else if (slot->is_string()) {
        *slot = value;
    } else if (slot->is_array()) {
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::parse_error&) {
            parsed = nullptr;
        }
        if (!parsed.is_array())
            throw std::invalid_argument(context + " expects an array like [2,32,2], got '" +
                                        value + "'");
        *slot = parsed;
    } else {
        throw std::invalid_argument(context + " is not overridable");
    }
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig resolve_config(const std::string& path,
                                const std::vector<std::string>& overrides) {
    json doc = to_json(ExperimentConfig{});
    if (!path.empty()) {
        std::ifstream file(path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot open config '" + path + "'");
        json incoming;
        try {
            incoming = json::parse(file);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("config '" + path + "' is not valid JSON: " + e.what());
        }
        if (!incoming.is_object())
            throw std::runtime_error("config '" + path + "' must be a JSON object");
        merge_into(doc, incoming, "");
    }
    for (const std::string& assignment : overrides) apply_override(doc, assignment);
    return extract(doc);
}

std::vector<std::string> config_errors(const ExperimentConfig& cfg) {
    std::vector<std::string> errors;
    const auto fail = [&errors](const std::string& key, const std::string& message) {
        errors.push_back(key + ": " + message);
    };

    if (cfg.data.kind == "blobs") {
        if (cfg.data.d < 1) fail("data.d", "blobs need d >= 1");
        if (cfg.data.classes < 1) fail("data.classes", "must be >= 1");
        if (cfg.data.n < static_cast<std::size_t>(std::max(1, cfg.data.classes)))
            fail("data.n", "need at least one example per class");
    } else if (cfg.data.kind == "two_moons" || cfg.data.kind == "circles") {
        if (cfg.data.n < 2) fail("data.n", "need at least one example per class");
    } else if (cfg.data.kind == "idx") {
        if (cfg.data.images_path.empty()) fail("data.images_path", "required for kind=idx");
        if (cfg.data.labels_path.empty()) fail("data.labels_path", "required for kind=idx");
    } else if (cfg.data.kind == "csv") {
        if (cfg.data.csv_path.empty()) fail("data.csv_path", "required for kind=csv");
        if (cfg.data.label_column.empty()) fail("data.label_column", "required for kind=csv");
    } else {
        fail("data.kind", "unknown kind '" + cfg.data.kind +
                              "' (expected blobs, two_moons, circles, idx or csv)");
    }
    if (cfg.data.noise < 0.0) fail("data.noise", "must be >= 0");

    if (cfg.model.layer_dims.size() < 2)
        fail("model.layer_dims", "needs at least input and output entries");
    for (int dim : cfg.model.layer_dims)
        if (dim < 1) {
            fail("model.layer_dims", "entries must be positive");
            break;
        }
    try {
        activation_from_name(cfg.model.activation);
    } catch (const std::invalid_argument& e) {
        fail("model.activation", e.what());
    }

    if (cfg.train.epochs < 0) fail("train.epochs", "must be >= 0");
    if (cfg.train.batch_size < 1) fail("train.batch_size", "must be >= 1");
    if (!(cfg.train.lr_initial > 0.0)) fail("train.lr_initial", "must be > 0");
    if (!(cfg.train.lr_decayed > 0.0)) fail("train.lr_decayed", "must be > 0");
    if (cfg.train.lr_decay_epoch < 0) fail("train.lr_decay_epoch", "must be >= 0");
    if (!(cfg.train.heldout_fraction >= 0.0) || cfg.train.heldout_fraction >= 1.0)
        fail("train.heldout_fraction", "must lie in [0, 1)");

    double norm_order = 0.0;
    bool norm_ok = true;
    try {
        norm_order = parse_norm_order(cfg.attack.p);
    } catch (const std::invalid_argument& e) {
        fail("attack.p", e.what());
        norm_ok = false;
    }
    try {
        attack_kind_from_name(cfg.attack.kind);
        if (norm_ok) {
            const AttackKind kind = attack_kind_from_name(cfg.attack.kind);
            const bool inf = std::isinf(norm_order);
            if (kind == AttackKind::pgd && !inf && norm_order != 2.0)
                fail("attack.p", "pgd supports p in {2, inf}");
            if ((kind == AttackKind::fgsm || kind == AttackKind::gradient_free) && !inf)
                fail("attack.p", cfg.attack.kind + " requires p=inf");
        }
    } catch (const std::invalid_argument& e) {
        fail("attack.kind", e.what());
    }
    if (cfg.attack.epsilon < 0.0) fail("attack.epsilon", "must be >= 0");
    if (cfg.attack.steps < 1) fail("attack.steps", "must be >= 1");
    if (!(cfg.attack.schedule_c >= 1.0)) fail("attack.schedule_c", "must be >= 1");
    try {
        objective_from_name(cfg.attack.objective);
    } catch (const std::invalid_argument& e) {
        fail("attack.objective", e.what());
    }
    try {
        const InitKind init = init_from_name(cfg.attack.init);
        if (init != InitKind::zero &&
            (!(cfg.attack.init_radius > 0.0) || cfg.attack.init_radius > cfg.attack.epsilon))
            fail("attack.init_radius", "must lie in (0, epsilon] for random inits");
    } catch (const std::invalid_argument& e) {
        fail("attack.init", e.what());
    }
    if (cfg.attack.target < -1) fail("attack.target", "must be a class index or -1");
    if (cfg.attack.pgd_step < 0.0) fail("attack.pgd_step", "must be >= 0 (0 selects 2*eps/steps)");
    if (cfg.attack.queries < 0) fail("attack.queries", "must be >= 0");
    if (cfg.attack.gf_step < 0.0) fail("attack.gf_step", "must be >= 0 (0 selects epsilon)");

    if (cfg.analysis.prop1_traces < 0) fail("analysis.prop1_traces", "must be >= 0");
    if (cfg.analysis.thm1_traces < 0) fail("analysis.thm1_traces", "must be >= 0");
    if (cfg.analysis.distortion_examples < 1) fail("analysis.distortion_examples", "must be >= 1");
    if (!(cfg.analysis.landscape_extent > 0.0)) fail("analysis.landscape_extent", "must be > 0");
    if (cfg.analysis.landscape_grid < 2) fail("analysis.landscape_grid", "must be >= 2");
    if (cfg.analysis.masking_examples < 1) fail("analysis.masking_examples", "must be >= 1");
    if (cfg.analysis.counterfactual_examples < 1)
        fail("analysis.counterfactual_examples", "must be >= 1");
    try {
        cf_direction_from_name(cfg.analysis.counterfactual_direction);
    } catch (const std::invalid_argument& e) {
        fail("analysis.counterfactual_direction", e.what());
    }
    return errors;
}

void write_resolved_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << to_json(cfg).dump(2) << "\n";
    if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

double parse_norm_order(const std::string& p) {
    if (p == "inf" || p == "Inf" || p == "INF" || p == "infinity")
        return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(p, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != p.size() || p.empty())
        throw std::invalid_argument("norm order '" + p + "' is not a number or 'inf'");
    if (!(value >= 1.0)) throw std::invalid_argument("norm order must be >= 1, got " + p);
    return value;
}

BallSpec ball_from(const AttackSection& attack) {
    return BallSpec(parse_norm_order(attack.p), attack.epsilon);
}

AttackPlan plan_from(const AttackSection& attack) {
    AttackPlan plan;
    plan.kind = attack_kind_from_name(attack.kind);
    plan.config.ball = ball_from(attack);
    plan.config.steps = attack.steps;
    plan.config.schedule_c = attack.schedule_c;
    plan.config.objective.kind = objective_from_name(attack.objective);
    plan.config.objective.target = attack.target;
    plan.config.init = init_from_name(attack.init);
    plan.config.init_radius = attack.init_radius;
    plan.config.pgd_step = attack.pgd_step;
    plan.queries = attack.queries;
    plan.gf_step = attack.gf_step;
    return plan;
}

TrainConfig train_config_from(const ExperimentConfig& cfg) {
    TrainConfig out;
    out.epochs = cfg.train.epochs;
    out.batch_size = cfg.train.batch_size;
    out.lr.initial = cfg.train.lr_initial;
    out.lr.decay_epoch = cfg.train.lr_decay_epoch;
    out.lr.decayed = cfg.train.lr_decayed;
    out.heldout_fraction = cfg.train.heldout_fraction;
    out.master_seed = cfg.master_seed;
    out.workers = cfg.workers;
    if (cfg.train.adversarial) out.attack = plan_from(cfg.attack);
    return out;
}

Dataset load_dataset(const DataSection& data, std::uint64_t master_seed) {
    if (data.kind == "idx") return load_idx(data.images_path, data.labels_path, data.max_n);
    if (data.kind == "csv") return load_csv_dataset(data.csv_path, data.label_column);
    const SynthKind kind = synth_kind_from_name(data.kind);
    return synth_dataset(kind, data.n, data.d, data.classes, data.noise,
                         SeededRng(master_seed, kStreamData));
}

}  // namespace fwrobust
