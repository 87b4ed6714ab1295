#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fwrobust/attacks.hpp"
#include "fwrobust/ball.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/numerics.hpp"

using namespace fwrobust;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Two-class linear net whose UM objective for y=0 is exactly g.x + const,
// so the input gradient is the constant vector g everywhere.
MlpModel linear_toy(const Vec& g) {
    MlpModel m;
    m.layer_dims = {static_cast<int>(g.size()), 2};
    m.weights = {Matrix(2, g.size())};
    for (std::size_t i = 0; i < g.size(); ++i) m.weights[0](1, i) = g[i];
    m.biases = {Vec{0.0, 0.0}};
    return m;
}

AttackConfig toy_config(double p, double eps, int steps, double c = 2.0) {
    AttackConfig cfg;
    cfg.ball = BallSpec(p, eps);
    cfg.steps = steps;
    cfg.schedule_c = c;
    cfg.objective = ObjectiveSpec{ObjectiveKind::UM, -1};
    return cfg;
}

MlpModel small_net(std::uint64_t seed = 10) {
    return make_mlp({4, 12, 3}, Activation::softplus, SeededRng(seed, 0));
}

}  // namespace

TEST_CASE("schedule_gamma values and validation") {
    CHECK(schedule_gamma(0, 1.0) == 1.0);
    CHECK(schedule_gamma(0, 5.0) == 1.0);  // gamma_0 = 1 for every c
    CHECK(schedule_gamma(1, 2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(schedule_gamma(2, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(schedule_gamma(-1, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(schedule_gamma(0, 0.5), std::invalid_argument);
}

TEST_CASE("attack_config_errors reports every violation at once") {
    AttackConfig ok;
    CHECK(attack_config_errors(ok).empty());

    AttackConfig bad;
    bad.steps = 0;
    bad.schedule_c = 0.25;
    bad.init = InitKind::uniform_box;
    bad.init_radius = 0.0;
    auto errors = attack_config_errors(bad);
    CHECK(errors.size() == 3);

    AttackConfig target_bad;
    target_bad.objective = ObjectiveSpec{ObjectiveKind::TL, -1};
    CHECK(attack_config_errors(target_bad).empty());  // -1 means sample later
}

TEST_CASE("fw_gap equals eps*||g||_q - <delta, g> on the linear toy") {
    Vec g{1.0, -2.0, 0.5};
    MlpModel m = linear_toy(g);
    Vec x{0.1, 0.2, -0.3};
    ObjectiveSpec obj{ObjectiveKind::UM, -1};
    for (double p : {1.0, 1.5, 2.0, kInf}) {
        BallSpec ball(p, 0.2);
        double at_zero = fw_gap(m, x, 0, Vec{0.0, 0.0, 0.0}, ball, obj);
        CHECK(at_zero == doctest::Approx(0.2 * lp_norm(g, ball.dual_exponent()))
                             .epsilon(1e-12));
        // At the maximizer the gap vanishes.
        Vec star = lmo(g, ball).direction;
        CHECK(fw_gap(m, x, 0, star, ball, obj) == doctest::Approx(0.0).epsilon(1e-12));
    }
    CHECK(fw_gap(m, x, 0, Vec{0.0, 0.0, 0.0}, BallSpec(2.0, 0.0), obj) == 0.0);
    CHECK_THROWS_AS(fw_gap(m, x, 0, Vec{1.0, 1.0, 1.0}, linf_ball(0.1), obj),
                    std::invalid_argument);  // infeasible delta
}

TEST_CASE("fw_attack trace has the documented shape and invariants") {
    MlpModel m = small_net();
    Vec x{0.3, -0.2, 0.8, 0.1};
    const int K = 7;
    AttackConfig cfg = toy_config(kInf, 0.15, K);
    cfg.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    AttackResult res = fw_attack(m, x, 1, cfg, SeededRng(5, 1));

    REQUIRE(res.trace.iterates.size() == K + 1);
    CHECK(res.trace.lmo_outputs.size() == K);
    CHECK(res.trace.fw_gaps.size() == K + 1);
    CHECK(res.trace.objective_values.size() == K + 1);
    CHECK(res.trace.schedule_coefficients.size() == K);
    CHECK(res.trace.signed_gradients.size() == K);  // p = inf
    CHECK(res.trace.iterates.front() == Vec(4, 0.0));
    CHECK(res.trace.iterates.back() == res.delta);
    for (const Vec& it : res.trace.iterates) CHECK(contains(it, cfg.ball, 1e-9));
    for (double gap : res.trace.fw_gaps) CHECK(gap >= -1e-9);
    double total = 0.0;
    for (double a : res.trace.schedule_coefficients) {
        CHECK(a > 0.0);
        total += a;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    AttackConfig l2cfg = toy_config(2.0, 0.15, K);
    AttackResult l2res = fw_attack(m, x, 1, l2cfg, SeededRng(5, 1));
    CHECK(l2res.trace.signed_gradients.empty());  // finite p records no sign vectors
}

TEST_CASE("fw_attack on the linear toy jumps to the vertex and stays") {
    Vec g{1.0, -2.0, 0.5};
    MlpModel m = linear_toy(g);
    Vec x{0.0, 0.0, 0.0};
    for (double p : {1.0, 2.0, kInf}) {
        AttackConfig cfg = toy_config(p, 0.25, 6);
        AttackResult res = fw_attack(m, x, 0, cfg, SeededRng(1, 1));
        Vec star = lmo(g, BallSpec(p, 0.25)).direction;
        // gamma_0 = 1 makes iterate 1 the vertex exactly; later convex
        // combinations of the vertex with itself can wobble by an ulp.
        CHECK(res.trace.iterates[1] == star);
        for (std::size_t i = 0; i < star.size(); ++i)
            CHECK(res.delta[i] == doctest::Approx(star[i]).epsilon(1e-14));
        CHECK(res.trace.fw_gaps[0] ==
              doctest::Approx(0.25 * lp_norm(g, BallSpec(p, 0.25).dual_exponent()))
                  .epsilon(1e-12));
        CHECK(res.trace.fw_gaps.back() <= res.trace.fw_gaps.front());
        CHECK(std::abs(res.trace.fw_gaps.back()) < 1e-12);
    }
}

TEST_CASE("random inits start feasible and the first step erases them") {
    MlpModel m = small_net(3);
    Vec x{0.1, 0.1, -0.1, 0.4};
    AttackConfig cfg = toy_config(kInf, 0.1, 4);
    cfg.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    cfg.init = InitKind::uniform_box;
    cfg.init_radius = 0.1;  // box radius = eps, feasible draw for p=inf

    AttackResult a = fw_attack(m, x, 0, cfg, SeededRng(9, 9));
    CHECK(contains(a.trace.iterates[0], cfg.ball, 1e-9));
    CHECK(a.trace.iterates[0] != Vec(4, 0.0));

    // An L2-sphere draw exceeds the L1 ball almost surely, so the start is
    // pulled back radially to the boundary.
    AttackConfig cross = toy_config(1.0, 0.1, 4);
    cross.objective = cfg.objective;
    cross.init = InitKind::gaussian_sphere;
    cross.init_radius = 0.1;
    AttackResult b = fw_attack(m, x, 0, cross, SeededRng(9, 9));
    CHECK(contains(b.trace.iterates[0], cross.ball, 1e-9));
    CHECK(lp_norm(b.trace.iterates[0], 1.0) == doctest::Approx(0.1).epsilon(1e-9));

    // gamma_0 = 1: iterate 1 is the lmo of the gradient at the init, i.e. a
    // vertex, independent of where the init sat.
    CHECK(a.trace.iterates[1] == a.trace.lmo_outputs[0]);
}

TEST_CASE("fgsm equals one-step FW and the direct signed-gradient formula") {
    MlpModel m = small_net(21);
    SeededRng rng(50, 0);
    for (int rep = 0; rep < 20; ++rep) {
        Vec x(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        int y = static_cast<int>(rng.uniform_index(3));
        AttackConfig cfg = toy_config(kInf, 0.12, 1);
        cfg.objective = ObjectiveSpec{ObjectiveKind::UL, -1};

        AttackResult fgsm = fgsm_attack(m, x, y, cfg);
        AttackResult fw1 = fw_attack(m, x, y, cfg, SeededRng(0, 0));
        CHECK(fgsm.delta == fw1.delta);  // bitwise

        ObjectiveEval eval = objective_value_and_input_gradient(m, x, y, cfg.objective);
        for (std::size_t i = 0; i < x.size(); ++i) {
            double s = eval.input_gradient[i] > 0 ? 1.0 : (eval.input_gradient[i] < 0 ? -1.0 : 0.0);
            CHECK(fgsm.delta[i] == 0.12 * s);
        }
    }
    AttackConfig l2 = toy_config(2.0, 0.1, 1);
    CHECK_THROWS_AS(fgsm_attack(m, Vec{0, 0, 0, 0}, 0, l2), std::invalid_argument);
}

TEST_CASE("eps=0 attacks return the zero perturbation") {
    MlpModel m = small_net(4);
    Vec x{0.2, 0.2, 0.2, 0.2};
    AttackConfig cfg = toy_config(kInf, 0.0, 5);
    cfg.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    CHECK(fw_attack(m, x, 2, cfg, SeededRng(0, 0)).delta == Vec(4, 0.0));
    CHECK(pgd_attack(m, x, 2, cfg, SeededRng(0, 0)).delta == Vec(4, 0.0));
    GradientFreeResult gf =
        gradient_free_attack(m, x, 2, linf_ball(0.0), 50, 0.1, SeededRng(0, 0),
                             ObjectiveSpec{ObjectiveKind::UL, -1});
    CHECK(gf.delta == Vec(4, 0.0));
}

TEST_CASE("pgd reaches the corner on the linear toy") {
    Vec g{1.0, -2.0, 0.5};
    MlpModel m = linear_toy(g);
    Vec x{0.0, 0.0, 0.0};

    // p = inf: constant sign direction, step 2eps/K, so K steps travel
    // 2*eps per coordinate and clamp at eps*sgn(g).
    AttackConfig cfg = toy_config(kInf, 0.2, 5);
    AttackResult res = pgd_attack(m, x, 0, cfg, SeededRng(0, 0));
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(res.delta[i] == doctest::Approx(0.2 * (g[i] > 0 ? 1.0 : -1.0)).epsilon(1e-12));
    CHECK(res.trace.schedule_coefficients.empty());
    CHECK(res.trace.signed_gradients.size() == 5);
    CHECK(res.trace.iterates.size() == 6);
    for (const Vec& it : res.trace.iterates) CHECK(contains(it, cfg.ball, 1e-9));

    // p = 2: normalized-gradient steps end on the sphere at eps*g/||g||.
    AttackConfig l2cfg = toy_config(2.0, 0.2, 5);
    AttackResult l2res = pgd_attack(m, x, 0, l2cfg, SeededRng(0, 0));
    double gn = l2_norm(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(l2res.delta[i] == doctest::Approx(0.2 * g[i] / gn).epsilon(1e-10));
    CHECK(l2res.trace.signed_gradients.empty());

    // Custom step overrides the default.
    AttackConfig custom = toy_config(kInf, 0.2, 1);
    custom.pgd_step = 0.05;
    AttackResult small = pgd_attack(m, x, 0, custom, SeededRng(0, 0));
    CHECK(small.delta[0] == doctest::Approx(0.05).epsilon(1e-12));

    AttackConfig unsupported = toy_config(1.5, 0.2, 5);
    CHECK_THROWS_AS(pgd_attack(m, x, 0, unsupported, SeededRng(0, 0)), std::invalid_argument);
}

TEST_CASE("gradient-free attack respects the query budget exactly") {
    MlpModel m = small_net(6);
    Vec x{0.5, -0.5, 0.2, 0.0};
    ObjectiveSpec obj{ObjectiveKind::UL, -1};

    GradientFreeResult none =
        gradient_free_attack(m, x, 0, linf_ball(0.1), 0, 0.1, SeededRng(1, 1), obj);
    CHECK(none.delta == Vec(4, 0.0));
    CHECK(none.query_count == 0);

    for (long budget : {1L, 2L, 5L, 17L, 100L}) {
        GradientFreeResult r =
            gradient_free_attack(m, x, 0, linf_ball(0.1), budget, 0.1, SeededRng(1, 1), obj);
        CHECK(r.query_count <= budget);
        CHECK(contains(r.delta, linf_ball(0.1), 1e-12));
    }
}

TEST_CASE("gradient-free attack never decreases the objective") {
    MlpModel m = small_net(7);
    SeededRng rng(60, 0);
    ObjectiveSpec obj{ObjectiveKind::UL, -1};
    for (int rep = 0; rep < 10; ++rep) {
        Vec x(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        int y = static_cast<int>(rng.uniform_index(3));
        GradientFreeResult r =
            gradient_free_attack(m, x, y, linf_ball(0.2), 300, 0.05, SeededRng(rep, 2), obj);
        Vec moved(x);
        for (std::size_t i = 0; i < x.size(); ++i) moved[i] += r.delta[i];
        CHECK(objective_value(m, moved, y, obj) >= objective_value(m, x, y, obj));
    }
}

TEST_CASE("gradient-free attack finds the FGSM corner on the linear toy") {
    Vec g{1.0, -2.0, 0.5};
    MlpModel m = linear_toy(g);
    Vec x{0.0, 0.0, 0.0};
    // Budget 1 + 2d covers the baseline plus both probes per coordinate.
    GradientFreeResult r = gradient_free_attack(m, x, 0, linf_ball(0.1), 7, 0.1,
                                                SeededRng(3, 3),
                                                ObjectiveSpec{ObjectiveKind::UM, -1});
    CHECK(r.delta == Vec{0.1, -0.1, 0.1});
    CHECK(r.query_count <= 7);
}

TEST_CASE("sample_random_target skips y and is uniform over the rest") {
    SeededRng two(1, 1);
    for (int rep = 0; rep < 20; ++rep) CHECK(sample_random_target(two, 0, 2) == 1);
    for (int rep = 0; rep < 20; ++rep) CHECK(sample_random_target(two, 1, 2) == 0);

    SeededRng rng(2, 2);
    const int draws = 100000;
    std::vector<int> counts(10, 0);
    for (int i = 0; i < draws; ++i) {
        int r = sample_random_target(rng, 3, 10);
        REQUIRE(r != 3);
        REQUIRE(r >= 0);
        REQUIRE(r < 10);
        ++counts[r];
    }
    // Nine classes at expected frequency 1/9, about 0.1111; the band is
    // well beyond five binomial sigmas.
    for (int cls = 0; cls < 10; ++cls) {
        if (cls == 3) continue;
        double freq = static_cast<double>(counts[cls]) / draws;
        CHECK(freq > 0.105);
        CHECK(freq < 0.117);
    }
    CHECK_THROWS_AS(sample_random_target(rng, 0, 1), std::invalid_argument);
}

TEST_CASE("attacks are deterministic given the rng key") {
    MlpModel m = small_net(8);
    Vec x{0.4, 0.1, -0.6, 0.3};
    AttackConfig cfg = toy_config(kInf, 0.1, 6);
    cfg.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    cfg.init = InitKind::gaussian_sphere;
    cfg.init_radius = 0.05;

    CHECK(fw_attack(m, x, 1, cfg, SeededRng(11, 4)).delta ==
          fw_attack(m, x, 1, cfg, SeededRng(11, 4)).delta);
    CHECK(gradient_free_attack(m, x, 1, linf_ball(0.1), 80, 0.02, SeededRng(11, 5),
                               cfg.objective)
              .delta ==
          gradient_free_attack(m, x, 1, linf_ball(0.1), 80, 0.02, SeededRng(11, 5),
                               cfg.objective)
              .delta);
}

TEST_CASE("attack_delta dispatches each kind and samples missing targets") {
    MlpModel m = small_net(9);
    Vec x{0.3, 0.3, -0.3, 0.2};

    AttackPlan plan;
    plan.kind = AttackKind::fgsm;
    plan.config = toy_config(kInf, 0.08, 1);
    plan.config.objective = ObjectiveSpec{ObjectiveKind::UL, -1};
    CHECK(attack_delta(m, x, 2, plan, SeededRng(0, 7)) ==
          fgsm_attack(m, x, 2, plan.config).delta);

    plan.kind = AttackKind::fw;
    plan.config.steps = 5;
    CHECK(attack_delta(m, x, 2, plan, SeededRng(0, 7)) ==
          fw_attack(m, x, 2, plan.config, SeededRng(0, 7)).delta);

    plan.kind = AttackKind::gradient_free;
    plan.queries = 40;
    plan.gf_step = 0.0;  // defaults to eps
    Vec gf = attack_delta(m, x, 2, plan, SeededRng(0, 7));
    CHECK(contains(gf, plan.config.ball, 1e-12));

    // TL with target -1: the dispatcher samples a class != y.
    plan.kind = AttackKind::fw;
    plan.config.objective = ObjectiveSpec{ObjectiveKind::TL, -1};
    Vec tl = attack_delta(m, x, 2, plan, SeededRng(0, 8));
    CHECK(tl.size() == 4);
    CHECK(contains(tl, plan.config.ball, 1e-9));
    CHECK(attack_delta(m, x, 2, plan, SeededRng(0, 8)) == tl);  // deterministic
}

TEST_CASE("attack kind names round-trip, with simba as an alias") {
    CHECK(attack_kind_from_name("fw") == AttackKind::fw);
    CHECK(attack_kind_from_name("pgd") == AttackKind::pgd);
    CHECK(attack_kind_from_name("fgsm") == AttackKind::fgsm);
    CHECK(attack_kind_from_name("gradient_free") == AttackKind::gradient_free);
    CHECK(attack_kind_from_name("simba") == AttackKind::gradient_free);
    CHECK_THROWS_AS(attack_kind_from_name("cw"), std::invalid_argument);
    CHECK(attack_kind_name(AttackKind::gradient_free) == "gradient_free");
}
