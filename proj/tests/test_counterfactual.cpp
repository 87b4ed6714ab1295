#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <stdexcept>

#include "fwrobust/counterfactual.hpp"
#include "fwrobust/csv.hpp"
#include "fwrobust/model.hpp"
#include "fwrobust/numerics.hpp"

using namespace fwrobust;

namespace {

MlpModel net(std::uint64_t seed = 13) {
    return make_mlp({4, 10, 3}, Activation::softplus, SeededRng(seed, 0));
}

}  // namespace

TEST_CASE("p=1 counterfactuals touch at most K coordinates") {
    MlpModel m = net();
    SeededRng rng(70, 0);
    for (int rep = 0; rep < 15; ++rep) {
        Vec x(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        int y = static_cast<int>(rng.uniform_index(3));
        int K = 1 + static_cast<int>(rng.uniform_index(3));  // K < d = 4
        CounterfactualResult r = generate_counterfactual(m, x, y, CfDirection::maximize,
                                                         l1_ball(0.5), K, 2.0);
        CHECK(r.nonzero_coordinate_count <= K);
        CHECK(lp_norm(r.delta, 1.0) <= 0.5 * (1 + 1e-9));
    }
}

TEST_CASE("maximize raises the loss, minimize lowers it") {
    MlpModel m = net(14);
    SeededRng rng(71, 0);
    for (int rep = 0; rep < 15; ++rep) {
        Vec x(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        int y = static_cast<int>(rng.uniform_index(3));
        for (double p : {1.0, 2.0}) {
            CounterfactualResult up = generate_counterfactual(m, x, y, CfDirection::maximize,
                                                              BallSpec(p, 0.4), 8, 2.0);
            CounterfactualResult down = generate_counterfactual(m, x, y, CfDirection::minimize,
                                                                BallSpec(p, 0.4), 8, 2.0);
            CHECK(up.loss_before == down.loss_before);
            CHECK(up.loss_after >= up.loss_before - 1e-9);
            CHECK(down.loss_after <= down.loss_before + 1e-9);
        }
    }
}

TEST_CASE("a zero budget leaves the prediction and loss unchanged") {
    MlpModel m = net(15);
    Vec x{0.3, -0.2, 0.6, -0.5};
    CounterfactualResult r =
        generate_counterfactual(m, x, 1, CfDirection::maximize, l2_ball(0.0), 5, 2.0);
    CHECK(r.delta == Vec(4, 0.0));
    CHECK(r.nonzero_coordinate_count == 0);
    CHECK(r.perturbed_prediction == r.original_prediction);
    CHECK(r.loss_after == r.loss_before);
}

TEST_CASE("result bookkeeping matches direct recomputation") {
    MlpModel m = net(16);
    Vec x{0.5, 0.5, -0.5, 0.2};
    CounterfactualResult r =
        generate_counterfactual(m, x, 2, CfDirection::maximize, l2_ball(0.3), 6, 2.0);
    CHECK(r.label == 2);
    CHECK(r.original_prediction == predict(m, x));
    Vec moved(x);
    for (std::size_t i = 0; i < x.size(); ++i) moved[i] += r.delta[i];
    CHECK(r.perturbed_prediction == predict(m, moved));
    CHECK(r.loss_before == doctest::Approx(cross_entropy(m, x, 2)).epsilon(1e-15));
    CHECK(r.loss_after == doctest::Approx(cross_entropy(m, moved, 2)).epsilon(1e-15));
    CHECK(l2_norm(r.delta) <= 0.3 * (1 + 1e-9));
}

TEST_CASE("unsupported norms are rejected") {
    MlpModel m = net(17);
    Vec x{0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(generate_counterfactual(m, x, 0, CfDirection::maximize, linf_ball(0.1),
                                            5, 2.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_counterfactual(m, x, 0, CfDirection::minimize, BallSpec(3.0, 0.1),
                                            5, 2.0),
                    std::invalid_argument);
}

TEST_CASE("direction names round-trip") {
    CHECK(cf_direction_from_name("maximize") == CfDirection::maximize);
    CHECK(cf_direction_from_name("minimize") == CfDirection::minimize);
    CHECK(cf_direction_name(CfDirection::minimize) == "minimize");
    CHECK_THROWS_AS(cf_direction_from_name("sideways"), std::invalid_argument);
}

TEST_CASE("report rows carry the norms and predictions") {
    MlpModel m = net(18);
    std::vector<CounterfactualResult> results;
    SeededRng rng(72, 0);
    for (int rep = 0; rep < 3; ++rep) {
        Vec x(4);
        for (auto& v : x) v = rng.uniform(-1.0, 1.0);
        results.push_back(generate_counterfactual(m, x, 0, CfDirection::minimize,
                                                  l1_ball(0.3), 2, 2.0));
    }
    const std::string path = "/tmp/fwrobust_cf_report_test.csv";
    write_counterfactual_report(results, path);
    CsvTable table = read_csv(path);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.header[0] == "label");
    CHECK(table.header[6] == "nonzero_count");
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(table.rows[i][3] == "minimize");
        CHECK(std::stod(table.rows[i][4]) ==
              doctest::Approx(lp_norm(results[i].delta, 1.0)).epsilon(1e-15));
        CHECK(std::stoi(table.rows[i][6]) == results[i].nonzero_coordinate_count);
    }
    std::remove(path.c_str());
}
