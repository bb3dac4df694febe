#include "hcg/debias.hpp"
#include "hcg/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace hcg;

namespace {

Matrix random_design(int n, int k, Rng& rng) {
    Matrix x(n, k);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < k; ++c) x(r, c) = rng.normal();
    return x;
}

}  // namespace

TEST_CASE("lasso at lambda=0 matches the normal-equations solution") {
    Rng rng(201);
    const int n = 300, k = 4;
    const Matrix x = random_design(n, k, rng);
    Vector beta_true(k);
    beta_true << 1.0, -0.5, 0.0, 2.0;
    Vector y = x * beta_true;
    for (int r = 0; r < n; ++r) y(r) += 0.1 * rng.normal();

    const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    const Vector fit = lasso(x, y, 0.0);
    CHECK((fit - ols).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("soft-threshold closed form on a standardized single predictor") {
    Rng rng(203);
    const int n = 20000;
    Matrix x = random_design(n, 1, rng);
    // standardize so that x'x/n = 1 exactly
    x.col(0).array() -= x.col(0).mean();
    x.col(0) /= std::sqrt(x.col(0).squaredNorm() / n);
    // response with OLS coefficient exactly 1.0 by construction
    const Vector y = x.col(0);
    CHECK(lasso(x, y, 0.0)(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(lasso(x, y, 0.3)(0) == doctest::Approx(0.7).epsilon(1e-8));
}

TEST_CASE("penalties at or above lambda_max zero every coefficient") {
    Rng rng(207);
    const int n = 200, k = 5;
    const Matrix x = random_design(n, k, rng);
    Vector y = x.col(0) - 2.0 * x.col(3);
    for (int r = 0; r < n; ++r) y(r) += 0.05 * rng.normal();

    const double lmax = lasso_lambda_max(x, y);
    CHECK(lasso(x, y, lmax).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lasso(x, y, 2.0 * lmax).cwiseAbs().maxCoeff() == 0.0);
    CHECK(lasso(x, y, 0.9 * lmax).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("lasso rejects non-finite inputs") {
    Matrix x = Matrix::Ones(5, 2);
    Vector y = Vector::Ones(5);
    x(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(lasso(x, y, 0.1), std::invalid_argument);
    x(1, 0) = 1.0;
    y(2) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(lasso(x, y, 0.1), std::invalid_argument);
}

TEST_CASE("empty skeleton refits to the zero graph") {
    ScenarioSpec spec = scenario_preset("S3");
    spec.seed = 5;
    spec.n = 200;
    const ScenarioDraw draw = draw_scenario(spec);
    const Skeleton empty(draw.data.layout);
    const WeightedGraph refitted = refit(draw.data, empty);
    CHECK(refitted.b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("true-skeleton refit recovers coefficients within 0.1") {
    ScenarioSpec spec = scenario_preset("S3");
    spec.seed = 7;
    spec.n = 1000;
    const ScenarioDraw draw = draw_scenario(spec);
    const Skeleton truth_skel = threshold_graph(draw.truth, 0.0);

    const WeightedGraph refitted = refit(draw.data, truth_skel);
    double max_err = 0.0;
    for (int i = 0; i < draw.truth.layout.size(); ++i)
        for (int j = 0; j < draw.truth.layout.size(); ++j)
            if (truth_skel.e(i, j))
                max_err = std::max(max_err, std::abs(refitted.b(i, j) - draw.truth.b(i, j)));
    CHECK(max_err < 0.1);
}

TEST_CASE("refit support is contained in the skeleton") {
    ScenarioSpec spec = scenario_preset("S2");
    spec.seed = 9;
    spec.n = 400;
    const ScenarioDraw draw = draw_scenario(spec);
    const Skeleton skel = threshold_graph(draw.truth, 0.0);
    const WeightedGraph refitted = refit(draw.data, skel);
    for (int i = 0; i < skel.layout.size(); ++i)
        for (int j = 0; j < skel.layout.size(); ++j)
            if (!skel.e(i, j)) CHECK(refitted.b(i, j) == 0.0);
    CHECK(check_dag(refitted));
}

TEST_CASE("lambda_frac -> 0 recovers per-node least squares on parents") {
    ScenarioSpec spec = scenario_preset("S3");
    spec.seed = 11;
    spec.n = 500;
    const ScenarioDraw draw = draw_scenario(spec);
    const Skeleton skel = threshold_graph(draw.truth, 0.0);

    LassoConfig cfg;
    cfg.lambda_frac = 0.0;
    const WeightedGraph refitted = refit(draw.data, skel, cfg);

    const BlockLayout& l = skel.layout;
    for (int j = 0; j < l.size(); ++j) {
        std::vector<int> parents;
        for (int i = 0; i < l.size(); ++i)
            if (skel.e(i, j)) parents.push_back(i);
        if (parents.empty()) continue;
        Matrix design(draw.data.rows(), parents.size());
        for (size_t c = 0; c < parents.size(); ++c)
            design.col(c) = draw.data.values.col(parents[c]);
        const Vector ols = (design.transpose() * design)
                               .ldlt()
                               .solve(design.transpose() * draw.data.values.col(j));
        for (size_t c = 0; c < parents.size(); ++c)
            CHECK(std::abs(refitted.b(parents[c], j) - ols(c)) < 1e-6);
    }
}

TEST_CASE("config validation rejects out-of-range values") {
    LassoConfig cfg;
    cfg.lambda_frac = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lambda_frac = -0.1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = LassoConfig{};
    cfg.tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
