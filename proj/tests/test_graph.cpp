#include "hcg/graph.hpp"
#include "hcg/rng.hpp"
#include "hcg/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace hcg;

namespace {

// Central-difference oracle for the acyclicity gradient.
Matrix fd_acyclicity_gradient(const WeightedGraph& g, double t, double step) {
    const int w = g.layout.size();
    Matrix grad(w, w);
    for (int i = 0; i < w; ++i) {
        for (int j = 0; j < w; ++j) {
            WeightedGraph up = g, down = g;
            up.b(i, j) += step;
            down.b(i, j) -= step;
            grad(i, j) =
                (acyclicity_value(up, t) - acyclicity_value(down, t)) / (2.0 * step);
        }
    }
    return grad;
}

Parameters random_parameters(int p, int s, Rng& rng, bool with_interactions = true) {
    Parameters params(p, s);
    auto u = [&]() { return 2.0 * rng.uniform() - 1.0; };
    for (int j = 0; j < p; ++j) {
        params.delta_x(j) = u();
        params.gamma_x(j) = u();
        if (with_interactions) params.gamma_xa(j) = u();
    }
    params.gamma_a = u();
    for (int i = 0; i < s; ++i) {
        params.beta_a(i) = u();
        params.gamma_m(i) = u();
        for (int j = 0; j < p; ++j) {
            params.b_x(j, i) = u();
            if (with_interactions) params.b_xa(j, i) = u();
        }
        for (int k = 0; k < i; ++k)
            if (rng.uniform() < 0.5) params.b_m(k, i) = u();
    }
    return params;
}

}  // namespace

TEST_CASE("block layout indices cover the node range disjointly") {
    const BlockLayout l(3, 4);
    CHECK(l.size() == 2 * 3 + 4 + 2);
    int x = 0, a = 0, xa = 0, m = 0, y = 0;
    for (int i = 0; i < l.size(); ++i) {
        x += l.is_x(i);
        a += l.is_a(i);
        xa += l.is_xa(i);
        m += l.is_m(i);
        y += l.is_y(i);
        CHECK(l.is_x(i) + l.is_a(i) + l.is_xa(i) + l.is_m(i) + l.is_y(i) == 1);
    }
    CHECK(x == 3);
    CHECK(a == 1);
    CHECK(xa == 3);
    CHECK(m == 4);
    CHECK(y == 1);
    CHECK(l.node_name(0) == "X1");
    CHECK(l.node_name(l.a_index()) == "A");
    CHECK(l.node_name(l.xa_begin()) == "XA1");
    CHECK(l.node_name(l.m_begin() + 3) == "M4");
    CHECK(l.node_name(l.y_index()) == "Y");
    CHECK_THROWS_AS(BlockLayout(0, 2), std::invalid_argument);
}

TEST_CASE("structural report on the zero matrix is all zero") {
    const WeightedGraph g(BlockLayout(2, 3));
    const StructuralReport rep = structural_report(g);
    CHECK(rep.g1 == 0.0);
    CHECK(rep.g2 == 0.0);
    CHECK(rep.g3 == 0.0);
    CHECK(rep.g4 == 0.0);
    CHECK(rep.h2 == 0.0);
    CHECK(rep.valid());
}

TEST_CASE("structural report flags a single A -> X edge as g1") {
    const BlockLayout l(2, 3);
    WeightedGraph g(l);
    g.b(l.a_index(), 0) = 1.0;  // A -> X1
    const StructuralReport rep = structural_report(g);
    CHECK(rep.g1 == 1.0);
    CHECK(rep.h2 == 1.0);
    CHECK_FALSE(rep.valid());
}

TEST_CASE("structural report isolates each forbidden block") {
    const BlockLayout l(2, 2);
    WeightedGraph g(l);
    g.b(l.m_begin(), l.a_index()) = 0.5;   // M1 -> A: g2
    g.b(l.y_index(), l.m_begin()) = 2.0;   // Y -> M1: g3
    g.b(0, l.xa_begin() + 1) = -1.5;       // X1 -> XA2: g4
    const StructuralReport rep = structural_report(g);
    CHECK(rep.g1 == 0.0);
    CHECK(rep.g2 == doctest::Approx(0.5));
    CHECK(rep.g3 == doctest::Approx(2.0));
    CHECK(rep.g4 == doctest::Approx(1.5));
    CHECK(rep.h2 == doctest::Approx(4.0));
}

TEST_CASE("generated scenario graphs are structurally valid by construction") {
    for (const std::string& id : scenario_preset_ids()) {
        ScenarioSpec spec = scenario_preset(id);
        if (spec.s > 10) continue;  // keep the loop quick
        Rng rng(7);
        const WeightedGraph g = gen_true_graph(spec, rng);
        CHECK(structural_report(g).h2 == 0.0);
        CHECK(acyclicity_value(g, 1.0 / g.layout.size()) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(check_dag(g));
    }
}

TEST_CASE("acyclicity of the zero matrix vanishes for any layout") {
    CHECK(acyclicity_value(WeightedGraph(BlockLayout(1, 0)), 1.0) == 0.0);
    CHECK(acyclicity_value(WeightedGraph(BlockLayout(2, 6)), 0.1) == 0.0);
}

TEST_CASE("acyclicity of a 2x2 unit cycle equals 2 at t=1") {
    // I + B.^2 = [[1,1],[1,1]]; squared is [[2,2],[2,2]], trace 4, minus 2.
    Matrix b = Matrix::Zero(2, 2);
    b(0, 1) = 1.0;
    b(1, 0) = 1.0;
    CHECK(acyclicity_matrix_value(b, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("acyclicity is positive on random 2- and 3-cycles") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const BlockLayout l(2, 4);
        WeightedGraph g(l);
        const int m0 = l.m_begin() + static_cast<int>(rng.uniform_index(4));
        int m1 = l.m_begin() + static_cast<int>(rng.uniform_index(4));
        while (m1 == m0) m1 = l.m_begin() + static_cast<int>(rng.uniform_index(4));
        const double w01 = rng.uniform() + 0.1, w10 = rng.uniform() + 0.1;
        g.b(m0, m1) = w01;
        g.b(m1, m0) = w10;
        CHECK(acyclicity_value(g, 1.0 / l.size()) > 0.0);
        CHECK_FALSE(check_dag(g));

        if (rep % 2 == 0) {
            int m2 = l.m_begin() + static_cast<int>(rng.uniform_index(4));
            while (m2 == m0 || m2 == m1) m2 = l.m_begin() + static_cast<int>(rng.uniform_index(4));
            WeightedGraph g3(l);
            g3.b(m0, m1) = w01;
            g3.b(m1, m2) = w10;
            g3.b(m2, m0) = rng.uniform() + 0.1;
            CHECK(acyclicity_value(g3, 1.0 / l.size()) > 0.0);
            CHECK_FALSE(check_dag(g3));
        }
    }
}

TEST_CASE("acyclicity gradient matches central finite differences") {
    Rng rng(23);
    for (int rep = 0; rep < 4; ++rep) {
        const BlockLayout l(1, 1);  // w = 5
        WeightedGraph g(l);
        for (int i = 0; i < l.size(); ++i)
            for (int j = 0; j < l.size(); ++j)
                g.b(i, j) = 0.6 * (2.0 * rng.uniform() - 1.0);
        const double t = 0.8;
        const AcyclicityResult res = acyclicity(g, t);
        const Matrix fd = fd_acyclicity_gradient(g, t, 1e-6);
        for (int i = 0; i < l.size(); ++i)
            for (int j = 0; j < l.size(); ++j) {
                const double scale = std::max(1.0, std::abs(fd(i, j)));
                CHECK(std::abs(res.gradient(i, j) - fd(i, j)) / scale < 1e-5);
            }
    }
}

TEST_CASE("acyclicity gradient matches finite differences up to w=12") {
    Rng rng(29);
    const BlockLayout l(2, 6);  // w = 12
    WeightedGraph g(l);
    for (int i = 0; i < l.size(); ++i)
        for (int j = 0; j < l.size(); ++j)
            g.b(i, j) = 0.4 * (2.0 * rng.uniform() - 1.0);
    const double t = 1.0 / l.size();
    const AcyclicityResult res = acyclicity(g, t);
    const Matrix fd = fd_acyclicity_gradient(g, t, 1e-6);
    for (int i = 0; i < l.size(); ++i)
        for (int j = 0; j < l.size(); ++j) {
            const double scale = std::max(1.0, std::abs(fd(i, j)));
            CHECK(std::abs(res.gradient(i, j) - fd(i, j)) / scale < 1e-5);
        }
}

TEST_CASE("acyclicity overflows loudly on extreme entries") {
    const BlockLayout l(2, 6);
    WeightedGraph g(l);
    g.b.setConstant(1e200);
    CHECK_THROWS_AS(acyclicity_value(g, 1.0), std::overflow_error);
}

TEST_CASE("threshold keeps strictly-above-delta edges only") {
    const BlockLayout l(1, 1);
    WeightedGraph g(l);
    g.b(0, l.a_index()) = 0.3;
    g.b(l.a_index(), l.m_begin()) = 0.5;
    g.b(l.m_begin(), l.y_index()) = -0.5;

    const Skeleton at04 = threshold_graph(g, 0.4);
    CHECK(at04.edge_count() == 2);
    CHECK(at04.e(0, l.a_index()) == 0);
    CHECK(at04.e(l.a_index(), l.m_begin()) == 1);
    CHECK(at04.e(l.m_begin(), l.y_index()) == 1);

    // boundary is exclusive
    CHECK(threshold_graph(g, 0.5).edge_count() == 0);
    // delta = 0 keeps the support
    CHECK(threshold_graph(g, 0.0).edge_count() == 3);
    // infinite delta empties the graph
    CHECK(threshold_graph(g, std::numeric_limits<double>::infinity()).edge_count() == 0);
}

TEST_CASE("check_dag accepts the zero matrix and rejects 2-cycles") {
    const BlockLayout l(1, 2);
    CHECK(check_dag(WeightedGraph(l)));
    WeightedGraph cyc(l);
    cyc.b(l.m_begin(), l.m_begin() + 1) = 1.0;
    cyc.b(l.m_begin() + 1, l.m_begin()) = 1.0;
    CHECK_FALSE(check_dag(cyc));
    // below-tolerance entries do not count as edges
    CHECK(check_dag(cyc, 1.5));
}

TEST_CASE("pack/unpack round trip is exact on random valid graphs") {
    Rng rng(31);
    for (int rep = 0; rep < 25; ++rep) {
        const int p = 1 + static_cast<int>(rng.uniform_index(3));
        const int s = static_cast<int>(rng.uniform_index(5));
        const Parameters params = random_parameters(p, s, rng);
        const WeightedGraph g = pack(params);
        CHECK(structural_report(g).h2 == 0.0);
        const Parameters back = unpack(g);
        const WeightedGraph g2 = pack(back);
        CHECK((g.b - g2.b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("project_hcg at x=0 reproduces the unmoderated coefficients") {
    Rng rng(37);
    const Parameters params = random_parameters(2, 3, rng);
    const HcgProjection proj = project_hcg(params, Vector::Zero(2));
    const int s = params.s;
    for (int i = 0; i < s; ++i) CHECK(proj.b_do(0, 1 + i) == doctest::Approx(params.beta_a(i)));
    CHECK(proj.b_do(0, s + 1) == doctest::Approx(params.gamma_a));
    CHECK(proj.intercepts.cwiseAbs().maxCoeff() == 0.0);
    // Y row empty, nothing enters A
    CHECK(proj.b_do.row(s + 1).cwiseAbs().sum() == 0.0);
    CHECK(proj.b_do.col(0).cwiseAbs().sum() == 0.0);
}

TEST_CASE("project_hcg moderates the A -> M weight") {
    Parameters params(1, 1);
    params.beta_a(0) = 1.0;
    params.b_xa(0, 0) = 0.5;
    Vector x(1);
    x << 2.0;
    const HcgProjection proj = project_hcg(params, x);
    CHECK(proj.b_do(0, 1) == doctest::Approx(2.0));  // 1 + 0.5*2
}

TEST_CASE("project_hcg without interactions is constant in x") {
    Rng rng(41);
    const Parameters params = random_parameters(2, 4, rng, /*with_interactions=*/false);
    const HcgProjection at0 = project_hcg(params, Vector::Zero(2));
    Vector x(2);
    x << 3.5, -1.25;
    const HcgProjection atx = project_hcg(params, x);
    CHECK((at0.b_do - atx.b_do).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(project_hcg(params, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("remove_mediator drops exactly one mediator's slots") {
    Rng rng(43);
    const Parameters params = random_parameters(2, 4, rng);
    const Parameters reduced = remove_mediator(params, 1);
    CHECK(reduced.s == 3);
    CHECK(reduced.beta_a(0) == params.beta_a(0));
    CHECK(reduced.beta_a(1) == params.beta_a(2));
    CHECK(reduced.gamma_m(2) == params.gamma_m(3));
    CHECK(reduced.b_m(0, 2) == params.b_m(0, 3));
    CHECK(reduced.b_m(2, 0) == params.b_m(3, 0));
    CHECK(reduced.delta_x == params.delta_x);
    CHECK_THROWS_AS(remove_mediator(params, 4), std::out_of_range);
    CHECK_THROWS_AS(remove_mediator(Parameters(1, 0), 0), std::out_of_range);
}

TEST_CASE("mediator topological order rejects cycles") {
    Matrix b_m = Matrix::Zero(3, 3);
    b_m(0, 1) = 1.0;
    b_m(1, 2) = 1.0;
    const auto order = mediator_topological_order(b_m);
    CHECK(order == std::vector<int>{0, 1, 2});
    b_m(2, 0) = 1.0;
    CHECK_THROWS_WITH_AS(mediator_topological_order(b_m), "cyclic mediators",
                         std::runtime_error);
}
