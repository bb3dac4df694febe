#include "hcg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hcg {

ScenarioSpec scenario_preset(const std::string& id) {
    ScenarioSpec spec;
    spec.id = id;
    if (id == "S1") {
        spec.mediators_active = false;
    } else if (id == "S2") {
        spec.mediator_links_active = false;
    } else if (id == "S3") {
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 2.0;
    } else if (id == "S3nx") {
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 2.0;
        spec.interactions_active = false;
        spec.require_interaction = false;
    } else if (id == "S3mod") {
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 2.0;
        spec.delta_active = false;
    } else if (id == "S4") {
        spec.s = 38;
        spec.n = 1000;
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 4.0;
    } else if (id == "S5") {
        spec.p = 18;
        spec.n = 1000;
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 4.0;
    } else if (id == "S6") {
        spec.p = 22;
        spec.s = 10;
        spec.n = 1000;
        spec.graph_kind = GraphKind::ErDegree;
        spec.er_degree = 4.0;
    } else {
        throw std::invalid_argument("unknown scenario preset: " + id);
    }
    return spec;
}

std::vector<std::string> scenario_preset_ids() {
    return {"S1", "S2", "S3", "S3nx", "S3mod", "S4", "S5", "S6"};
}

Matrix Dataset::uncentered() const {
    if (!centered) return values;
    return values.rowwise() + column_means.transpose();
}

namespace {

double draw_weight(const std::vector<double>& alphabet, Rng& rng) {
    return alphabet[rng.uniform_index(alphabet.size())];
}

double draw_nonzero_weight(const std::vector<double>& alphabet, Rng& rng) {
    std::vector<double> nz;
    for (double v : alphabet)
        if (v != 0.0) nz.push_back(v);
    if (nz.empty()) throw std::invalid_argument("weight alphabet has no nonzero element");
    return nz[rng.uniform_index(nz.size())];
}

bool has_nonzero_interaction(const Parameters& params) {
    return params.b_xa.cwiseAbs().sum() + params.gamma_xa.cwiseAbs().sum() > 0.0;
}

Parameters sample_parameters(const ScenarioSpec& spec, Rng& rng) {
    Parameters params(spec.p, spec.s);
    const auto& alpha = spec.weight_alphabet;

    if (spec.delta_active)
        for (int j = 0; j < spec.p; ++j) params.delta_x(j) = draw_weight(alpha, rng);
    for (int j = 0; j < spec.p; ++j) params.gamma_x(j) = draw_weight(alpha, rng);
    params.gamma_a = draw_weight(alpha, rng);
    if (spec.interactions_active)
        for (int j = 0; j < spec.p; ++j) params.gamma_xa(j) = draw_weight(alpha, rng);

    if (spec.mediators_active && spec.s > 0) {
        for (int i = 0; i < spec.s; ++i) {
            params.beta_a(i) = draw_weight(alpha, rng);
            params.gamma_m(i) = draw_weight(alpha, rng);
            for (int j = 0; j < spec.p; ++j) {
                params.b_x(j, i) = draw_weight(alpha, rng);
                if (spec.interactions_active) params.b_xa(j, i) = draw_weight(alpha, rng);
            }
        }
        if (spec.mediator_links_active && spec.s > 1) {
            if (spec.graph_kind == GraphKind::ErDegree) {
                // Random topological order; edge i->j for order(i) before
                // order(j) with probability d/(s-1), expected degree d.
                std::vector<int> order(spec.s);
                std::iota(order.begin(), order.end(), 0);
                for (int i = spec.s - 1; i > 0; --i)
                    std::swap(order[i], order[rng.uniform_index(i + 1)]);
                const double p_edge = std::min(1.0, spec.er_degree / (spec.s - 1));
                for (int a = 0; a < spec.s; ++a)
                    for (int b = a + 1; b < spec.s; ++b)
                        if (rng.uniform() < p_edge)
                            params.b_m(order[a], order[b]) = draw_nonzero_weight(alpha, rng);
            } else {
                // Constrained-random: strictly upper-triangular slots draw
                // from the full alphabet (index order as topological order).
                for (int a = 0; a < spec.s; ++a)
                    for (int b = a + 1; b < spec.s; ++b)
                        params.b_m(a, b) = draw_weight(alpha, rng);
            }
        }
    }
    return params;
}

}  // namespace

WeightedGraph gen_true_graph(const ScenarioSpec& spec, Rng& rng) {
    if (spec.require_interaction) {
        const bool any_nonzero =
            std::any_of(spec.weight_alphabet.begin(), spec.weight_alphabet.end(),
                        [](double v) { return v != 0.0; });
        if (!any_nonzero)
            throw std::invalid_argument(
                "require_interaction with an all-zero weight alphabet");
        if (!spec.interactions_active)
            throw std::invalid_argument(
                "require_interaction with interactions disabled");
    }

    constexpr int kMaxResamples = 100000;
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
        Parameters params = sample_parameters(spec, rng);
        if (spec.require_interaction && !has_nonzero_interaction(params)) continue;
        return pack(params);
    }
    throw std::runtime_error("gen_true_graph: failed to draw an interaction coefficient");
}

Dataset forward_sample(const WeightedGraph& g, int n, double baseline, bool center,
                       Rng& rng, const NoiseScales& noise) {
    if (n < 1) throw std::invalid_argument("forward_sample: n must be positive");
    const BlockLayout& l = g.layout;
    const Parameters params = unpack(g);
    const std::vector<int> topo = mediator_topological_order(params.b_m);

    Dataset data;
    data.layout = l;
    data.values = Matrix::Zero(n, l.size());
    Matrix& d = data.values;

    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < l.p; ++j) d(r, j) = noise.x * rng.normal();
        const double a =
            params.delta_x.dot(d.row(r).head(l.p)) + noise.a * rng.normal();
        d(r, l.a_index()) = a;
        for (int j = 0; j < l.p; ++j) d(r, l.xa_begin() + j) = d(r, j) * a;

        for (int i : topo) {
            double m = params.beta_a(i) * a + noise.m * rng.normal();
            for (int j = 0; j < l.p; ++j)
                m += params.b_x(j, i) * d(r, j) + params.b_xa(j, i) * d(r, l.xa_begin() + j);
            for (int k = 0; k < l.s; ++k)
                if (params.b_m(k, i) != 0.0) m += params.b_m(k, i) * d(r, l.m_begin() + k);
            d(r, l.m_begin() + i) = m;
        }

        double y = params.gamma_a * a + baseline + noise.y * rng.normal();
        for (int j = 0; j < l.p; ++j)
            y += params.gamma_x(j) * d(r, j) + params.gamma_xa(j) * d(r, l.xa_begin() + j);
        for (int i = 0; i < l.s; ++i) y += params.gamma_m(i) * d(r, l.m_begin() + i);
        d(r, l.y_index()) = y;
    }

    data.column_means = d.colwise().mean();
    if (center) {
        d.rowwise() -= data.column_means.transpose();
        data.centered = true;
    }
    return data;
}

ScenarioDraw draw_scenario(const ScenarioSpec& spec) {
    Rng rng(spec.seed);
    ScenarioDraw draw;
    draw.truth = gen_true_graph(spec, rng);
    draw.data = forward_sample(draw.truth, spec.n, spec.baseline, spec.center, rng);
    return draw;
}

}  // namespace hcg
