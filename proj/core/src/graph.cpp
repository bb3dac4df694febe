#include "hcg/graph.hpp"

#include <cmath>
#include <queue>

namespace hcg {

std::string BlockLayout::node_name(int i) const {
    if (is_x(i)) return "X" + std::to_string(i + 1);
    if (is_a(i)) return "A";
    if (is_xa(i)) return "XA" + std::to_string(i - xa_begin() + 1);
    if (is_m(i)) return "M" + std::to_string(i - m_begin() + 1);
    if (is_y(i)) return "Y";
    throw std::out_of_range("node index " + std::to_string(i));
}

StructuralReport structural_report(const WeightedGraph& g) {
    const BlockLayout& l = g.layout;
    const Matrix& b = g.b;
    const int w = l.size();

    StructuralReport r;
    for (int j = 0; j < l.p; ++j) r.g1 += b.col(j).cwiseAbs().sum();
    for (int i = l.a_index(); i < w; ++i) r.g2 += std::abs(b(i, l.a_index()));
    r.g3 = b.row(l.y_index()).cwiseAbs().sum();
    for (int j = l.xa_begin(); j < l.m_begin(); ++j) r.g4 += b.col(j).cwiseAbs().sum();
    r.h2 = r.g1 + r.g2 + r.g3 + r.g4;
    return r;
}

namespace {

// (I + t*B.^2)^(w-1) and its trace-completing final multiply, with an
// overflow check after each product.
Matrix stable_power(const Matrix& base, int exponent) {
    const int w = static_cast<int>(base.rows());
    Matrix acc = Matrix::Identity(w, w);
    Matrix sq = base;
    int e = exponent;
    while (e > 0) {
        if (e & 1) {
            acc = acc * sq;
            if (!acc.allFinite()) throw std::overflow_error("acyclicity overflow");
        }
        e >>= 1;
        if (e > 0) {
            sq = sq * sq;
            if (!sq.allFinite()) throw std::overflow_error("acyclicity overflow");
        }
    }
    return acc;
}

}  // namespace

AcyclicityResult acyclicity_matrix(const Matrix& b, double t) {
    if (t <= 0) throw std::invalid_argument("acyclicity: t must be positive");
    const int w = static_cast<int>(b.rows());
    if (!b.allFinite()) throw std::overflow_error("acyclicity overflow");

    const Matrix inner = Matrix::Identity(w, w) + t * b.cwiseProduct(b);
    // value = tr(inner^w) - w; gradient = 2tw * (inner^(w-1))^T .* B
    const Matrix pw1 = stable_power(inner, w - 1);
    const Matrix pw = pw1 * inner;
    if (!pw.allFinite()) throw std::overflow_error("acyclicity overflow");

    AcyclicityResult res;
    res.value = pw.trace() - static_cast<double>(w);
    res.gradient = 2.0 * t * static_cast<double>(w) * pw1.transpose().cwiseProduct(b);
    return res;
}

double acyclicity_matrix_value(const Matrix& b, double t) {
    if (t <= 0) throw std::invalid_argument("acyclicity: t must be positive");
    const int w = static_cast<int>(b.rows());
    if (!b.allFinite()) throw std::overflow_error("acyclicity overflow");
    const Matrix inner = Matrix::Identity(w, w) + t * b.cwiseProduct(b);
    return stable_power(inner, w).trace() - static_cast<double>(w);
}

AcyclicityResult acyclicity(const WeightedGraph& g, double t) {
    return acyclicity_matrix(g.b, t);
}

double acyclicity_value(const WeightedGraph& g, double t) {
    return acyclicity_matrix_value(g.b, t);
}

Skeleton threshold_graph(const WeightedGraph& g, double delta) {
    if (delta < 0) throw std::invalid_argument("threshold_graph: delta must be >= 0");
    Skeleton skel(g.layout);
    const int w = g.layout.size();
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j)
            skel.e(i, j) = std::abs(g.b(i, j)) > delta ? 1 : 0;
    return skel;
}

namespace {

bool has_topological_order(const Eigen::MatrixXi& adj) {
    const int w = static_cast<int>(adj.rows());
    std::vector<int> indeg(w, 0);
    for (int j = 0; j < w; ++j)
        for (int i = 0; i < w; ++i)
            if (adj(i, j) && i != j) ++indeg[j];
    for (int i = 0; i < w; ++i)
        if (adj(i, i)) return false;  // self loop

    std::queue<int> ready;
    for (int j = 0; j < w; ++j)
        if (indeg[j] == 0) ready.push(j);
    int seen = 0;
    while (!ready.empty()) {
        int u = ready.front();
        ready.pop();
        ++seen;
        for (int v = 0; v < w; ++v) {
            if (u != v && adj(u, v) && --indeg[v] == 0) ready.push(v);
        }
    }
    return seen == w;
}

}  // namespace

bool check_dag(const WeightedGraph& g, double tol) {
    if (tol < 0) throw std::invalid_argument("check_dag: tol must be >= 0");
    const int w = g.layout.size();
    Eigen::MatrixXi adj(w, w);
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j)
            adj(i, j) = std::abs(g.b(i, j)) > tol ? 1 : 0;
    return has_topological_order(adj);
}

bool check_dag(const Skeleton& skel) { return has_topological_order(skel.e); }

std::vector<int> mediator_topological_order(const Matrix& b_m) {
    const int s = static_cast<int>(b_m.rows());
    std::vector<int> indeg(s, 0);
    for (int j = 0; j < s; ++j)
        for (int k = 0; k < s; ++k)
            if (k != j && b_m(k, j) != 0.0) ++indeg[j];
    for (int k = 0; k < s; ++k)
        if (b_m(k, k) != 0.0) throw std::runtime_error("cyclic mediators");

    std::vector<int> order;
    order.reserve(s);
    std::queue<int> ready;
    for (int j = 0; j < s; ++j)
        if (indeg[j] == 0) ready.push(j);
    while (!ready.empty()) {
        int u = ready.front();
        ready.pop();
        order.push_back(u);
        for (int v = 0; v < s; ++v)
            if (v != u && b_m(u, v) != 0.0 && --indeg[v] == 0) ready.push(v);
    }
    if (static_cast<int>(order.size()) != s) throw std::runtime_error("cyclic mediators");
    return order;
}

Parameters::Parameters(int p_, int s_) : p(p_), s(s_) {
    if (p < 1 || s < 0) throw std::invalid_argument("Parameters: need p >= 1, s >= 0");
    delta_x = Vector::Zero(p);
    b_x = Matrix::Zero(p, s);
    beta_a = Vector::Zero(s);
    b_xa = Matrix::Zero(p, s);
    b_m = Matrix::Zero(s, s);
    gamma_x = Vector::Zero(p);
    gamma_xa = Vector::Zero(p);
    gamma_m = Vector::Zero(s);
}

Parameters unpack(const WeightedGraph& g) {
    const BlockLayout& l = g.layout;
    const Matrix& b = g.b;
    Parameters params(l.p, l.s);

    for (int j = 0; j < l.p; ++j) {
        params.delta_x(j) = b(j, l.a_index());
        params.gamma_x(j) = b(j, l.y_index());
        params.gamma_xa(j) = b(l.xa_begin() + j, l.y_index());
    }
    params.gamma_a = b(l.a_index(), l.y_index());
    for (int i = 0; i < l.s; ++i) {
        const int mi = l.m_begin() + i;
        params.beta_a(i) = b(l.a_index(), mi);
        params.gamma_m(i) = b(mi, l.y_index());
        for (int j = 0; j < l.p; ++j) {
            params.b_x(j, i) = b(j, mi);
            params.b_xa(j, i) = b(l.xa_begin() + j, mi);
        }
        for (int k = 0; k < l.s; ++k) params.b_m(k, i) = b(l.m_begin() + k, mi);
    }
    return params;
}

WeightedGraph pack(const Parameters& params) {
    const BlockLayout l(params.p, params.s);
    WeightedGraph g(l);

    for (int j = 0; j < l.p; ++j) {
        g.b(j, l.a_index()) = params.delta_x(j);
        g.b(j, l.y_index()) = params.gamma_x(j);
        g.b(l.xa_begin() + j, l.y_index()) = params.gamma_xa(j);
    }
    g.b(l.a_index(), l.y_index()) = params.gamma_a;
    for (int i = 0; i < l.s; ++i) {
        const int mi = l.m_begin() + i;
        g.b(l.a_index(), mi) = params.beta_a(i);
        g.b(mi, l.y_index()) = params.gamma_m(i);
        for (int j = 0; j < l.p; ++j) {
            g.b(j, mi) = params.b_x(j, i);
            g.b(l.xa_begin() + j, mi) = params.b_xa(j, i);
        }
        for (int k = 0; k < l.s; ++k) g.b(l.m_begin() + k, mi) = params.b_m(k, i);
    }
    return g;
}

HcgProjection project_hcg(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("project_hcg: x has wrong dimension");
    const int s = params.s;

    HcgProjection proj;
    proj.x = x;
    proj.b_do = Matrix::Zero(s + 2, s + 2);
    proj.intercepts = Vector::Zero(s + 2);

    // Node order [A, M_1..M_s, Y]. Edge orientation: b_do(i,j) = i -> j.
    const Vector a_to_m = params.beta_a + params.b_xa.transpose() * x;
    for (int i = 0; i < s; ++i) {
        proj.b_do(0, 1 + i) = a_to_m(i);
        proj.b_do(1 + i, s + 1) = params.gamma_m(i);
        for (int k = 0; k < s; ++k) proj.b_do(1 + k, 1 + i) = params.b_m(k, i);
    }
    proj.b_do(0, s + 1) = params.gamma_a + params.gamma_xa.dot(x);

    proj.intercepts(0) = params.delta_x.dot(x);
    proj.intercepts.segment(1, s) = params.b_x.transpose() * x;
    proj.intercepts(s + 1) = params.gamma_x.dot(x);
    return proj;
}

Parameters remove_mediator(const Parameters& params, int i) {
    if (params.s < 1 || i < 0 || i >= params.s)
        throw std::out_of_range("remove_mediator: mediator index out of range");
    const int s = params.s;
    Parameters out(params.p, s - 1);
    out.delta_x = params.delta_x;
    out.gamma_x = params.gamma_x;
    out.gamma_a = params.gamma_a;
    out.gamma_xa = params.gamma_xa;

    int col = 0;
    for (int j = 0; j < s; ++j) {
        if (j == i) continue;
        out.beta_a(col) = params.beta_a(j);
        out.gamma_m(col) = params.gamma_m(j);
        out.b_x.col(col) = params.b_x.col(j);
        out.b_xa.col(col) = params.b_xa.col(j);
        int row = 0;
        for (int k = 0; k < s; ++k) {
            if (k == i) continue;
            out.b_m(row, col) = params.b_m(k, j);
            ++row;
        }
        ++col;
    }
    if (params.gamma_xm) {
        Matrix gxm(params.p, s - 1);
        int c = 0;
        for (int j = 0; j < s; ++j) {
            if (j == i) continue;
            gxm.col(c++) = params.gamma_xm->col(j);
        }
        out.gamma_xm = std::move(gxm);
    }
    return out;
}

}  // namespace hcg
