#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Node index scheme for the interaction-augmented SEM.
///
/// The w = 2p+s+2 nodes are laid out as [X_1..X_p, A, XA_1..XA_p,
/// M_1..M_s, Y]; XA_j is the deterministic product X_j * A.
struct BlockLayout {
    int p = 0;  // pre-treatment variables
    int s = 0;  // mediators

    BlockLayout() = default;
    BlockLayout(int p_, int s_) : p(p_), s(s_) {
        if (p < 1 || s < 0) throw std::invalid_argument("BlockLayout: need p >= 1, s >= 0");
    }

    int size() const { return 2 * p + s + 2; }
    int x_begin() const { return 0; }
    int a_index() const { return p; }
    int xa_begin() const { return p + 1; }
    int m_begin() const { return 2 * p + 1; }
    int y_index() const { return 2 * p + s + 1; }

    bool is_x(int i) const { return i < p; }
    bool is_a(int i) const { return i == p; }
    bool is_xa(int i) const { return i >= xa_begin() && i < m_begin(); }
    bool is_m(int i) const { return i >= m_begin() && i < y_index(); }
    bool is_y(int i) const { return i == y_index(); }

    /// Display name of node i (X1..Xp, A, XA1..XAp, M1..Ms, Y).
    std::string node_name(int i) const;

    bool operator==(const BlockLayout&) const = default;
};

/// Weighted directed graph over the block layout. b(i,j) is the weight of
/// the edge node_i -> node_j; zero means no edge.
struct WeightedGraph {
    BlockLayout layout;
    Matrix b;

    WeightedGraph() = default;
    explicit WeightedGraph(BlockLayout l) : layout(l), b(Matrix::Zero(l.size(), l.size())) {}
    WeightedGraph(BlockLayout l, Matrix m) : layout(l), b(std::move(m)) {
        if (b.rows() != layout.size() || b.cols() != layout.size())
            throw std::invalid_argument("WeightedGraph: matrix does not match layout");
    }
};

/// Binary edge support, usually produced by thresholding an estimate.
struct Skeleton {
    BlockLayout layout;
    Eigen::MatrixXi e;

    Skeleton() = default;
    explicit Skeleton(BlockLayout l) : layout(l), e(Eigen::MatrixXi::Zero(l.size(), l.size())) {}

    int edge_count() const { return e.sum(); }
};

/// Absolute-weight mass in each forbidden block of the adjacency matrix.
/// All four terms are zero exactly when the graph respects the causal
/// ordering (X exogenous, A caused only by X, XA exogenous, Y terminal).
struct StructuralReport {
    double g1 = 0;  // edges into X
    double g2 = 0;  // edges into A from non-X nodes
    double g3 = 0;  // edges out of Y
    double g4 = 0;  // edges into XA
    double h2 = 0;  // g1+g2+g3+g4

    bool valid(double tol = 0.0) const { return h2 <= tol; }
};

StructuralReport structural_report(const WeightedGraph& g);

struct AcyclicityResult {
    double value = 0;  // zero iff the graph is a DAG
    Matrix gradient;   // d(value)/db, same shape as b
};

/// Smooth acyclicity score tr[(I + t*B.^2)^w] - w with its exact gradient.
/// Throws std::overflow_error("acyclicity overflow") when the matrix power
/// leaves the finite range; callers in line searches treat that as a
/// rejected step.
AcyclicityResult acyclicity(const WeightedGraph& g, double t);

/// Value-only variant (skips the gradient).
double acyclicity_value(const WeightedGraph& g, double t);

/// Same score on a bare square matrix (w = number of rows).
AcyclicityResult acyclicity_matrix(const Matrix& b, double t);
double acyclicity_matrix_value(const Matrix& b, double t);

/// Keep edges with |weight| strictly greater than delta.
Skeleton threshold_graph(const WeightedGraph& g, double delta);

/// True iff a topological order exists over the support {|b| > tol}.
bool check_dag(const WeightedGraph& g, double tol = 0.0);
bool check_dag(const Skeleton& skel);

/// Topological order of the mediator sub-DAG (indices 0..s-1).
/// Throws std::runtime_error("cyclic mediators") when no order exists.
std::vector<int> mediator_topological_order(const Matrix& b_m);

/// Named coefficient blocks of a structurally valid graph.
///
/// Orientation matches the edge matrix: b_x(j,i) is the weight X_j -> M_i,
/// b_m(k,i) is M_k -> M_i, and so on.
struct Parameters {
    int p = 0;
    int s = 0;
    Vector delta_x;   // p,   X -> A
    Matrix b_x;       // p*s, X -> M
    Vector beta_a;    // s,   A -> M
    Matrix b_xa;      // p*s, XA -> M
    Matrix b_m;       // s*s, M -> M
    Vector gamma_x;   // p,   X -> Y
    double gamma_a = 0;  // A -> Y
    Vector gamma_xa;  // p,  XA -> Y
    Vector gamma_m;   // s,   M -> Y
    std::optional<Matrix> gamma_xm;  // p*s, XM interaction -> Y (extension)

    Parameters() = default;
    Parameters(int p_, int s_);

    BlockLayout layout() const { return BlockLayout(p, s); }
};

/// Extract the named blocks from a graph. The forbidden blocks are ignored;
/// use structural_report to verify they are zero first if that matters.
Parameters unpack(const WeightedGraph& g);

/// Rebuild the full adjacency matrix; exact inverse of unpack for
/// structurally valid graphs. gamma_xm, having no node slot, is dropped.
WeightedGraph pack(const Parameters& params);

/// Causal graph over {A, M_1..M_s, Y} induced by intervening do(X = x).
struct HcgProjection {
    Vector x;           // moderator value (length p)
    Matrix b_do;        // (s+2)x(s+2), edge orientation, node order [A, M.., Y]
    Vector intercepts;  // length s+2: [delta_x.x ; b_x^T.x ; gamma_x.x]
};

HcgProjection project_hcg(const Parameters& params, const Vector& x);

/// Delete mediator i: its row/column leaves b_m, its entries leave beta_a
/// and gamma_m, its columns leave b_x, b_xa (and gamma_xm when present).
/// Paths through the removed mediator are not re-routed.
Parameters remove_mediator(const Parameters& params, int i);

}  // namespace hcg
