#include "hcg/discover.hpp"

#include "hcg/rng.hpp"

#include <cmath>
#include <limits>

namespace hcg {

void DiscoveryConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("DiscoveryConfig: rho in (0,1)");
    if (!(tau > 1.0)) throw std::invalid_argument("DiscoveryConfig: tau > 1");
    if (!(delta_h > 0.0 && u_cap > 0.0 && r0 > 0.0))
        throw std::invalid_argument("DiscoveryConfig: tolerances must be positive");
    if (k_outer < 1 || h_inner < 1)
        throw std::invalid_argument("DiscoveryConfig: iteration counts must be positive");
    if (l1 < 0.0) throw std::invalid_argument("DiscoveryConfig: l1 must be >= 0");
    if (restarts < 0) throw std::invalid_argument("DiscoveryConfig: restarts must be >= 0");
}

namespace {

// Entries the causal ordering permits: X->A, {X,A,XA,M}->M off-diagonal,
// {X,A,XA,M}->Y. Everything else is pinned at zero under the hard mask.
Matrix permitted_mask(const BlockLayout& l) {
    const int w = l.size();
    Matrix mask = Matrix::Zero(w, w);
    for (int j = 0; j < l.p; ++j) mask(j, l.a_index()) = 1.0;
    for (int i = 0; i < w; ++i) {
        if (l.is_y(i)) continue;
        for (int jm = l.m_begin(); jm < l.y_index(); ++jm)
            if (i != jm) mask(i, jm) = 1.0;
        mask(i, l.y_index()) = 1.0;
    }
    return mask;
}

// Soft mode leaves every off-diagonal entry free and lets the h2 penalty
// handle the forbidden blocks.
Matrix free_mask(const BlockLayout& l, bool hard) {
    const int w = l.size();
    if (hard) return permitted_mask(l);
    Matrix mask = Matrix::Ones(w, w);
    mask.diagonal().setZero();
    return mask;
}

Matrix response_selector(const BlockLayout& l, bool drop_deterministic) {
    const int w = l.size();
    Matrix sel = Matrix::Zero(w, w);
    for (int j = 0; j < w; ++j) {
        if (drop_deterministic && (l.is_x(j) || l.is_xa(j))) continue;
        sel(j, j) = 1.0;
    }
    return sel;
}

struct Objective {
    const Matrix& gram;     // D^T D / n
    const Matrix& mask;     // free entries
    const Matrix& resp;     // diagonal response selector
    const BlockLayout& layout;
    double t;
    double l1;
    bool hard_mask;

    double data_loss(const Matrix& b) const {
        const Matrix residual_cols = (Matrix::Identity(b.rows(), b.cols()) - b) * resp;
        return 0.5 * (residual_cols.transpose() * gram * residual_cols).trace();
    }

    Matrix data_grad(const Matrix& b) const {
        // d/dB 0.5 tr[(I-B)^T G (I-B) P] = -G (I-B) P on free entries
        const Matrix g = gram * (b - Matrix::Identity(b.rows(), b.cols())) * resp;
        return g.cwiseProduct(mask);
    }

    double h2_value(const Matrix& b) const {
        WeightedGraph g(layout, b);
        return structural_report(g).h2;
    }
};

double soft_threshold(double v, double kappa) {
    if (v > kappa) return v - kappa;
    if (v < -kappa) return v + kappa;
    return 0.0;
}

// -------- greedy support refinement --------
//
// The continuous solve occasionally settles with a mediator edge reversed
// (plus compensating edges) even though the true support scores strictly
// better. A BIC-guided hill climb over single-edge moves (delete, add,
// flip) on the permitted slots repairs those basins; all scoring runs off
// the Gram matrix, so the cost is independent of the sample count.

struct SupportScorer {
    const Matrix& gram;
    const BlockLayout& layout;
    double edge_cost;  // BIC-style: log(n) / (2n)

    // 0.5 * (G_jj - g_P^T G_PP^{-1} g_P): least-squares loss of response j
    // on parent set P, in (1/2n)||.||^2 units.
    double response_loss(int j, const std::vector<int>& parents) const {
        if (parents.empty()) return 0.5 * gram(j, j);
        const int k = static_cast<int>(parents.size());
        Matrix gpp(k, k);
        Vector gpj(k);
        for (int a = 0; a < k; ++a) {
            gpj(a) = gram(parents[a], j);
            for (int c = 0; c < k; ++c) gpp(a, c) = gram(parents[a], parents[c]);
        }
        Eigen::LDLT<Matrix> ldlt(gpp);
        if (ldlt.info() != Eigen::Success)
            return std::numeric_limits<double>::infinity();
        const Vector beta = ldlt.solve(gpj);
        return 0.5 * (gram(j, j) - gpj.dot(beta));
    }

    Vector response_coefficients(int j, const std::vector<int>& parents) const {
        const int k = static_cast<int>(parents.size());
        Matrix gpp(k, k);
        Vector gpj(k);
        for (int a = 0; a < k; ++a) {
            gpj(a) = gram(parents[a], j);
            for (int c = 0; c < k; ++c) gpp(a, c) = gram(parents[a], parents[c]);
        }
        return gpp.ldlt().solve(gpj);
    }
};

std::vector<int> support_parents(const Eigen::MatrixXi& support, int j) {
    std::vector<int> parents;
    for (int i = 0; i < support.rows(); ++i)
        if (support(i, j)) parents.push_back(i);
    return parents;
}

bool support_is_dag(const Eigen::MatrixXi& support) {
    const int w = static_cast<int>(support.rows());
    std::vector<int> indeg(w, 0);
    for (int j = 0; j < w; ++j)
        for (int i = 0; i < w; ++i)
            if (support(i, j)) ++indeg[j];
    std::vector<int> ready;
    for (int j = 0; j < w; ++j)
        if (indeg[j] == 0) ready.push_back(j);
    int seen = 0;
    while (!ready.empty()) {
        const int u = ready.back();
        ready.pop_back();
        ++seen;
        for (int v = 0; v < w; ++v)
            if (support(u, v) && --indeg[v] == 0) ready.push_back(v);
    }
    return seen == w;
}

// Greedy single-move hill climb (delete / add / flip) to a local optimum of
// loss + edge_cost * edges. Returns the achieved score.
double climb_support(Eigen::MatrixXi& support, const SupportScorer& scorer,
                     const Matrix& permitted, const Matrix& resp) {
    const int w = static_cast<int>(support.rows());
    std::vector<double> loss(w, 0.0);
    for (int j = 0; j < w; ++j)
        if (resp(j, j) != 0.0) loss[j] = scorer.response_loss(j, support_parents(support, j));

    for (int pass = 0; pass < 16 * w; ++pass) {
        double best_gain = 1e-12;
        int best_i = -1, best_j = -1, best_kind = -1;  // 0 delete, 1 add, 2 flip

        auto consider = [&](int i, int j, int kind) {
            Eigen::MatrixXi trial = support;
            double delta_edges = 0;
            if (kind == 0) {
                trial(i, j) = 0;
                delta_edges = -1;
            } else if (kind == 1) {
                trial(i, j) = 1;
                delta_edges = 1;
            } else {
                trial(i, j) = 0;
                trial(j, i) = 1;
            }
            if (kind != 0 && !support_is_dag(trial)) return;
            double gain = -delta_edges * scorer.edge_cost;
            gain += loss[j] - scorer.response_loss(j, support_parents(trial, j));
            if (kind == 2) gain += loss[i] - scorer.response_loss(i, support_parents(trial, i));
            if (gain > best_gain) {
                best_gain = gain;
                best_i = i;
                best_j = j;
                best_kind = kind;
            }
        };

        for (int i = 0; i < w; ++i) {
            for (int j = 0; j < w; ++j) {
                if (support(i, j)) {
                    consider(i, j, 0);
                    if (permitted(j, i) != 0.0 && resp(i, i) != 0.0 && !support(j, i))
                        consider(i, j, 2);
                } else if (permitted(i, j) != 0.0 && resp(j, j) != 0.0) {
                    consider(i, j, 1);
                }
            }
        }
        if (best_kind < 0) break;

        if (best_kind == 0) {
            support(best_i, best_j) = 0;
        } else if (best_kind == 1) {
            support(best_i, best_j) = 1;
        } else {
            support(best_i, best_j) = 0;
            support(best_j, best_i) = 1;
            loss[best_i] = scorer.response_loss(best_i, support_parents(support, best_i));
        }
        loss[best_j] = scorer.response_loss(best_j, support_parents(support, best_j));
    }

    double score = 0.0;
    for (int j = 0; j < w; ++j) {
        if (resp(j, j) == 0.0) continue;
        score += loss[j] + scorer.edge_cost * support.col(j).sum();
    }
    return score;
}

Matrix refine_support(const Matrix& b_raw, const Matrix& gram, const BlockLayout& l,
                      const Matrix& permitted, const Matrix& resp, double n) {
    const int w = l.size();
    const SupportScorer scorer{gram, l, std::log(std::max(2.0, n)) / (2.0 * n)};

    Eigen::MatrixXi support(w, w);
    for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j)
            support(i, j) = permitted(i, j) != 0.0 && std::abs(b_raw(i, j)) > 0.1 ? 1 : 0;
    if (!support_is_dag(support)) {
        // drop weakest edges until acyclic; rare, but keeps the climb sane
        std::vector<std::pair<double, std::pair<int, int>>> edges;
        for (int i = 0; i < w; ++i)
            for (int j = 0; j < w; ++j)
                if (support(i, j)) edges.push_back({std::abs(b_raw(i, j)), {i, j}});
        std::sort(edges.begin(), edges.end());
        for (const auto& [wgt, e] : edges) {
            if (support_is_dag(support)) break;
            support(e.first, e.second) = 0;
        }
    }

    double best_score = climb_support(support, scorer, permitted, resp);

    // A single greedy move cannot pay for a wrong mediator-edge direction
    // (the true parents only help after the flip), so restart the climb
    // from each flipped mediator edge and keep the best score.
    constexpr int kMaxFlipRounds = 3;
    constexpr int kMaxFlipsPerRound = 48;
    for (int round = 0; round < kMaxFlipRounds; ++round) {
        bool improved = false;
        std::vector<std::pair<int, int>> mediator_edges;
        for (int i = l.m_begin(); i < l.y_index(); ++i)
            for (int j = l.m_begin(); j < l.y_index(); ++j)
                if (support(i, j)) mediator_edges.push_back({i, j});
        if (static_cast<int>(mediator_edges.size()) > kMaxFlipsPerRound)
            mediator_edges.resize(kMaxFlipsPerRound);

        for (const auto& [i, j] : mediator_edges) {
            Eigen::MatrixXi trial = support;
            trial(i, j) = 0;
            trial(j, i) = 1;
            if (!support_is_dag(trial)) continue;
            const double score = climb_support(trial, scorer, permitted, resp);
            if (score < best_score - 1e-12) {
                best_score = score;
                support = trial;
                improved = true;
            }
        }
        if (!improved) break;
    }

    Matrix refined = Matrix::Zero(w, w);
    for (int j = 0; j < w; ++j) {
        const std::vector<int> parents = support_parents(support, j);
        if (parents.empty()) continue;
        const Vector beta = scorer.response_coefficients(j, parents);
        for (size_t a = 0; a < parents.size(); ++a) refined(parents[a], j) = beta(a);
    }
    return refined;
}

struct AlmResult {
    Matrix b;
    double data_loss = 0;
    double h1 = 0;
    bool feasible = false;
};

AlmResult run_alm(const BlockLayout& l, const Matrix& gram, const DiscoveryConfig& cfg,
                  const Matrix& init) {
    const int w = l.size();
    const double t = cfg.t > 0.0 ? cfg.t : 1.0 / w;
    const Matrix mask = free_mask(l, cfg.hard_mask);
    const Matrix resp = response_selector(l, cfg.loss_mask_deterministic);
    const Objective obj{gram, mask, resp, l, t, cfg.l1, cfg.hard_mask};

    Matrix b = init.cwiseProduct(mask);
    double lambda1 = 0.0, lambda2 = 0.0;
    double c = 1.0, d = 1.0;
    double h1_old = std::numeric_limits<double>::infinity();
    double h2_old = std::numeric_limits<double>::infinity();

    auto penalized = [&](const Matrix& bb) -> double {
        const double h1 = acyclicity_value(WeightedGraph(l, bb), t);
        double v = obj.data_loss(bb) + lambda1 * h1 + c * h1 * h1;
        if (cfg.l1 > 0.0) v += cfg.l1 * bb.cwiseProduct(mask).cwiseAbs().sum();
        if (!cfg.hard_mask) {
            const double h2 = obj.h2_value(bb);
            v += lambda2 * h2 + d * h2 * h2;
        }
        return v;
    };

    // Gram spectral radius bounds the data-loss curvature; the first
    // accepted step should not have to backtrack from r0 every time.
    double gram_lmax = 1.0;
    {
        Vector v = Vector::Ones(w).normalized();
        for (int it = 0; it < 50; ++it) {
            Vector next = gram * v;
            const double norm = next.norm();
            if (norm <= 0) break;
            v = next / norm;
            gram_lmax = norm;
        }
    }

    // Best iterate: feasible (h1 <= delta_h) with the lowest data loss.
    // Only post-solve iterates count; the zero start is feasible but is not
    // an estimate, and treating it as "best" would mask convergence failures.
    Matrix best_b = b;
    double best_h1 = std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    bool best_feasible = false;
    bool converged = false;

    // Inner solve: Nesterov-accelerated proximal gradient, made monotone by
    // restarting the momentum whenever the extrapolated step fails to
    // decrease the objective.
    auto inner_solve = [&]() {
        double step = std::min(cfg.r0, 1.0 / gram_lmax);
        double current = penalized(b);
        Matrix prev_b = b;
        double theta = 1.0;
        int stall = 0;

        const Matrix permitted = permitted_mask(l);
        auto prox_step = [&](const Matrix& point, double r) -> Matrix {
            const AcyclicityResult acy = acyclicity_matrix(point, t);
            Matrix grad = obj.data_grad(point) +
                          ((lambda1 + 2.0 * c * acy.value) * acy.gradient).cwiseProduct(mask);
            Matrix candidate = point - r * grad;
            if (!cfg.hard_mask) {
                // prox of the h2 terms: the linearized penalty weight acts
                // as an l1 threshold on the forbidden entries
                const double kappa = lambda2 + 2.0 * d * obj.h2_value(point);
                for (int i = 0; i < w; ++i)
                    for (int j = 0; j < w; ++j)
                        if (mask(i, j) != 0.0 && permitted(i, j) == 0.0)
                            candidate(i, j) = soft_threshold(candidate(i, j), r * kappa);
            }
            if (cfg.l1 > 0.0)
                for (int i = 0; i < w; ++i)
                    for (int j = 0; j < w; ++j)
                        if (mask(i, j) != 0.0)
                            candidate(i, j) = soft_threshold(candidate(i, j), r * cfg.l1);
            return candidate.cwiseProduct(mask);
        };
        auto safe_value = [&](const Matrix& m) -> double {
            try {
                return penalized(m);
            } catch (const std::overflow_error&) {
                return std::numeric_limits<double>::infinity();
            }
        };

        for (int epoch = 0; epoch < cfg.h_inner; ++epoch) {
            const double theta_next = (1.0 + std::sqrt(1.0 + 4.0 * theta * theta)) / 2.0;
            const double beta = (theta - 1.0) / theta_next;
            const Matrix extrapolated = b + beta * (b - prev_b);

            bool accepted = false;
            bool restarted = false;
            double gain = 0.0;
            for (int tries = 0; tries < 60 && !accepted; ++tries) {
                Matrix candidate = prox_step(extrapolated, step);
                double value = safe_value(candidate);
                if (value > current && beta > 0.0) {
                    // momentum overshoot: retry as a plain descent step
                    candidate = prox_step(b, step);
                    value = safe_value(candidate);
                    restarted = true;
                }
                if (value <= current) {
                    gain = current - value;
                    prev_b = std::move(b);
                    b = std::move(candidate);
                    current = value;
                    accepted = true;
                } else {
                    step *= 0.5;
                    restarted = false;
                }
            }
            if (!accepted) break;
            theta = restarted ? 1.0 : theta_next;
            stall = gain <= 1e-11 * (1.0 + std::abs(current)) ? stall + 1 : 0;
            if (stall >= 5) break;
        }
    };

    for (int outer = 0; outer < cfg.k_outer && !converged; ++outer) {
        // Escalate the quadratic penalties until the constraints make
        // rho-progress (or the cap is hit), then update the multipliers.
        double h1_new, h2_new;
        for (;;) {
            inner_solve();
            h1_new = acyclicity_value(WeightedGraph(l, b), t);
            h2_new = cfg.hard_mask ? 0.0 : obj.h2_value(b);
            if (h1_new <= cfg.delta_h && h2_new <= cfg.delta_h) break;
            bool escalated = false;
            if (h1_new > cfg.rho * h1_old && c * cfg.tau * d <= cfg.u_cap) {
                c *= cfg.tau;
                escalated = true;
            }
            if (!cfg.hard_mask && h2_new > cfg.rho * h2_old && c * d * cfg.tau <= cfg.u_cap) {
                d *= cfg.tau;
                escalated = true;
            }
            if (!escalated) break;
        }

        const double loss_new = obj.data_loss(b);
        const bool feasible = h1_new <= cfg.delta_h && h2_new <= cfg.delta_h;
        if ((feasible && (!best_feasible || loss_new < best_loss)) ||
            (!best_feasible && h1_new < best_h1)) {
            best_b = b;
            best_h1 = h1_new;
            best_loss = loss_new;
            best_feasible = best_feasible || feasible;
        }
        if (feasible) {
            converged = true;
            break;
        }

        lambda1 += c * h1_new;
        if (!cfg.hard_mask) lambda2 += d * h2_new;
        h1_old = h1_new;
        h2_old = h2_new;
        if (c * d > cfg.u_cap) break;
    }

    AlmResult result;
    if (converged) {
        result.b = b;
        result.feasible = true;
    } else {
        result.b = best_b;
        result.feasible = best_feasible;
    }
    result.data_loss = obj.data_loss(result.b);
    result.h1 = acyclicity_value(WeightedGraph(l, result.b), t);
    return result;
}

}  // namespace

WeightedGraph fit(const Dataset& data, const DiscoveryConfig& cfg) {
    cfg.validate();
    const BlockLayout& l = data.layout;
    const int w = l.size();
    const int n = data.rows();
    if (n < 1) throw std::invalid_argument("fit: empty dataset");
    {
        int varying = 0;
        for (int j = 0; j < w; ++j) {
            const auto col = data.values.col(j);
            if ((col.array() - col(0)).abs().maxCoeff() > 0.0) ++varying;
        }
        if (varying < 2) throw std::invalid_argument("fit: need at least 2 varying columns");
    }

    const Matrix gram = data.values.transpose() * data.values / static_cast<double>(n);

    // The zero start occasionally settles in a reversed-direction basin on
    // sequential-mediator graphs; a couple of deterministic jittered starts
    // let the data loss arbitrate.
    AlmResult best;
    bool have_best = false;
    for (int start = 0; start <= cfg.restarts; ++start) {
        Matrix init = Matrix::Zero(w, w);
        if (start > 0) {
            Rng jitter(0x5eedULL + static_cast<std::uint64_t>(start));
            for (int i = 0; i < w; ++i)
                for (int j = 0; j < w; ++j)
                    init(i, j) = 0.2 * (2.0 * jitter.uniform() - 1.0);
        }
        const AlmResult result = run_alm(l, gram, cfg, init);
        if (!have_best ||
            (result.feasible && !best.feasible) ||
            (result.feasible == best.feasible && result.data_loss < best.data_loss)) {
            best = result;
            have_best = true;
        }
    }

    if (!best.feasible) {
        throw DiscoveryError(
            "fit: acyclicity constraint not met (h1=" + std::to_string(best.h1) + ")",
            WeightedGraph(l, best.b), best.h1);
    }

    if (cfg.refine_support && cfg.hard_mask) {
        // the climb is monotone in the BIC-penalized score by construction
        const Matrix resp = response_selector(l, cfg.loss_mask_deterministic);
        const Matrix refined = refine_support(best.b, gram, l, permitted_mask(l), resp,
                                              static_cast<double>(n));
        if (refined.allFinite()) best.b = refined;
    }
    return WeightedGraph(l, best.b);
}

double select_threshold(const WeightedGraph& raw, const Dataset& data,
                        const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("select_threshold: empty grid");
    const BlockLayout& l = raw.layout;
    const int w = l.size();
    const Matrix gram = data.values.transpose() * data.values / double(data.rows());
    const Matrix resp = response_selector(l, true);

    double best_delta = grid.front();
    double best_loss = std::numeric_limits<double>::infinity();
    for (double delta : grid) {
        Matrix bt = raw.b;
        for (int i = 0; i < w; ++i)
            for (int j = 0; j < w; ++j)
                if (std::abs(bt(i, j)) <= delta) bt(i, j) = 0.0;
        const Matrix residual_cols = (Matrix::Identity(w, w) - bt) * resp;
        const double loss = (residual_cols.transpose() * gram * residual_cols).trace();
        if (loss < best_loss) {
            best_loss = loss;
            best_delta = delta;
        }
    }
    return best_delta;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 15; ++i) grid.push_back(0.05 * i);
    return grid;
}

}  // namespace hcg
