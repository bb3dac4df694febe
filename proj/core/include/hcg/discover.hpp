#pragma once

#include "hcg/graph.hpp"
#include "hcg/scenario.hpp"

#include <stdexcept>
#include <vector>

namespace hcg {

/// Tuning for the constrained least-squares graph fit.
struct DiscoveryConfig {
    double t = 0.0;        // acyclicity scale; 0 picks 1/w
    int k_outer = 20;      // max outer (multiplier) iterations
    int h_inner = 300;     // gradient epochs per inner solve
    double r0 = 1e-2;      // initial step size
    double rho = 0.25;     // required constraint progress factor
    double tau = 10.0;     // penalty multiplier
    double u_cap = 1e16;   // penalty cap
    double delta_h = 1e-8; // acyclicity tolerance
    double l1 = 0.0;       // sparsity weight on free entries
    bool hard_mask = true; // project forbidden entries to zero; false uses
                           // the soft h2 penalty with its own multiplier
    bool loss_mask_deterministic = true;  // drop X/XA columns from the residual
    int restarts = 0;      // extra deterministic jittered starts; the
                           // lowest-loss feasible solution wins
    bool refine_support = true;  // greedy BIC hill climb over edge moves
                                 // after convergence (hard-mask mode only);
                                 // repairs reversed-direction local optima

    void validate() const;
};

/// Raised when the fit cannot drive the acyclicity constraint below
/// delta_h before hitting the penalty cap; carries the best iterate so
/// callers can decide whether to accept it.
class DiscoveryError : public std::runtime_error {
public:
    DiscoveryError(std::string msg, WeightedGraph best_iterate, double h1)
        : std::runtime_error(std::move(msg)), best(std::move(best_iterate)), h1_value(h1) {}

    WeightedGraph best;
    double h1_value;
};

/// Masked least-squares score under the augmented-Lagrangian acyclicity
/// scheme. Returns the raw weighted estimate; deterministic for fixed
/// inputs (zero initialization, full-gradient descent with backtracking).
WeightedGraph fit(const Dataset& data, const DiscoveryConfig& cfg = {});

/// Reconstruction MSE of the thresholded matrix over the grid; ties break
/// toward the smallest delta. Grid must be non-empty and sorted ascending.
double select_threshold(const WeightedGraph& raw, const Dataset& data,
                        const std::vector<double>& grid);

/// Default threshold grid for data-driven selection (0.05 .. 0.75).
std::vector<double> default_threshold_grid();

}  // namespace hcg
