#pragma once

#include "hcg/graph.hpp"
#include "hcg/scenario.hpp"

namespace hcg {

struct LassoConfig {
    // Fraction of the per-response lambda_max. Kept tiny: responses driven
    // by high-variance mediator chains have raw lambda_max in the hundreds,
    // and even 0.01 of that zeroes true unit coefficients on low-variance
    // parents.
    double lambda_frac = 1e-5;
    int max_iter = 10000;
    double tol = 1e-8;

    void validate() const {
        if (!(lambda_frac >= 0.0 && lambda_frac < 1.0))
            throw std::invalid_argument("LassoConfig: lambda_frac in [0,1)");
        if (max_iter < 1 || tol <= 0.0)
            throw std::invalid_argument("LassoConfig: bad iteration settings");
    }
};

/// Cyclic coordinate descent for (1/2n)||y - X b||^2 + lambda ||b||_1.
/// Deterministic; throws std::invalid_argument on non-finite inputs.
Vector lasso(const Matrix& x, const Vector& y, double lambda, int max_iter = 10000,
             double tol = 1e-8);

/// Smallest penalty that zeroes every coefficient: ||X^T y||_inf / n.
double lasso_lambda_max(const Matrix& x, const Vector& y);

/// Per-node refit on the skeleton's parent sets. Support of the result is
/// contained in the skeleton; nodes with empty parent sets get zero columns.
WeightedGraph refit(const Dataset& data, const Skeleton& skel, const LassoConfig& cfg = {});

}  // namespace hcg
