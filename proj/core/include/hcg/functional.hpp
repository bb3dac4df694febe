#pragma once

#include "hcg/effects.hpp"
#include "hcg/graph.hpp"
#include "hcg/scenario.hpp"

#include <string>
#include <utility>
#include <vector>

namespace hcg {

enum class LinkKind { Identity, Polynomial, Sine, Tanh, Table };

/// Scalar link applied componentwise to a parent block. Identity,
/// polynomial (monomial z^k), sine and tanh carry analytic derivatives;
/// tabulated links interpolate linearly and differentiate by central
/// differences.
class LinkFunction {
public:
    LinkFunction() = default;

    static LinkFunction identity();
    static LinkFunction polynomial(int degree);
    static LinkFunction sine();
    static LinkFunction tanh();
    static LinkFunction table(std::vector<std::pair<double, double>> points);

    double operator()(double z) const;
    double derivative(double z) const;  // analytic where the kind permits
    double derivative_fd(double z, double h) const;

    LinkKind kind() const { return kind_; }
    int degree() const { return degree_; }
    bool has_analytic_derivative() const { return kind_ != LinkKind::Table; }

private:
    LinkKind kind_ = LinkKind::Identity;
    int degree_ = 1;
    std::vector<std::pair<double, double>> table_;
};

/// One link per modelled relationship block. Interaction links take the
/// componentwise products x_j * a as their argument. Mediator-to-mediator
/// edges stay linear.
struct FunctionalLinks {
    LinkFunction a_x;   // X -> A
    LinkFunction m_x;   // X -> M
    LinkFunction m_a;   // A -> M
    LinkFunction m_xa;  // XA -> M
    LinkFunction y_x;   // X -> Y
    LinkFunction y_a;   // A -> Y
    LinkFunction y_xa;  // XA -> Y
    LinkFunction y_m;   // M -> Y (separable, applied per mediator)
};

/// Functional SEM: edge coefficients plus the link per block. Identity
/// links everywhere reduce the model to the linear one exactly.
struct FunctionalParams {
    Parameters coef;
    FunctionalLinks links;
    double fd_step = 1e-5;
};

enum class DerivativeMode { Analytic, FiniteDifference };

/// Least squares on link-transformed parent features over the skeleton's
/// support. Features and responses are demeaned before the solve, so
/// centered pipeline data and raw data are both handled. Throws
/// std::runtime_error naming the response on rank-deficient designs.
FunctionalParams fit_functional(const Dataset& data, const Skeleton& skel,
                                const FunctionalLinks& links);

/// E[M | do(A=a), X=x] under the functional model (block-triangular solve).
Vector functional_mediator_mean(const FunctionalParams& fp, const Vector& x, double a);

TreatmentEffects functional_treatment_effects(const FunctionalParams& fp, const Vector& x,
                                              double a,
                                              DerivativeMode mode = DerivativeMode::Analytic);

std::vector<MediatorEffects> functional_mediator_effects(
    const FunctionalParams& fp, const Vector& x, double a,
    DerivativeMode mode = DerivativeMode::Analytic);

EffectReport functional_effect_report(const FunctionalParams& fp, const Vector& x, double a,
                                      DerivativeMode mode = DerivativeMode::Analytic);

/// Nonlinear forward sampler for oracle tests: same block-triangular scheme
/// as the linear generator with links applied.
Dataset functional_forward_sample(const FunctionalParams& fp, int n, double baseline,
                                  bool center, Rng& rng);

}  // namespace hcg
