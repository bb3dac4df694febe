#pragma once

#include "hcg/graph.hpp"
#include "hcg/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hcg {

/// Effects of the treatment on the outcome at moderator value x.
/// hte == hde + hie holds exactly by construction.
struct TreatmentEffects {
    double hde = 0;
    double hie = 0;
    double hte = 0;
    Vector x;
};

/// Effects of one mediator on the outcome at moderator value x.
/// him == htm - hdm by construction; summing hdm over mediators gives hie.
struct MediatorEffects {
    int index = 0;     // 0-based mediator index
    double delta = 0;  // treatment-on-mediator effect
    double hdm = 0;
    double him = 0;
    double htm = 0;
};

struct EffectReport {
    Vector x;
    std::optional<double> a;  // set for functional-model reports
    TreatmentEffects treatment;
    std::vector<MediatorEffects> mediators;
    std::string provenance;
};

/// Treatment-on-mediator derivatives (I - B_M^T)^{-1}(beta_A + B_XA^T x),
/// solved in mediator topological order. Throws on cyclic mediators.
Vector mediator_response(const Parameters& params, const Vector& x);

/// Closed-form direct/indirect/total treatment effects:
/// hde = gamma_A + gamma_XA . x,
/// hie = gamma_M (I - B_M^T)^{-1} (beta_A + B_XA^T x).
/// Ignores the optional XM-interaction block; see xm_effects.
TreatmentEffects treatment_effects(const Parameters& params, const Vector& x);

/// Per-mediator effects: hdm_i = {gamma_M}_i * delta_i, htm_i obtained by
/// removing mediator i from the graph and differencing hie, him = htm - hdm.
std::vector<MediatorEffects> mediator_effects(const Parameters& params, const Vector& x);

/// Treatment effects under the XM-interaction extension:
/// hie = (gamma_M + x^T Gamma_XM)(I - B_M^T)^{-1}(beta_A + B_XA^T x).
/// Requires params.gamma_xm.
TreatmentEffects xm_effects(const Parameters& params, const Vector& x);

/// Full treatment + mediator report; dispatches to the XM forms when the
/// parameter set carries an XM-interaction block.
EffectReport effect_report(const Parameters& params, const Vector& x);

/// do-operator intervention for the Monte-Carlo oracle.
struct DoIntervention {
    std::optional<double> treatment;  // do(A = a)

    struct MediatorDo {
        int index = 0;
        double value = 0;
        bool relative = false;  // true: do(M_i = m_i^(a) + value)
    };
    std::vector<MediatorDo> mediators;

    /// Pin every non-intervened mediator at its natural value under the
    /// same noise draw (the fixed-other-mediators configuration).
    bool freeze_other_mediators = false;
};

struct McMoments {
    double y_mean = 0;
    double y_se = 0;
    Vector m_mean;  // length s
    Vector m_se;
};

/// Forward-simulates the SEM with X held at x and intervened nodes severed
/// from their parents; independent of the closed-form effect path. Includes
/// the XM-interaction term in Y when params.gamma_xm is present.
McMoments mc_do_oracle(const Parameters& params, const Vector& x, const DoIntervention& iv,
                       int n_mc, Rng& rng, double baseline = 0.0);

/// Path-enumeration oracle for hie: sums weight products over every directed
/// path A -> M_k1 -> ... -> Y, with A->M weights beta_A + B_XA^T x. Equals
/// the closed form exactly for acyclic mediator blocks.
double hie_path_sum(const Parameters& params, const Vector& x);

}  // namespace hcg
