#include "hcg/effects.hpp"

#include <cmath>

namespace hcg {

Vector mediator_response(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("mediator_response: x has wrong dimension");
    const int s = params.s;
    const std::vector<int> topo = mediator_topological_order(params.b_m);

    const Vector rhs = params.beta_a + params.b_xa.transpose() * x;
    Vector z = Vector::Zero(s);
    for (int i : topo) {
        double v = rhs(i);
        for (int k = 0; k < s; ++k)
            if (params.b_m(k, i) != 0.0) v += params.b_m(k, i) * z(k);
        z(i) = v;
    }
    return z;
}

TreatmentEffects treatment_effects(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("treatment_effects: x has wrong dimension");
    TreatmentEffects eff;
    eff.x = x;
    eff.hde = params.gamma_a + params.gamma_xa.dot(x);
    eff.hie = params.s > 0 ? params.gamma_m.dot(mediator_response(params, x)) : 0.0;
    eff.hte = eff.hde + eff.hie;
    return eff;
}

std::vector<MediatorEffects> mediator_effects(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("mediator_effects: x has wrong dimension");
    std::vector<MediatorEffects> out;
    if (params.s == 0) return out;

    const Vector delta = mediator_response(params, x);
    const double hie = params.gamma_m.dot(delta);
    out.reserve(params.s);
    for (int i = 0; i < params.s; ++i) {
        MediatorEffects m;
        m.index = i;
        m.delta = delta(i);
        m.hdm = params.gamma_m(i) * delta(i);
        const Parameters reduced = remove_mediator(params, i);
        const double hie_reduced =
            reduced.s > 0 ? reduced.gamma_m.dot(mediator_response(reduced, x)) : 0.0;
        m.htm = hie - hie_reduced;
        m.him = m.htm - m.hdm;
        out.push_back(m);
    }
    return out;
}

TreatmentEffects xm_effects(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("xm_effects: x has wrong dimension");
    if (!params.gamma_xm)
        throw std::invalid_argument("xm_effects: parameters carry no XM-interaction block");
    TreatmentEffects eff;
    eff.x = x;
    eff.hde = params.gamma_a + params.gamma_xa.dot(x);
    if (params.s > 0) {
        const Vector gamma_eff = params.gamma_m + params.gamma_xm->transpose() * x;
        eff.hie = gamma_eff.dot(mediator_response(params, x));
    }
    eff.hte = eff.hde + eff.hie;
    return eff;
}

EffectReport effect_report(const Parameters& params, const Vector& x) {
    EffectReport report;
    report.x = x;
    if (params.gamma_xm) {
        report.treatment = xm_effects(params, x);
        // per-mediator decomposition with the moderated outcome weights
        // gamma_M + x^T Gamma_XM, so sum(hdm) == hie still holds
        Parameters eff = params;
        eff.gamma_m = params.gamma_m + params.gamma_xm->transpose() * x;
        eff.gamma_xm.reset();
        report.mediators = mediator_effects(eff, x);
    } else {
        report.treatment = treatment_effects(params, x);
        report.mediators = mediator_effects(params, x);
    }
    return report;
}

McMoments mc_do_oracle(const Parameters& params, const Vector& x, const DoIntervention& iv,
                       int n_mc, Rng& rng, double baseline) {
    if (n_mc < 1) throw std::invalid_argument("mc_do_oracle: n_mc must be positive");
    if (x.size() != params.p)
        throw std::invalid_argument("mc_do_oracle: x has wrong dimension");
    const int s = params.s;
    const std::vector<int> topo = mediator_topological_order(params.b_m);

    std::vector<char> intervened(s, 0);
    for (const auto& mdo : iv.mediators) {
        if (mdo.index < 0 || mdo.index >= s)
            throw std::out_of_range("mc_do_oracle: mediator index out of range");
        intervened[mdo.index] = 1;
    }

    double y_sum = 0, y_sq = 0;
    Vector m_sum = Vector::Zero(s), m_sq = Vector::Zero(s);
    Vector m_nat(s), m_act(s), eps_m(s);

    const Vector x_to_m = params.b_x.transpose() * x;      // constant in a
    const Vector xa_coef = params.b_xa.transpose() * x;    // multiplies a
    const double y_x = params.gamma_x.dot(x);
    const double y_xa = params.gamma_xa.dot(x);            // multiplies a
    Vector gamma_eff = params.gamma_m;
    if (params.gamma_xm) gamma_eff += params.gamma_xm->transpose() * x;

    for (int r = 0; r < n_mc; ++r) {
        const double eps_a = rng.normal();
        for (int i = 0; i < s; ++i) eps_m(i) = rng.normal();
        const double eps_y = rng.normal();

        const double a = iv.treatment ? *iv.treatment : params.delta_x.dot(x) + eps_a;

        // natural mediator values under this noise draw
        for (int i : topo) {
            double v = x_to_m(i) + xa_coef(i) * a + params.beta_a(i) * a + eps_m(i);
            for (int k = 0; k < s; ++k)
                if (params.b_m(k, i) != 0.0) v += params.b_m(k, i) * m_nat(k);
            m_nat(i) = v;
        }

        // actual values with interventions applied
        for (int i : topo) {
            if (iv.freeze_other_mediators && !intervened[i]) {
                m_act(i) = m_nat(i);
                continue;
            }
            if (!intervened[i]) {
                double v = x_to_m(i) + xa_coef(i) * a + params.beta_a(i) * a + eps_m(i);
                for (int k = 0; k < s; ++k)
                    if (params.b_m(k, i) != 0.0) v += params.b_m(k, i) * m_act(k);
                m_act(i) = v;
            }
            for (const auto& mdo : iv.mediators)
                if (mdo.index == i)
                    m_act(i) = mdo.relative ? m_nat(i) + mdo.value : mdo.value;
        }

        const double y = y_x + params.gamma_a * a + y_xa * a + gamma_eff.dot(m_act) +
                         eps_y + baseline;
        y_sum += y;
        y_sq += y * y;
        m_sum += m_act;
        m_sq += m_act.cwiseProduct(m_act);
    }

    McMoments out;
    const double n = static_cast<double>(n_mc);
    out.y_mean = y_sum / n;
    out.y_se = n > 1 ? std::sqrt(std::max(0.0, y_sq / n - out.y_mean * out.y_mean) / (n - 1))
                     : 0.0;
    out.m_mean = m_sum / n;
    out.m_se = Vector::Zero(s);
    if (n > 1)
        for (int i = 0; i < s; ++i)
            out.m_se(i) = std::sqrt(
                std::max(0.0, m_sq(i) / n - out.m_mean(i) * out.m_mean(i)) / (n - 1));
    return out;
}

namespace {

double path_sum_from(const Parameters& params, int i, double prefix) {
    double total = prefix * params.gamma_m(i);
    for (int k = 0; k < params.s; ++k)
        if (params.b_m(i, k) != 0.0)
            total += path_sum_from(params, k, prefix * params.b_m(i, k));
    return total;
}

}  // namespace

double hie_path_sum(const Parameters& params, const Vector& x) {
    if (x.size() != params.p)
        throw std::invalid_argument("hie_path_sum: x has wrong dimension");
    if (params.s == 0) return 0.0;
    mediator_topological_order(params.b_m);  // reject cyclic blocks up front
    const Vector a_to_m = params.beta_a + params.b_xa.transpose() * x;
    double total = 0.0;
    for (int i = 0; i < params.s; ++i)
        if (a_to_m(i) != 0.0) total += path_sum_from(params, i, a_to_m(i));
    return total;
}

}  // namespace hcg
