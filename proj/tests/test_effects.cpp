#include "hcg/effects.hpp"
#include "hcg/scenario.hpp"

#include <doctest.h>

#include <cmath>

using namespace hcg;

namespace {

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

Vector random_x(int p, Rng& rng) {
    Vector x(p);
    for (int j = 0; j < p; ++j) x(j) = 4.0 * rng.uniform() - 2.0;
    return x;
}

// do(A=a) vs do(A=a+1) with independent noise streams; returns the MC
// estimate of the total-effect derivative and its standard error.
std::pair<double, double> mc_total_effect(const Parameters& params, const Vector& x,
                                          double a, int n_mc, Rng& rng) {
    DoIntervention lo_iv, hi_iv;
    lo_iv.treatment = a;
    hi_iv.treatment = a + 1.0;
    Rng lo_rng = rng.derive(1), hi_rng = rng.derive(2);
    const McMoments lo = mc_do_oracle(params, x, lo_iv, n_mc, lo_rng);
    const McMoments hi = mc_do_oracle(params, x, hi_iv, n_mc, hi_rng);
    const double se = std::sqrt(lo.y_se * lo.y_se + hi.y_se * hi.y_se);
    return {hi.y_mean - lo.y_mean, se};
}

}  // namespace

TEST_CASE("effects without interactions are identical across moderator values") {
    Rng rng(101);
    const Parameters params = random_parameters(3, 4, rng, /*with_interactions=*/false);
    const TreatmentEffects at0 = treatment_effects(params, Vector::Zero(3));
    const TreatmentEffects at5 = treatment_effects(params, Vector::Constant(3, 5.0));
    CHECK(at0.hde == at5.hde);
    CHECK(at0.hie == at5.hie);
    CHECK(at0.hte == at5.hte);
}

TEST_CASE("zero outcome weights on mediators kill the indirect effect") {
    Rng rng(103);
    Parameters params = random_parameters(2, 4, rng);
    params.gamma_m.setZero();
    const TreatmentEffects eff = treatment_effects(params, random_x(2, rng));
    CHECK(eff.hie == 0.0);
    CHECK(eff.hte == eff.hde);
}

TEST_CASE("decomposition identities hold to 1e-12 on random draws") {
    Rng rng(107);
    for (int rep = 0; rep < 200; ++rep) {
        const int p = 1 + static_cast<int>(rng.uniform_index(3));
        const int s = 1 + static_cast<int>(rng.uniform_index(6));
        const Parameters params = random_parameters(p, s, rng);
        const Vector x = random_x(p, rng);

        const TreatmentEffects eff = treatment_effects(params, x);
        CHECK(std::abs(eff.hte - (eff.hde + eff.hie)) <= 1e-12);

        const auto meds = mediator_effects(params, x);
        double hdm_sum = 0.0;
        for (const MediatorEffects& m : meds) {
            hdm_sum += m.hdm;
            CHECK(std::abs(m.him - (m.htm - m.hdm)) <= 1e-12);
        }
        CHECK(std::abs(hdm_sum - eff.hie) <= 1e-12);
    }
}

TEST_CASE("two-path toy graph: delta, hdm, htm, him by path enumeration") {
    // A -> M1 -> Y and A -> M1 -> M2 -> Y, all unit weights.
    Parameters params(1, 2);
    params.beta_a(0) = 1.0;
    params.b_m(0, 1) = 1.0;  // M1 -> M2
    params.gamma_m(0) = 1.0;
    params.gamma_m(1) = 1.0;
    const Vector x = Vector::Zero(1);

    const TreatmentEffects eff = treatment_effects(params, x);
    CHECK(eff.hie == doctest::Approx(2.0));  // both paths carry weight 1
    CHECK(hie_path_sum(params, x) == doctest::Approx(2.0));

    const auto meds = mediator_effects(params, x);
    REQUIRE(meds.size() == 2);
    CHECK(meds[0].delta == doctest::Approx(1.0));
    CHECK(meds[1].delta == doctest::Approx(1.0));
    CHECK(meds[0].hdm == doctest::Approx(1.0));
    CHECK(meds[1].hdm == doctest::Approx(1.0));
    // removing M1 kills both indirect paths, removing M2 kills one
    CHECK(meds[0].htm == doctest::Approx(2.0));
    CHECK(meds[1].htm == doctest::Approx(1.0));
    CHECK(meds[0].him == doctest::Approx(1.0));
    CHECK(meds[1].him == doctest::Approx(0.0));
}

TEST_CASE("pure chain: removing the entry mediator zeroes the indirect effect") {
    // A -> M1 -> M2 -> Y, unit weights, no M1 -> Y edge.
    Parameters params(1, 2);
    params.beta_a(0) = 1.0;
    params.b_m(0, 1) = 1.0;
    params.gamma_m(1) = 1.0;
    const Vector x = Vector::Zero(1);

    CHECK(treatment_effects(params, x).hie == doctest::Approx(1.0));
    const Parameters without_m1 = remove_mediator(params, 0);
    CHECK(treatment_effects(without_m1, x).hie == doctest::Approx(0.0));
}

TEST_CASE("single mediator removal leaves a mediator-free graph") {
    Rng rng(109);
    Parameters params = random_parameters(2, 1, rng);
    const Parameters reduced = remove_mediator(params, 0);
    CHECK(reduced.s == 0);
    CHECK(treatment_effects(reduced, Vector::Zero(2)).hie == 0.0);
    CHECK(mediator_effects(reduced, Vector::Zero(2)).empty());
}

TEST_CASE("parallel mediators: removal drops hie by exactly that hdm") {
    Rng rng(113);
    Parameters params = random_parameters(2, 5, rng);
    params.b_m.setZero();  // parallel
    const Vector x = random_x(2, rng);
    const double hie = treatment_effects(params, x).hie;
    const auto meds = mediator_effects(params, x);
    for (int i = 0; i < 5; ++i) {
        CHECK(meds[i].him == doctest::Approx(0.0).epsilon(1e-12));
        const double hie_without = treatment_effects(remove_mediator(params, i), x).hie;
        CHECK(hie - hie_without == doctest::Approx(meds[i].hdm).epsilon(1e-12));
    }
}

TEST_CASE("path-sum oracle agrees with the closed form on random graphs") {
    Rng rng(127);
    for (int rep = 0; rep < 50; ++rep) {
        const int p = 1 + static_cast<int>(rng.uniform_index(2));
        const int s = 1 + static_cast<int>(rng.uniform_index(6));
        const Parameters params = random_parameters(p, s, rng);
        const Vector x = random_x(p, rng);
        CHECK(std::abs(treatment_effects(params, x).hie - hie_path_sum(params, x)) < 1e-10);
    }
}

TEST_CASE("two-path shape with general weights sums w1*w2 + w1*w3*w4") {
    Rng rng(129);
    for (int rep = 0; rep < 10; ++rep) {
        const double w1 = 2.0 * rng.uniform() - 1.0;
        const double w2 = 2.0 * rng.uniform() - 1.0;
        const double w3 = 2.0 * rng.uniform() - 1.0;
        const double w4 = 2.0 * rng.uniform() - 1.0;
        Parameters params(1, 2);
        params.beta_a(0) = w1;   // A -> M1
        params.gamma_m(0) = w2;  // M1 -> Y
        params.b_m(0, 1) = w3;   // M1 -> M2
        params.gamma_m(1) = w4;  // M2 -> Y
        const Vector x = Vector::Zero(1);
        const double expected = w1 * w2 + w1 * w3 * w4;
        CHECK(hie_path_sum(params, x) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(treatment_effects(params, x).hie == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("path-sum is zero without A -> M edges") {
    Parameters params(1, 3);
    params.gamma_m.setConstant(1.0);
    params.b_m(0, 1) = 1.0;
    CHECK(hie_path_sum(params, Vector::Zero(1)) == 0.0);
}

TEST_CASE("mc oracle on a mediator-free graph reproduces the closed-form mean") {
    Rng rng(131);
    Parameters params = random_parameters(2, 0, rng);
    Vector x = random_x(2, rng);
    const double a = 1.5;
    DoIntervention iv;
    iv.treatment = a;
    Rng mc_rng(997);
    const McMoments mom = mc_do_oracle(params, x, iv, 200000, mc_rng);
    const double expected =
        params.gamma_x.dot(x) + params.gamma_a * a + params.gamma_xa.dot(x) * a;
    CHECK(std::abs(mom.y_mean - expected) < 3.0 * mom.y_se + 1e-12);
}

TEST_CASE("closed-form hte matches the mc finite difference within 3 SE") {
    Rng rng(137);
    int hits = 0;
    const int cases = 10;
    for (int rep = 0; rep < cases; ++rep) {
        const Parameters params = random_parameters(2, 4, rng);
        const Vector x = random_x(2, rng);
        const TreatmentEffects eff = treatment_effects(params, x);
        Rng mc_rng(1000 + rep);
        const auto [mc, se] = mc_total_effect(params, x, 0.0, 200000, mc_rng);
        if (std::abs(mc - eff.hte) <= 3.0 * se) ++hits;
    }
    CHECK(hits >= cases - 1);
}

TEST_CASE("intervening on all mediators makes Y independent of beta_a") {
    Rng rng(139);
    Parameters params = random_parameters(1, 3, rng);
    const Vector x = random_x(1, rng);
    DoIntervention iv;
    iv.treatment = 1.0;
    for (int i = 0; i < 3; ++i) iv.mediators.push_back({i, 0.5, false});

    Parameters scaled = params;
    scaled.beta_a *= 10.0;  // must not matter once mediators are severed

    Rng r1(55), r2(55);
    const McMoments base = mc_do_oracle(params, x, iv, 20000, r1);
    const McMoments moved = mc_do_oracle(scaled, x, iv, 20000, r2);
    CHECK(base.y_mean == doctest::Approx(moved.y_mean).epsilon(1e-12));
    for (int i = 0; i < 3; ++i) CHECK(base.m_mean(i) == doctest::Approx(0.5));
}

TEST_CASE("xm extension reduces to the plain closed form at zero interaction") {
    Rng rng(149);
    Parameters params = random_parameters(2, 3, rng);
    params.gamma_xm = Matrix::Zero(2, 3);
    const Vector x = random_x(2, rng);
    const TreatmentEffects plain = treatment_effects(params, x);
    const TreatmentEffects ext = xm_effects(params, x);
    CHECK(ext.hde == plain.hde);
    CHECK(ext.hie == plain.hie);
    CHECK(ext.hte == plain.hte);
}

TEST_CASE("xm toy case: hie is 3 and the mc oracle agrees") {
    Parameters params(1, 1);
    params.gamma_m(0) = 1.0;
    params.beta_a(0) = 1.0;
    params.gamma_xm = Matrix::Constant(1, 1, 2.0);
    Vector x(1);
    x << 1.0;

    const TreatmentEffects eff = xm_effects(params, x);
    CHECK(eff.hie == doctest::Approx(3.0));  // (1 + 1*2) * 1

    // finite difference of the XM-extended simulator
    auto [mc, se] = [&]() {
        DoIntervention lo_iv, hi_iv;
        lo_iv.treatment = 0.0;
        hi_iv.treatment = 1.0;
        Rng r1(71), r2(72);
        const McMoments lo = mc_do_oracle(params, x, lo_iv, 200000, r1);
        const McMoments hi = mc_do_oracle(params, x, hi_iv, 200000, r2);
        return std::pair<double, double>(hi.y_mean - lo.y_mean,
                                         std::sqrt(lo.y_se * lo.y_se + hi.y_se * hi.y_se));
    }();
    CHECK(std::abs(mc - eff.hte) <= 3.0 * se);
}

TEST_CASE("xm hie at x=0 uses the unmoderated outcome weights") {
    Rng rng(151);
    Parameters params = random_parameters(2, 3, rng);
    params.gamma_xm = Matrix::Constant(2, 3, 0.7);
    const Vector zero = Vector::Zero(2);
    CHECK(xm_effects(params, zero).hie ==
          doctest::Approx(treatment_effects(params, zero).hie).epsilon(1e-14));

    Parameters no_xm = params;
    no_xm.gamma_xm.reset();
    CHECK_THROWS_AS(xm_effects(no_xm, zero), std::invalid_argument);
}

TEST_CASE("effect report under xm keeps the decomposition identities") {
    Rng rng(157);
    Parameters params = random_parameters(2, 4, rng);
    params.gamma_xm = Matrix::Random(2, 4);
    const Vector x = random_x(2, rng);
    const EffectReport rep = effect_report(params, x);
    double hdm_sum = 0.0;
    for (const auto& m : rep.mediators) hdm_sum += m.hdm;
    CHECK(std::abs(hdm_sum - rep.treatment.hie) <= 1e-12);
    CHECK(std::abs(rep.treatment.hte - rep.treatment.hde - rep.treatment.hie) <= 1e-12);
}

TEST_CASE("published decomposition arithmetic reproduces in rendered reports") {
    // whole-population and male rows of the published effect tables
    TreatmentEffects whole;
    whole.hde = 0.1160;
    whole.hie = 0.0771;
    whole.hte = whole.hde + whole.hie;
    CHECK(whole.hte == doctest::Approx(0.1931).epsilon(1e-12));

    TreatmentEffects male;
    male.hde = 0.1729;
    male.hie = 0.0690;
    male.hte = male.hde + male.hie;
    CHECK(std::abs(male.hte - 0.2418) <= 5e-4);
}

TEST_CASE("moderator dimension mismatches are rejected") {
    Rng rng(163);
    const Parameters params = random_parameters(2, 3, rng);
    const Vector wrong = Vector::Zero(3);
    CHECK_THROWS_AS(treatment_effects(params, wrong), std::invalid_argument);
    CHECK_THROWS_AS(mediator_effects(params, wrong), std::invalid_argument);
    CHECK_THROWS_AS(hie_path_sum(params, wrong), std::invalid_argument);
    Parameters with_xm = params;
    with_xm.gamma_xm = Matrix::Zero(2, 3);
    CHECK_THROWS_AS(xm_effects(with_xm, wrong), std::invalid_argument);
}

TEST_CASE("cyclic mediator blocks raise everywhere") {
    Parameters params(1, 2);
    params.b_m(0, 1) = 1.0;
    params.b_m(1, 0) = 1.0;
    params.beta_a.setOnes();
    params.gamma_m.setOnes();
    const Vector x = Vector::Zero(1);
    CHECK_THROWS_WITH_AS(treatment_effects(params, x), "cyclic mediators",
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(hie_path_sum(params, x), "cyclic mediators", std::runtime_error);
    Rng rng(1);
    DoIntervention iv;
    CHECK_THROWS_WITH_AS(mc_do_oracle(params, x, iv, 10, rng), "cyclic mediators",
                         std::runtime_error);
}
