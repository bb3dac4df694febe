#include "hcg/functional.hpp"

#include <algorithm>
#include <cmath>

namespace hcg {

LinkFunction LinkFunction::identity() { return LinkFunction{}; }

LinkFunction LinkFunction::polynomial(int degree) {
    if (degree < 1) throw std::invalid_argument("polynomial link: degree must be >= 1");
    LinkFunction f;
    f.kind_ = LinkKind::Polynomial;
    f.degree_ = degree;
    return f;
}

LinkFunction LinkFunction::sine() {
    LinkFunction f;
    f.kind_ = LinkKind::Sine;
    return f;
}

LinkFunction LinkFunction::tanh() {
    LinkFunction f;
    f.kind_ = LinkKind::Tanh;
    return f;
}

LinkFunction LinkFunction::table(std::vector<std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("table link: need at least 2 points");
    std::sort(points.begin(), points.end());
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i].first == points[i - 1].first)
            throw std::invalid_argument("table link: duplicate abscissa");
    LinkFunction f;
    f.kind_ = LinkKind::Table;
    f.table_ = std::move(points);
    return f;
}

double LinkFunction::operator()(double z) const {
    switch (kind_) {
        case LinkKind::Identity: return z;
        case LinkKind::Polynomial: return std::pow(z, degree_);
        case LinkKind::Sine: return std::sin(z);
        case LinkKind::Tanh: return std::tanh(z);
        case LinkKind::Table: {
            // linear interpolation, end segments extrapolate
            const auto& t = table_;
            if (z <= t.front().first) {
                const double slope = (t[1].second - t[0].second) / (t[1].first - t[0].first);
                return t[0].second + slope * (z - t[0].first);
            }
            if (z >= t.back().first) {
                const size_t m = t.size();
                const double slope = (t[m - 1].second - t[m - 2].second) /
                                     (t[m - 1].first - t[m - 2].first);
                return t[m - 1].second + slope * (z - t[m - 1].first);
            }
            auto hi = std::upper_bound(t.begin(), t.end(), std::make_pair(z, 0.0),
                                       [](const auto& a, const auto& b) { return a.first < b.first; });
            auto lo = hi - 1;
            const double frac = (z - lo->first) / (hi->first - lo->first);
            return lo->second + frac * (hi->second - lo->second);
        }
    }
    return z;
}

double LinkFunction::derivative(double z) const {
    switch (kind_) {
        case LinkKind::Identity: return 1.0;
        case LinkKind::Polynomial:
            return degree_ * std::pow(z, degree_ - 1);
        case LinkKind::Sine: return std::cos(z);
        case LinkKind::Tanh: {
            const double th = std::tanh(z);
            return 1.0 - th * th;
        }
        case LinkKind::Table: return derivative_fd(z, 1e-5);
    }
    return 1.0;
}

double LinkFunction::derivative_fd(double z, double h) const {
    return ((*this)(z + h) - (*this)(z - h)) / (2.0 * h);
}

namespace {

double link_deriv(const LinkFunction& f, double z, DerivativeMode mode, double h) {
    if (mode == DerivativeMode::Analytic && f.has_analytic_derivative())
        return f.derivative(z);
    return f.derivative_fd(z, h);
}

}  // namespace

FunctionalParams fit_functional(const Dataset& data, const Skeleton& skel,
                                const FunctionalLinks& links) {
    if (data.layout != skel.layout)
        throw std::invalid_argument("fit_functional: dataset and skeleton layouts differ");
    const BlockLayout& l = skel.layout;
    const int w = l.size();
    const int n = data.rows();

    FunctionalParams fp;
    fp.coef = Parameters(l.p, l.s);
    fp.links = links;

    const Matrix raw = data.uncentered();

    auto link_for = [&](int response, int parent) -> const LinkFunction& {
        if (l.is_a(response) && l.is_x(parent)) return links.a_x;
        if (l.is_m(response)) {
            if (l.is_x(parent)) return links.m_x;
            if (l.is_a(parent)) return links.m_a;
            if (l.is_xa(parent)) return links.m_xa;
            if (l.is_m(parent)) {
                static const LinkFunction ident = LinkFunction::identity();
                return ident;  // mediator-to-mediator edges stay linear
            }
        }
        if (l.is_y(response)) {
            if (l.is_x(parent)) return links.y_x;
            if (l.is_a(parent)) return links.y_a;
            if (l.is_xa(parent)) return links.y_xa;
            if (l.is_m(parent)) return links.y_m;
        }
        throw std::invalid_argument("fit_functional: skeleton edge " +
                                    l.node_name(parent) + " -> " + l.node_name(response) +
                                    " violates the structural constraints");
    };

    auto write_coef = [&](int response, int parent, double value) {
        Parameters& c = fp.coef;
        if (l.is_a(response)) {
            c.delta_x(parent) = value;
            return;
        }
        if (l.is_m(response)) {
            const int mi = response - l.m_begin();
            if (l.is_x(parent)) c.b_x(parent, mi) = value;
            else if (l.is_a(parent)) c.beta_a(mi) = value;
            else if (l.is_xa(parent)) c.b_xa(parent - l.xa_begin(), mi) = value;
            else c.b_m(parent - l.m_begin(), mi) = value;
            return;
        }
        if (l.is_x(parent)) c.gamma_x(parent) = value;
        else if (l.is_a(parent)) c.gamma_a = value;
        else if (l.is_xa(parent)) c.gamma_xa(parent - l.xa_begin()) = value;
        else c.gamma_m(parent - l.m_begin()) = value;
    };

    for (int j = 0; j < w; ++j) {
        if (l.is_x(j) || l.is_xa(j)) continue;
        std::vector<int> parents;
        for (int i = 0; i < w; ++i)
            if (skel.e(i, j)) parents.push_back(i);
        if (parents.empty()) continue;

        Matrix design(n, parents.size());
        for (size_t c = 0; c < parents.size(); ++c) {
            const LinkFunction& f = link_for(j, parents[c]);
            for (int r = 0; r < n; ++r) design(r, c) = f(raw(r, parents[c]));
        }
        design.rowwise() -= design.colwise().mean().eval();
        Vector response = raw.col(j);
        response.array() -= response.mean();

        Eigen::ColPivHouseholderQR<Matrix> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < static_cast<Eigen::Index>(parents.size()))
            throw std::runtime_error("fit_functional: rank-deficient design for response " +
                                     l.node_name(j));
        const Vector beta = qr.solve(response);
        for (size_t c = 0; c < parents.size(); ++c) write_coef(j, parents[c], beta(c));
    }
    return fp;
}

Vector functional_mediator_mean(const FunctionalParams& fp, const Vector& x, double a) {
    const Parameters& c = fp.coef;
    if (x.size() != c.p)
        throw std::invalid_argument("functional_mediator_mean: x has wrong dimension");
    const int s = c.s;
    const std::vector<int> topo = mediator_topological_order(c.b_m);

    Vector rhs = Vector::Zero(s);
    for (int i = 0; i < s; ++i) {
        double v = c.beta_a(i) * fp.links.m_a(a);
        for (int j = 0; j < c.p; ++j) {
            v += c.b_x(j, i) * fp.links.m_x(x(j));
            v += c.b_xa(j, i) * fp.links.m_xa(x(j) * a);
        }
        rhs(i) = v;
    }
    Vector m = Vector::Zero(s);
    for (int i : topo) {
        double v = rhs(i);
        for (int k = 0; k < s; ++k)
            if (c.b_m(k, i) != 0.0) v += c.b_m(k, i) * m(k);
        m(i) = v;
    }
    return m;
}

namespace {

// d m^(a) / da: the same mediator resolvent applied to the link slopes.
Vector mediator_mean_slope(const FunctionalParams& fp, const Vector& x, double a,
                           DerivativeMode mode) {
    const Parameters& c = fp.coef;
    const int s = c.s;
    const std::vector<int> topo = mediator_topological_order(c.b_m);

    Vector rhs = Vector::Zero(s);
    const double dma = link_deriv(fp.links.m_a, a, mode, fp.fd_step);
    for (int i = 0; i < s; ++i) {
        double v = c.beta_a(i) * dma;
        for (int j = 0; j < c.p; ++j)
            v += c.b_xa(j, i) * x(j) * link_deriv(fp.links.m_xa, x(j) * a, mode, fp.fd_step);
        rhs(i) = v;
    }
    Vector dm = Vector::Zero(s);
    for (int i : topo) {
        double v = rhs(i);
        for (int k = 0; k < s; ++k)
            if (c.b_m(k, i) != 0.0) v += c.b_m(k, i) * dm(k);
        dm(i) = v;
    }
    return dm;
}

double functional_hie(const FunctionalParams& fp, const Vector& x, double a,
                      DerivativeMode mode) {
    if (fp.coef.s == 0) return 0.0;
    const Vector m = functional_mediator_mean(fp, x, a);
    const Vector dm = mediator_mean_slope(fp, x, a, mode);
    double hie = 0.0;
    for (int i = 0; i < fp.coef.s; ++i)
        hie += fp.coef.gamma_m(i) * link_deriv(fp.links.y_m, m(i), mode, fp.fd_step) * dm(i);
    return hie;
}

FunctionalParams remove_mediator_fp(const FunctionalParams& fp, int i) {
    FunctionalParams out = fp;
    out.coef = remove_mediator(fp.coef, i);
    return out;
}

}  // namespace

TreatmentEffects functional_treatment_effects(const FunctionalParams& fp, const Vector& x,
                                              double a, DerivativeMode mode) {
    const Parameters& c = fp.coef;
    if (x.size() != c.p)
        throw std::invalid_argument("functional_treatment_effects: x has wrong dimension");

    TreatmentEffects eff;
    eff.x = x;
    eff.hde = c.gamma_a * link_deriv(fp.links.y_a, a, mode, fp.fd_step);
    for (int j = 0; j < c.p; ++j)
        eff.hde += c.gamma_xa(j) * x(j) * link_deriv(fp.links.y_xa, x(j) * a, mode, fp.fd_step);
    eff.hie = functional_hie(fp, x, a, mode);
    eff.hte = eff.hde + eff.hie;
    return eff;
}

std::vector<MediatorEffects> functional_mediator_effects(const FunctionalParams& fp,
                                                         const Vector& x, double a,
                                                         DerivativeMode mode) {
    std::vector<MediatorEffects> out;
    const int s = fp.coef.s;
    if (s == 0) return out;

    const Vector m = functional_mediator_mean(fp, x, a);
    const Vector dm = mediator_mean_slope(fp, x, a, mode);
    const double hie = functional_hie(fp, x, a, mode);
    out.reserve(s);
    for (int i = 0; i < s; ++i) {
        MediatorEffects me;
        me.index = i;
        me.delta = dm(i);
        me.hdm = fp.coef.gamma_m(i) * link_deriv(fp.links.y_m, m(i), mode, fp.fd_step) * dm(i);
        me.htm = hie - functional_hie(remove_mediator_fp(fp, i), x, a, mode);
        me.him = me.htm - me.hdm;
        out.push_back(me);
    }
    return out;
}

EffectReport functional_effect_report(const FunctionalParams& fp, const Vector& x, double a,
                                      DerivativeMode mode) {
    EffectReport report;
    report.x = x;
    report.a = a;
    report.treatment = functional_treatment_effects(fp, x, a, mode);
    report.mediators = functional_mediator_effects(fp, x, a, mode);
    return report;
}

Dataset functional_forward_sample(const FunctionalParams& fp, int n, double baseline,
                                  bool center, Rng& rng) {
    if (n < 1) throw std::invalid_argument("functional_forward_sample: n must be positive");
    const Parameters& c = fp.coef;
    const BlockLayout l(c.p, c.s);
    const std::vector<int> topo = mediator_topological_order(c.b_m);

    Dataset data;
    data.layout = l;
    data.values = Matrix::Zero(n, l.size());
    Matrix& d = data.values;

    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < l.p; ++j) d(r, j) = rng.normal();
        double a = rng.normal();
        for (int j = 0; j < l.p; ++j) a += c.delta_x(j) * fp.links.a_x(d(r, j));
        d(r, l.a_index()) = a;
        for (int j = 0; j < l.p; ++j) d(r, l.xa_begin() + j) = d(r, j) * a;

        for (int i : topo) {
            double m = c.beta_a(i) * fp.links.m_a(a) + rng.normal();
            for (int j = 0; j < l.p; ++j) {
                m += c.b_x(j, i) * fp.links.m_x(d(r, j));
                m += c.b_xa(j, i) * fp.links.m_xa(d(r, l.xa_begin() + j));
            }
            for (int k = 0; k < l.s; ++k)
                if (c.b_m(k, i) != 0.0) m += c.b_m(k, i) * d(r, l.m_begin() + k);
            d(r, l.m_begin() + i) = m;
        }

        double y = c.gamma_a * fp.links.y_a(a) + baseline + rng.normal();
        for (int j = 0; j < l.p; ++j) {
            y += c.gamma_x(j) * fp.links.y_x(d(r, j));
            y += c.gamma_xa(j) * fp.links.y_xa(d(r, l.xa_begin() + j));
        }
        for (int i = 0; i < l.s; ++i)
            y += c.gamma_m(i) * fp.links.y_m(d(r, l.m_begin() + i));
        d(r, l.y_index()) = y;
    }

    data.column_means = d.colwise().mean();
    if (center) {
        d.rowwise() -= data.column_means.transpose();
        data.centered = true;
    }
    return data;
}

}  // namespace hcg
