#include "hcg/debias.hpp"

#include <cmath>

namespace hcg {

namespace {

double soft_threshold(double v, double kappa) {
    if (v > kappa) return v - kappa;
    if (v < -kappa) return v + kappa;
    return 0.0;
}

}  // namespace

double lasso_lambda_max(const Matrix& x, const Vector& y) {
    const double n = static_cast<double>(x.rows());
    return (x.transpose() * y).cwiseAbs().maxCoeff() / n;
}

Vector lasso(const Matrix& x, const Vector& y, double lambda, int max_iter, double tol) {
    if (x.rows() < 1 || x.cols() < 1)
        throw std::invalid_argument("lasso: empty design");
    if (x.rows() != y.size())
        throw std::invalid_argument("lasso: design/response size mismatch");
    if (!x.allFinite() || !y.allFinite() || !std::isfinite(lambda) || lambda < 0.0)
        throw std::invalid_argument("lasso: non-finite input");

    const int k = static_cast<int>(x.cols());
    const double n = static_cast<double>(x.rows());
    Vector col_sq(k);
    for (int j = 0; j < k; ++j) col_sq(j) = x.col(j).squaredNorm() / n;

    Vector beta = Vector::Zero(k);
    Vector residual = y;
    for (int iter = 0; iter < max_iter; ++iter) {
        double max_change = 0.0;
        for (int j = 0; j < k; ++j) {
            if (col_sq(j) == 0.0) continue;
            const double rho = x.col(j).dot(residual) / n + col_sq(j) * beta(j);
            const double updated = soft_threshold(rho, lambda) / col_sq(j);
            const double change = updated - beta(j);
            if (change != 0.0) {
                residual -= change * x.col(j);
                beta(j) = updated;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        if (max_change < tol) break;
    }
    return beta;
}

WeightedGraph refit(const Dataset& data, const Skeleton& skel, const LassoConfig& cfg) {
    cfg.validate();
    if (data.layout != skel.layout)
        throw std::invalid_argument("refit: dataset and skeleton layouts differ");

    const int w = skel.layout.size();
    WeightedGraph out(skel.layout);

    for (int j = 0; j < w; ++j) {
        std::vector<int> parents;
        for (int i = 0; i < w; ++i)
            if (skel.e(i, j)) parents.push_back(i);
        if (parents.empty()) continue;

        Matrix design(data.rows(), parents.size());
        for (size_t c = 0; c < parents.size(); ++c)
            design.col(c) = data.values.col(parents[c]);
        const Vector response = data.values.col(j);

        const double lambda = cfg.lambda_frac * lasso_lambda_max(design, response);
        const Vector beta = lasso(design, response, lambda, cfg.max_iter, cfg.tol);
        for (size_t c = 0; c < parents.size(); ++c) out.b(parents[c], j) = beta(c);
    }
    return out;
}

}  // namespace hcg
