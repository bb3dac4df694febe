#include "hcg/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace hcg {

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& cfg) {
    PipelineResult res;
    res.raw = fit(data, cfg.discovery);
    res.delta = cfg.fixed_threshold ? *cfg.fixed_threshold
                                    : select_threshold(res.raw, data, cfg.threshold_grid);
    res.skeleton = threshold_graph(res.raw, res.delta);
    res.refitted = refit(data, res.skeleton, cfg.lasso);
    return res;
}

int resolve_parallel_degree(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HCG_PARALLEL")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double empirical_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    std::sort(values.begin(), values.end());
    const auto k = static_cast<long>(values.size());
    long idx = static_cast<long>(std::ceil(q * static_cast<double>(k))) - 1;
    idx = std::clamp(idx, 0L, k - 1);
    return values[static_cast<size_t>(idx)];
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p in (0,1)");
    // Acklam's approximation, ~1e-9 absolute error.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

namespace {

std::vector<std::string> effect_names(int s, int n_x) {
    std::vector<std::string> names;
    for (int xi = 0; xi < n_x; ++xi) {
        const std::string sx = "@x" + std::to_string(xi);
        names.push_back("hte" + sx);
        names.push_back("hde" + sx);
        names.push_back("hie" + sx);
        for (int i = 0; i < s; ++i) {
            const std::string mi = std::to_string(i + 1);
            names.push_back("delta" + mi + sx);
            names.push_back("hdm" + mi + sx);
            names.push_back("him" + mi + sx);
            names.push_back("htm" + mi + sx);
        }
    }
    return names;
}

std::vector<double> effect_values(const Parameters& params, const std::vector<Vector>& x_list) {
    std::vector<double> vals;
    for (const Vector& x : x_list) {
        const EffectReport rep = effect_report(params, x);
        vals.push_back(rep.treatment.hte);
        vals.push_back(rep.treatment.hde);
        vals.push_back(rep.treatment.hie);
        for (const MediatorEffects& m : rep.mediators) {
            vals.push_back(m.delta);
            vals.push_back(m.hdm);
            vals.push_back(m.him);
            vals.push_back(m.htm);
        }
    }
    return vals;
}

Dataset resample_rows(const Dataset& data, Rng& rng) {
    Dataset out;
    out.layout = data.layout;
    const int n = data.rows();
    const Matrix raw = data.uncentered();
    out.values = Matrix(n, raw.cols());
    for (int r = 0; r < n; ++r)
        out.values.row(r) = raw.row(static_cast<int>(rng.uniform_index(n)));
    out.column_means = out.values.colwise().mean();
    if (data.centered) {
        out.values.rowwise() -= out.column_means.transpose();
        out.centered = true;
    }
    return out;
}

}  // namespace

std::vector<CIRecord> bootstrap_effects(const Dataset& data, const PipelineConfig& pipeline,
                                        const std::vector<Vector>& x_list,
                                        const BootstrapConfig& cfg) {
    cfg.validate();
    if (data.rows() < 1) throw std::invalid_argument("bootstrap_effects: empty dataset");
    if (x_list.empty()) throw std::invalid_argument("bootstrap_effects: no moderator values");

    const PipelineResult full = run_pipeline(data, pipeline);
    const std::vector<double> point = effect_values(unpack(full.refitted), x_list);
    const std::vector<std::string> names =
        effect_names(data.layout.s, static_cast<int>(x_list.size()));

    const int k_total = cfg.resamples;
    const Rng base(cfg.seed);
    std::vector<std::vector<double>> replicate_values(k_total);
    std::vector<char> ok(k_total, 0);

    std::atomic<int> next{0};
    auto worker = [&]() {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= k_total) return;
            Rng rng = base.derive(static_cast<std::uint64_t>(k));
            try {
                const Dataset sample = resample_rows(data, rng);
                const PipelineResult res = run_pipeline(sample, pipeline);
                replicate_values[k] = effect_values(unpack(res.refitted), x_list);
                ok[k] = 1;
            } catch (const std::exception&) {
                ok[k] = 0;  // dropped
            }
        }
    };

    const int degree = std::min(resolve_parallel_degree(cfg.parallel_degree), k_total);
    if (degree <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(degree);
        for (int i = 0; i < degree; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    int kept = 0;
    for (char flag : ok) kept += flag;
    if (kept < k_total - k_total / 10)
        throw std::runtime_error("bootstrap_effects: more than 10% of replicates failed (" +
                                 std::to_string(k_total - kept) + "/" +
                                 std::to_string(k_total) + " dropped)");

    double alpha = cfg.alpha;
    if (cfg.adjust_alpha) {
        // harmonic-sum correction in the Benjamini-Yekutieli spirit for
        // simultaneous reporting of m intervals
        const auto m = static_cast<double>(names.size());
        double harmonic = 0.0;
        for (int i = 1; i <= static_cast<int>(m); ++i) harmonic += 1.0 / i;
        alpha /= m * harmonic;
    }

    std::vector<CIRecord> records;
    records.reserve(names.size());
    for (size_t e = 0; e < names.size(); ++e) {
        std::vector<double> draws;
        draws.reserve(kept);
        for (int k = 0; k < k_total; ++k)
            if (ok[k]) draws.push_back(replicate_values[k][e]);

        CIRecord rec;
        rec.name = names[e];
        rec.point = point[e];
        rec.method = cfg.method;
        rec.resamples = k_total;
        if (cfg.method == CiMethod::Percentile) {
            rec.lo = empirical_quantile(draws, alpha / 2.0);
            rec.hi = empirical_quantile(draws, 1.0 - alpha / 2.0);
        } else {
            double mean = 0;
            for (double v : draws) mean += v;
            mean /= static_cast<double>(draws.size());
            double var = 0;
            for (double v : draws) var += (v - mean) * (v - mean);
            var = draws.size() > 1 ? var / static_cast<double>(draws.size() - 1) : 0.0;
            const double z = normal_quantile(1.0 - alpha / 2.0);
            const double half = z * std::sqrt(var);
            rec.lo = rec.point - half;
            rec.hi = rec.point + half;
        }
        records.push_back(rec);
    }
    return records;
}

EvalReport evaluate(const Skeleton& est, const Skeleton& truth) {
    if (est.layout != truth.layout)
        throw std::invalid_argument("evaluate: layouts differ");
    const int w = est.layout.size();

    int tp = 0, fp = 0, reversed = 0, missing = 0;
    for (int i = 0; i < w; ++i) {
        for (int j = 0; j < w; ++j) {
            if (est.e(i, j)) {
                if (truth.e(i, j)) ++tp;
                else if (truth.e(j, i)) ++reversed;
                else ++fp;
            }
            if (truth.e(i, j) && !est.e(i, j) && !est.e(j, i)) ++missing;
        }
    }

    EvalReport rep;
    const int est_edges = est.edge_count();
    const int truth_edges = truth.edge_count();
    rep.fdr = static_cast<double>(fp + reversed) / std::max(1, est_edges);
    rep.tpr = static_cast<double>(tp) / std::max(1, truth_edges);
    rep.shd = fp + missing + reversed;
    return rep;
}

std::map<std::string, SummaryStat> ReplicationTable::summary() const {
    std::map<std::string, std::vector<double>> cols;
    for (const ReplicationRow& row : rows) {
        cols["fdr"].push_back(row.eval.fdr);
        cols["tpr"].push_back(row.eval.tpr);
        cols["shd"].push_back(row.eval.shd);
        cols["hde_bias"].push_back(row.hde_bias);
        cols["hie_bias"].push_back(row.hie_bias);
        for (int i = 0; i < row.hdm_bias.size(); ++i) {
            cols["hdm" + std::to_string(i + 1) + "_bias"].push_back(row.hdm_bias(i));
            cols["him" + std::to_string(i + 1) + "_bias"].push_back(row.him_bias(i));
        }
    }
    std::map<std::string, SummaryStat> out;
    for (auto& [name, vals] : cols) {
        SummaryStat st;
        for (double v : vals) st.mean += v;
        st.mean /= static_cast<double>(vals.size());
        for (double v : vals) st.sd += (v - st.mean) * (v - st.mean);
        st.sd = vals.size() > 1 ? std::sqrt(st.sd / static_cast<double>(vals.size() - 1)) : 0.0;
        out[name] = st;
    }
    return out;
}

ReplicationTable run_replication(const std::string& scenario_id,
                                 const std::vector<std::uint64_t>& seeds,
                                 const PipelineConfig& cfg, std::optional<int> n_override,
                                 std::optional<Vector> x_eval) {
    ReplicationTable table;
    table.scenario = scenario_id;
    if (seeds.empty()) return table;

    ScenarioSpec spec = scenario_preset(scenario_id);
    if (n_override) spec.n = *n_override;
    const Vector x = x_eval ? *x_eval : Vector::Zero(spec.p);

    for (std::uint64_t seed : seeds) {
        spec.seed = seed;
        try {
            const ScenarioDraw draw = draw_scenario(spec);
            const PipelineResult res = run_pipeline(draw.data, cfg);

            ReplicationRow row;
            row.seed = seed;
            row.eval = evaluate(res.skeleton, threshold_graph(draw.truth, 0.0));

            const Parameters est = unpack(res.refitted);
            const Parameters truth = unpack(draw.truth);
            const EffectReport est_rep = effect_report(est, x);
            const EffectReport true_rep = effect_report(truth, x);
            row.hde_bias = est_rep.treatment.hde - true_rep.treatment.hde;
            row.hie_bias = est_rep.treatment.hie - true_rep.treatment.hie;
            row.hdm_bias = Vector::Zero(spec.s);
            row.him_bias = Vector::Zero(spec.s);
            for (int i = 0; i < spec.s; ++i) {
                row.hdm_bias(i) = est_rep.mediators[i].hdm - true_rep.mediators[i].hdm;
                row.him_bias(i) = est_rep.mediators[i].him - true_rep.mediators[i].him;
            }
            table.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw std::runtime_error("replication seed " + std::to_string(seed) + ": " +
                                     e.what());
        }
    }
    return table;
}

}  // namespace hcg
