#pragma once

#include "hcg/debias.hpp"
#include "hcg/discover.hpp"
#include "hcg/effects.hpp"
#include "hcg/graph.hpp"
#include "hcg/scenario.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hcg {

/// Discovery -> threshold -> refit chain shared by the bootstrap and the
/// replication harness. A fixed threshold skips grid selection.
struct PipelineConfig {
    DiscoveryConfig discovery;
    LassoConfig lasso;
    std::optional<double> fixed_threshold;
    std::vector<double> threshold_grid = default_threshold_grid();
};

struct PipelineResult {
    WeightedGraph raw;
    double delta = 0;
    Skeleton skeleton;
    WeightedGraph refitted;
};

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& cfg);

enum class CiMethod { Percentile, Gaussian };

struct BootstrapConfig {
    int resamples = 1000;             // K
    double alpha = 0.05;
    CiMethod method = CiMethod::Percentile;
    std::uint64_t seed = 1;
    int parallel_degree = 0;          // 0: HCG_PARALLEL env or hardware
    bool adjust_alpha = false;        // harmonic-sum correction across records

    void validate() const {
        if (resamples < 2) throw std::invalid_argument("BootstrapConfig: K >= 2");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("BootstrapConfig: alpha in (0,1)");
    }
};

struct CIRecord {
    std::string name;  // e.g. "hde@x0", "hdm2@x0"
    double point = 0;  // full-data estimate
    double lo = 0;
    double hi = 0;
    CiMethod method = CiMethod::Percentile;
    int resamples = 0;
};

/// Resamples rows with replacement, reruns the full pipeline per replicate
/// (seed derived from (seed, k)), and interval-izes every effect at every
/// requested x. Replicates whose fit fails are dropped; more than 10%
/// drops is an error. Output is bit-identical for fixed inputs regardless
/// of parallel_degree.
std::vector<CIRecord> bootstrap_effects(const Dataset& data, const PipelineConfig& pipeline,
                                        const std::vector<Vector>& x_list,
                                        const BootstrapConfig& cfg);

/// Empirical quantile as an order statistic: sorted[ceil(q*K)-1].
double empirical_quantile(std::vector<double> values, double q);

/// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

struct EvalReport {
    double fdr = 0;
    double tpr = 0;
    int shd = 0;
};

/// Directed-edge recovery metrics. A reversed edge counts once in the SHD.
EvalReport evaluate(const Skeleton& est, const Skeleton& truth);

struct ReplicationRow {
    std::uint64_t seed = 0;
    EvalReport eval;
    double hde_bias = 0;
    double hie_bias = 0;
    Vector hdm_bias;  // per mediator
    Vector him_bias;
};

struct SummaryStat {
    double mean = 0;
    double sd = 0;
};

struct ReplicationTable {
    std::string scenario;
    std::vector<ReplicationRow> rows;

    std::map<std::string, SummaryStat> summary() const;
};

/// Per-seed generate -> fit -> threshold -> refit -> score; effects are
/// compared against the closed-form truth at moderator value x (zero
/// by default). Per-seed failures propagate with the seed identifier.
ReplicationTable run_replication(const std::string& scenario_id,
                                 const std::vector<std::uint64_t>& seeds,
                                 const PipelineConfig& cfg,
                                 std::optional<int> n_override = std::nullopt,
                                 std::optional<Vector> x_eval = std::nullopt);

/// Resolve the worker count: explicit value, else HCG_PARALLEL, else
/// hardware concurrency.
int resolve_parallel_degree(int requested);

}  // namespace hcg
