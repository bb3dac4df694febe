#pragma once

#include "hcg/graph.hpp"
#include "hcg/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hcg {

enum class GraphKind { ConstrainedRandom, ErDegree };

/// Synthetic-scenario description. Presets mirror the standard benchmark
/// family: S1 (no mediator edges), S2 (parallel mediators), S3 (sequential
/// mediators, ER degree 2), S3nx (no interactions), S3mod (X independent of
/// A), and the higher-dimensional S4/S5/S6 (ER degree 4).
struct ScenarioSpec {
    std::string id = "custom";
    int p = 2;
    int s = 6;
    int n = 500;
    GraphKind graph_kind = GraphKind::ConstrainedRandom;
    double er_degree = 2.0;
    std::vector<double> weight_alphabet = {-1.0, 0.0, 1.0};
    bool require_interaction = true;
    double baseline = 1.0;   // added to Y before centering
    bool center = true;
    std::uint64_t seed = 1;

    // block switches; presets set these, custom specs may too
    bool mediators_active = true;      // false: all mediator blocks zero (S1)
    bool mediator_links_active = true; // false: b_m = 0 (S2, parallel)
    bool interactions_active = true;   // false: b_xa = 0, gamma_xa = 0 (S3nx)
    bool delta_active = true;          // false: delta_x = 0 (S3mod)

    BlockLayout layout() const { return BlockLayout(p, s); }
};

/// Preset by id; throws std::invalid_argument for unknown ids.
ScenarioSpec scenario_preset(const std::string& id);
std::vector<std::string> scenario_preset_ids();

/// Samples as rows; columns follow the block layout. Interaction columns
/// are exact products of their X column with the A column before centering.
struct Dataset {
    BlockLayout layout;
    Matrix values;        // n x w
    bool centered = false;
    Vector column_means;  // recorded before centering (length w)

    int rows() const { return static_cast<int>(values.rows()); }

    /// Data with column means added back (identity when not centered).
    Matrix uncentered() const;
};

/// Random ground-truth graph for the given spec. Structurally valid and
/// acyclic by construction; resamples until an interaction coefficient is
/// nonzero when the scenario requires one.
WeightedGraph gen_true_graph(const ScenarioSpec& spec, Rng& rng);

/// Per-node noise scales for forward sampling; the SEM itself is
/// distribution-free but the shipped sampler draws standard normals.
struct NoiseScales {
    double x = 1.0;
    double a = 1.0;
    double m = 1.0;
    double y = 1.0;
};

Dataset forward_sample(const WeightedGraph& g, int n, double baseline, bool center,
                       Rng& rng, const NoiseScales& noise = {});

/// Convenience: graph + dataset drawn with the scenario's own seed.
struct ScenarioDraw {
    WeightedGraph truth;
    Dataset data;
};

ScenarioDraw draw_scenario(const ScenarioSpec& spec);

}  // namespace hcg
