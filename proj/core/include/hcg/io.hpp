#pragma once

#include "hcg/effects.hpp"
#include "hcg/functional.hpp"
#include "hcg/graph.hpp"
#include "hcg/inference.hpp"
#include "hcg/scenario.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hcg {

using json = nlohmann::json;

/// Graph JSON: {"p":int, "s":int, "matrix":[[...]]}, row i = outgoing edges
/// of node i. An optional "xm_interaction" (p x s) carries the XM block.
struct GraphDoc {
    WeightedGraph graph;
    std::optional<Matrix> xm_interaction;

    Parameters parameters() const;
};

json graph_to_json(const GraphDoc& doc);
GraphDoc graph_from_json(const json& j);
void save_graph(const GraphDoc& doc, const std::filesystem::path& path);
GraphDoc load_graph(const std::filesystem::path& path);

/// Dataset CSV: role-tagged header (X1..Xp, A, XA1..XAp, M1..Ms, Y), full
/// precision decimal values. The sidecar JSON records provenance plus the
/// pre-centering column means.
void save_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);

json dataset_sidecar(const Dataset& data, const ScenarioSpec& spec);
void apply_sidecar(Dataset& data, const json& sidecar);

json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const json& j);

json discovery_config_to_json(const DiscoveryConfig& cfg);
DiscoveryConfig discovery_config_from_json(const json& j);
json lasso_config_to_json(const LassoConfig& cfg);
LassoConfig lasso_config_from_json(const json& j);
json pipeline_config_to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const json& j);

json effect_report_to_json(const EffectReport& report);

json ci_records_to_json(const std::vector<CIRecord>& records);
/// Forest-plot-ready CSV: name,point,lo,hi.
void save_ci_csv(const std::vector<CIRecord>& records, const std::filesystem::path& path);

json eval_report_to_json(const EvalReport& report);
json replication_table_to_json(const ReplicationTable& table);

/// Link specification JSON: [{"block":"Y.a","kind":"polynomial","degree":2}, ...].
FunctionalLinks links_from_json(const json& j);

/// DOT export; positive weights red, negative blue, labels to 3 decimals.
/// With a moderator value the projected graph over {A, M.., Y} is written.
std::string graph_to_dot(const WeightedGraph& g);
std::string projection_to_dot(const HcgProjection& proj);

/// FNV-1a digest of a canonical JSON dump, for run manifests.
std::string config_digest(const json& j);

/// Every output directory gets exactly one of these.
struct RunManifest {
    std::string command;
    std::string version;
    std::uint64_t seed = 0;
    json config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

}  // namespace hcg
