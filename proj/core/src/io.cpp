#include "hcg/io.hpp"

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hcg {

namespace {

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw std::invalid_argument(std::string(what) + ": wrong row count");
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != cols)
            throw std::invalid_argument(std::string(what) + ": wrong column count");
        for (int c = 0; c < cols; ++c) m(i, c) = row[c].get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Parameters GraphDoc::parameters() const {
    Parameters params = unpack(graph);
    if (xm_interaction) params.gamma_xm = *xm_interaction;
    return params;
}

json graph_to_json(const GraphDoc& doc) {
    json j;
    j["p"] = doc.graph.layout.p;
    j["s"] = doc.graph.layout.s;
    j["matrix"] = matrix_to_json(doc.graph.b);
    if (doc.xm_interaction) j["xm_interaction"] = matrix_to_json(*doc.xm_interaction);
    return j;
}

GraphDoc graph_from_json(const json& j) {
    const BlockLayout layout(j.at("p").get<int>(), j.at("s").get<int>());
    GraphDoc doc;
    doc.graph = WeightedGraph(
        layout, matrix_from_json(j.at("matrix"), layout.size(), layout.size(), "graph matrix"));
    if (j.contains("xm_interaction"))
        doc.xm_interaction =
            matrix_from_json(j["xm_interaction"], layout.p, layout.s, "xm_interaction");
    return doc;
}

void save_graph(const GraphDoc& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << graph_to_json(doc).dump(2) << "\n";
}

GraphDoc load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j;
    in >> j;
    return graph_from_json(j);
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const BlockLayout& l = data.layout;
    for (int j = 0; j < l.size(); ++j) {
        if (j) out << ',';
        out << l.node_name(j);
    }
    out << '\n';
    for (int r = 0; r < data.rows(); ++r) {
        for (int j = 0; j < l.size(); ++j) {
            if (j) out << ',';
            out << format_double(data.values(r, j));
        }
        out << '\n';
    }
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw std::runtime_error("empty dataset file " + path.string());

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    // infer p and s from role-tagged names
    int p = 0, s = 0;
    for (const std::string& name : header) {
        if (name.rfind("XA", 0) == 0) continue;
        if (name.rfind('X', 0) == 0 && name != "X") ++p;
        if (name.rfind('M', 0) == 0) ++s;
    }
    const BlockLayout layout(p, s);
    if (static_cast<int>(header.size()) != layout.size())
        throw std::runtime_error("dataset header does not match X/A/XA/M/Y layout");
    for (int j = 0; j < layout.size(); ++j)
        if (header[j] != layout.node_name(j))
            throw std::runtime_error("unexpected column '" + header[j] + "', wanted '" +
                                     layout.node_name(j) + "'");

    std::vector<double> cells;
    int rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(std::stod(cell));
            ++c;
        }
        if (c != layout.size()) throw std::runtime_error("ragged dataset row");
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("dataset has no rows");

    Dataset data;
    data.layout = layout;
    data.values = Matrix(rows, layout.size());
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < layout.size(); ++j)
            data.values(r, j) = cells[static_cast<size_t>(r) * layout.size() + j];
    data.column_means = data.values.colwise().mean();
    data.centered = data.column_means.cwiseAbs().maxCoeff() < 1e-8;
    return data;
}

json dataset_sidecar(const Dataset& data, const ScenarioSpec& spec) {
    json j;
    j["scenario"] = scenario_to_json(spec);
    j["n"] = data.rows();
    j["centered"] = data.centered;
    j["column_means"] = vector_to_json(data.column_means);
    return j;
}

void apply_sidecar(Dataset& data, const json& sidecar) {
    if (sidecar.contains("centered")) data.centered = sidecar["centered"].get<bool>();
    if (sidecar.contains("column_means")) {
        const auto& means = sidecar["column_means"];
        if (static_cast<int>(means.size()) == data.layout.size())
            for (int j = 0; j < data.layout.size(); ++j)
                data.column_means(j) = means[j].get<double>();
    }
}

json scenario_to_json(const ScenarioSpec& spec) {
    json j;
    j["id"] = spec.id;
    j["p"] = spec.p;
    j["s"] = spec.s;
    j["n"] = spec.n;
    j["graph_kind"] = spec.graph_kind == GraphKind::ErDegree ? "er-degree" : "constrained-random";
    j["er_degree"] = spec.er_degree;
    j["weight_alphabet"] = spec.weight_alphabet;
    j["require_interaction"] = spec.require_interaction;
    j["baseline"] = spec.baseline;
    j["center"] = spec.center;
    j["seed"] = spec.seed;
    j["mediators_active"] = spec.mediators_active;
    j["mediator_links_active"] = spec.mediator_links_active;
    j["interactions_active"] = spec.interactions_active;
    j["delta_active"] = spec.delta_active;
    return j;
}

ScenarioSpec scenario_from_json(const json& j) {
    ScenarioSpec spec;
    if (j.contains("id")) spec.id = j["id"].get<std::string>();
    if (j.contains("p")) spec.p = j["p"].get<int>();
    if (j.contains("s")) spec.s = j["s"].get<int>();
    if (j.contains("n")) spec.n = j["n"].get<int>();
    if (j.contains("graph_kind"))
        spec.graph_kind = j["graph_kind"].get<std::string>() == "er-degree"
                              ? GraphKind::ErDegree
                              : GraphKind::ConstrainedRandom;
    if (j.contains("er_degree")) spec.er_degree = j["er_degree"].get<double>();
    if (j.contains("weight_alphabet"))
        spec.weight_alphabet = j["weight_alphabet"].get<std::vector<double>>();
    if (j.contains("require_interaction"))
        spec.require_interaction = j["require_interaction"].get<bool>();
    if (j.contains("baseline")) spec.baseline = j["baseline"].get<double>();
    if (j.contains("center")) spec.center = j["center"].get<bool>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("mediators_active")) spec.mediators_active = j["mediators_active"].get<bool>();
    if (j.contains("mediator_links_active"))
        spec.mediator_links_active = j["mediator_links_active"].get<bool>();
    if (j.contains("interactions_active"))
        spec.interactions_active = j["interactions_active"].get<bool>();
    if (j.contains("delta_active")) spec.delta_active = j["delta_active"].get<bool>();
    return spec;
}

json discovery_config_to_json(const DiscoveryConfig& cfg) {
    return json{{"t", cfg.t},
                {"k_outer", cfg.k_outer},
                {"h_inner", cfg.h_inner},
                {"r0", cfg.r0},
                {"rho", cfg.rho},
                {"tau", cfg.tau},
                {"u_cap", cfg.u_cap},
                {"delta_h", cfg.delta_h},
                {"l1", cfg.l1},
                {"hard_mask", cfg.hard_mask},
                {"loss_mask_deterministic", cfg.loss_mask_deterministic}};
}

DiscoveryConfig discovery_config_from_json(const json& j) {
    DiscoveryConfig cfg;
    if (j.contains("t")) cfg.t = j["t"].get<double>();
    if (j.contains("k_outer")) cfg.k_outer = j["k_outer"].get<int>();
    if (j.contains("h_inner")) cfg.h_inner = j["h_inner"].get<int>();
    if (j.contains("r0")) cfg.r0 = j["r0"].get<double>();
    if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
    if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
    if (j.contains("u_cap")) cfg.u_cap = j["u_cap"].get<double>();
    if (j.contains("delta_h")) cfg.delta_h = j["delta_h"].get<double>();
    if (j.contains("l1")) cfg.l1 = j["l1"].get<double>();
    if (j.contains("hard_mask")) cfg.hard_mask = j["hard_mask"].get<bool>();
    if (j.contains("loss_mask_deterministic"))
        cfg.loss_mask_deterministic = j["loss_mask_deterministic"].get<bool>();
    cfg.validate();
    return cfg;
}

json lasso_config_to_json(const LassoConfig& cfg) {
    return json{{"lambda_frac", cfg.lambda_frac}, {"max_iter", cfg.max_iter}, {"tol", cfg.tol}};
}

LassoConfig lasso_config_from_json(const json& j) {
    LassoConfig cfg;
    if (j.contains("lambda_frac")) cfg.lambda_frac = j["lambda_frac"].get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    cfg.validate();
    return cfg;
}

json pipeline_config_to_json(const PipelineConfig& cfg) {
    json j;
    j["discovery"] = discovery_config_to_json(cfg.discovery);
    j["lasso"] = lasso_config_to_json(cfg.lasso);
    if (cfg.fixed_threshold) j["threshold"] = *cfg.fixed_threshold;
    else j["threshold_grid"] = cfg.threshold_grid;
    return j;
}

PipelineConfig pipeline_config_from_json(const json& j) {
    PipelineConfig cfg;
    if (j.contains("discovery")) cfg.discovery = discovery_config_from_json(j["discovery"]);
    if (j.contains("lasso")) cfg.lasso = lasso_config_from_json(j["lasso"]);
    if (j.contains("threshold")) cfg.fixed_threshold = j["threshold"].get<double>();
    if (j.contains("threshold_grid"))
        cfg.threshold_grid = j["threshold_grid"].get<std::vector<double>>();
    return cfg;
}

json effect_report_to_json(const EffectReport& report) {
    json j;
    j["x"] = vector_to_json(report.x);
    if (report.a) j["a"] = *report.a;
    j["hte"] = report.treatment.hte;
    j["hde"] = report.treatment.hde;
    j["hie"] = report.treatment.hie;
    json meds = json::array();
    for (const MediatorEffects& m : report.mediators)
        meds.push_back(json{{"i", m.index + 1},
                            {"delta", m.delta},
                            {"hdm", m.hdm},
                            {"him", m.him},
                            {"htm", m.htm}});
    j["mediators"] = std::move(meds);
    if (!report.provenance.empty()) j["provenance"] = report.provenance;
    return j;
}

json ci_records_to_json(const std::vector<CIRecord>& records) {
    json arr = json::array();
    for (const CIRecord& rec : records)
        arr.push_back(json{{"name", rec.name},
                           {"point", rec.point},
                           {"lo", rec.lo},
                           {"hi", rec.hi},
                           {"method", rec.method == CiMethod::Percentile ? "percentile" : "gaussian"},
                           {"K", rec.resamples}});
    return arr;
}

void save_ci_csv(const std::vector<CIRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "name,point,lo,hi\n";
    for (const CIRecord& rec : records)
        out << rec.name << ',' << format_double(rec.point) << ',' << format_double(rec.lo)
            << ',' << format_double(rec.hi) << '\n';
}

json eval_report_to_json(const EvalReport& report) {
    return json{{"fdr", report.fdr}, {"tpr", report.tpr}, {"shd", report.shd}};
}

json replication_table_to_json(const ReplicationTable& table) {
    json j;
    j["scenario"] = table.scenario;
    json rows = json::array();
    for (const ReplicationRow& row : table.rows) {
        json r;
        r["seed"] = row.seed;
        r["fdr"] = row.eval.fdr;
        r["tpr"] = row.eval.tpr;
        r["shd"] = row.eval.shd;
        r["hde_bias"] = row.hde_bias;
        r["hie_bias"] = row.hie_bias;
        r["hdm_bias"] = vector_to_json(row.hdm_bias);
        r["him_bias"] = vector_to_json(row.him_bias);
        rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
    json summary;
    for (const auto& [name, stat] : table.summary())
        summary[name] = json{{"mean", stat.mean}, {"sd", stat.sd}};
    j["summary"] = std::move(summary);
    return j;
}

namespace {

LinkFunction link_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "identity") return LinkFunction::identity();
    if (kind == "polynomial") return LinkFunction::polynomial(j.at("degree").get<int>());
    if (kind == "sine") return LinkFunction::sine();
    if (kind == "tanh") return LinkFunction::tanh();
    if (kind == "table") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& pt : j.at("points"))
            pts.emplace_back(pt[0].get<double>(), pt[1].get<double>());
        return LinkFunction::table(std::move(pts));
    }
    throw std::invalid_argument("unknown link kind: " + kind);
}

}  // namespace

FunctionalLinks links_from_json(const json& j) {
    FunctionalLinks links;
    if (!j.is_array()) throw std::invalid_argument("link spec must be a JSON array");
    for (const json& entry : j) {
        const std::string block = entry.at("block").get<std::string>();
        const LinkFunction f = link_from_json(entry);
        if (block == "A.x") links.a_x = f;
        else if (block == "M.x") links.m_x = f;
        else if (block == "M.a") links.m_a = f;
        else if (block == "M.xa") links.m_xa = f;
        else if (block == "Y.x") links.y_x = f;
        else if (block == "Y.a") links.y_a = f;
        else if (block == "Y.xa") links.y_xa = f;
        else if (block == "Y.m") links.y_m = f;
        else throw std::invalid_argument("unknown link block: " + block);
    }
    return links;
}

namespace {

std::string dot_edge(const std::string& from, const std::string& to, double weight) {
    char label[32];
    std::snprintf(label, sizeof label, "%.3f", weight);
    return "  \"" + from + "\" -> \"" + to + "\" [label=\"" + label + "\", color=" +
           (weight > 0 ? "red" : "blue") + "];\n";
}

}  // namespace

std::string graph_to_dot(const WeightedGraph& g) {
    const BlockLayout& l = g.layout;
    std::string out = "digraph hcg {\n  rankdir=LR;\n";
    for (int i = 0; i < l.size(); ++i) out += "  \"" + l.node_name(i) + "\";\n";
    for (int i = 0; i < l.size(); ++i)
        for (int j = 0; j < l.size(); ++j)
            if (g.b(i, j) != 0.0) out += dot_edge(l.node_name(i), l.node_name(j), g.b(i, j));
    out += "}\n";
    return out;
}

std::string projection_to_dot(const HcgProjection& proj) {
    const int s = static_cast<int>(proj.intercepts.size()) - 2;
    auto name = [&](int i) -> std::string {
        if (i == 0) return "A";
        if (i == s + 1) return "Y";
        return "M" + std::to_string(i);
    };
    std::string out = "digraph hcg_projection {\n  rankdir=LR;\n";
    for (int i = 0; i < s + 2; ++i) out += "  \"" + name(i) + "\";\n";
    for (int i = 0; i < s + 2; ++i)
        for (int j = 0; j < s + 2; ++j)
            if (proj.b_do(i, j) != 0.0) out += dot_edge(name(i), name(j), proj.b_do(i, j));
    out += "}\n";
    return out;
}

std::string config_digest(const json& j) {
    const std::string dump = j.dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir) {
    json j;
    j["command"] = manifest.command;
    j["version"] = manifest.version;
    j["seed"] = manifest.seed;
    j["config_digest"] = config_digest(manifest.config);
    j["config"] = manifest.config;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    j["timestamp_utc"] = stamp;

    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << j.dump(2) << "\n";
}

}  // namespace hcg
