#include "cli.hpp"

#include "hcg/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hcg::cli {

namespace fs = std::filesystem;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return j;
}

Vector parse_x(const std::string& text, int p) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != p)
        throw std::runtime_error("moderator value '" + text + "' has " +
                                 std::to_string(vals.size()) + " entries, expected " +
                                 std::to_string(p));
    Vector x(p);
    for (int i = 0; i < p; ++i) x(i) = vals[i];
    return x;
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
    const auto dots = text.find("..");
    std::vector<std::uint64_t> seeds;
    if (dots == std::string::npos) {
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) seeds.push_back(std::stoull(cell));
    } else {
        const std::uint64_t lo = std::stoull(text.substr(0, dots));
        const std::uint64_t hi = std::stoull(text.substr(dots + 2));
        if (hi < lo) throw std::runtime_error("empty seed range " + text);
        for (std::uint64_t v = lo; v <= hi; ++v) seeds.push_back(v);
    }
    return seeds;
}

Dataset load_dataset_with_sidecar(const std::string& path) {
    Dataset data = load_dataset_csv(path);
    const fs::path sidecar = fs::path(path).replace_extension(".json");
    if (fs::exists(sidecar)) apply_sidecar(data, read_json_file(sidecar.string()));
    return data;
}

PipelineConfig load_pipeline_config(const std::string& path) {
    if (path.empty()) return PipelineConfig{};
    return pipeline_config_from_json(read_json_file(path));
}

void finish(RunManifest manifest, const fs::path& out_dir) {
    manifest.version = kVersion;
    write_manifest(manifest, out_dir);
}

int cmd_simulate(const std::string& preset, const std::string& spec_file, std::uint64_t seed,
                 int n_override, const std::string& out) {
    ScenarioSpec spec = spec_file.empty() ? scenario_preset(preset)
                                          : scenario_from_json(read_json_file(spec_file));
    spec.seed = seed;
    if (n_override > 0) spec.n = n_override;

    const ScenarioDraw draw = draw_scenario(spec);
    const fs::path dir(out);
    fs::create_directories(dir);

    save_dataset_csv(draw.data, dir / "data.csv");
    {
        std::ofstream side(dir / "data.json");
        side << dataset_sidecar(draw.data, spec).dump(2) << "\n";
    }
    save_graph(GraphDoc{draw.truth, std::nullopt}, dir / "truth.json");

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.seed = spec.seed;
    manifest.config = scenario_to_json(spec);
    manifest.outputs = {"data.csv", "data.json", "truth.json"};
    finish(std::move(manifest), dir);
    return 0;
}

int cmd_discover(const std::string& data_path, const std::string& config_path,
                 double threshold_override, const std::string& out) {
    const Dataset data = load_dataset_with_sidecar(data_path);
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (threshold_override >= 0.0) cfg.fixed_threshold = threshold_override;

    const PipelineResult res = run_pipeline(data, cfg);
    const fs::path dir(out);
    fs::create_directories(dir);

    save_graph(GraphDoc{res.raw, std::nullopt}, dir / "raw.json");
    WeightedGraph thresholded = res.raw;
    for (int i = 0; i < thresholded.layout.size(); ++i)
        for (int j = 0; j < thresholded.layout.size(); ++j)
            if (!res.skeleton.e(i, j)) thresholded.b(i, j) = 0.0;
    save_graph(GraphDoc{thresholded, std::nullopt}, dir / "thresholded.json");
    save_graph(GraphDoc{res.refitted, std::nullopt}, dir / "refit.json");
    {
        std::ofstream summary(dir / "result.json");
        summary << json{{"delta", res.delta},
                        {"edges", res.skeleton.edge_count()},
                        {"h1", acyclicity_value(res.raw, 1.0 / res.raw.layout.size())}}
                       .dump(2)
                << "\n";
    }

    RunManifest manifest;
    manifest.command = "discover";
    manifest.config = pipeline_config_to_json(cfg);
    manifest.inputs = {data_path};
    manifest.outputs = {"raw.json", "thresholded.json", "refit.json", "result.json"};
    finish(std::move(manifest), dir);
    return 0;
}

int cmd_effects(const std::string& graph_path, const std::vector<std::string>& x_args,
                double a_value, bool has_a, const std::string& links_path,
                const std::string& out) {
    const GraphDoc doc = load_graph(graph_path);
    const Parameters params = doc.parameters();

    std::vector<Vector> x_list;
    for (const std::string& arg : x_args) x_list.push_back(parse_x(arg, params.p));
    if (x_list.empty()) x_list.push_back(Vector::Zero(params.p));

    json reports = json::array();
    if (!links_path.empty()) {
        if (!has_a) throw std::runtime_error("functional effects need --a");
        FunctionalParams fp;
        fp.coef = params;
        fp.links = links_from_json(read_json_file(links_path));
        for (const Vector& x : x_list) {
            EffectReport rep = functional_effect_report(fp, x, a_value);
            rep.provenance = graph_path;
            reports.push_back(effect_report_to_json(rep));
        }
    } else {
        for (const Vector& x : x_list) {
            EffectReport rep = effect_report(params, x);
            rep.provenance = graph_path;
            reports.push_back(effect_report_to_json(rep));
        }
    }

    const fs::path dir(out);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "effects.json");
        f << json{{"reports", reports}}.dump(2) << "\n";
    }

    RunManifest manifest;
    manifest.command = "effects";
    manifest.inputs = {graph_path};
    manifest.outputs = {"effects.json"};
    finish(std::move(manifest), dir);
    return 0;
}

int cmd_bootstrap(const std::string& data_path, const std::string& config_path,
                  const std::vector<std::string>& x_args, int resamples, double alpha,
                  const std::string& method, std::uint64_t seed, const std::string& out) {
    const Dataset data = load_dataset_with_sidecar(data_path);
    const PipelineConfig pipeline = load_pipeline_config(config_path);

    std::vector<Vector> x_list;
    for (const std::string& arg : x_args) x_list.push_back(parse_x(arg, data.layout.p));
    if (x_list.empty()) x_list.push_back(Vector::Zero(data.layout.p));

    BootstrapConfig cfg;
    cfg.resamples = resamples;
    cfg.alpha = alpha;
    cfg.seed = seed;
    if (method == "percentile") cfg.method = CiMethod::Percentile;
    else if (method == "gaussian") cfg.method = CiMethod::Gaussian;
    else throw std::runtime_error("unknown CI method '" + method + "'");

    const std::vector<CIRecord> records = bootstrap_effects(data, pipeline, x_list, cfg);

    const fs::path dir(out);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "ci.json");
        f << ci_records_to_json(records).dump(2) << "\n";
    }
    save_ci_csv(records, dir / "ci.csv");

    RunManifest manifest;
    manifest.command = "bootstrap";
    manifest.seed = seed;
    manifest.config = pipeline_config_to_json(pipeline);
    manifest.config["bootstrap"] =
        json{{"K", resamples}, {"alpha", alpha}, {"method", method}};
    manifest.inputs = {data_path};
    manifest.outputs = {"ci.json", "ci.csv"};
    finish(std::move(manifest), dir);
    return 0;
}

int cmd_evaluate(const std::string& est_path, const std::string& truth_path,
                 const std::string& out) {
    const GraphDoc est = load_graph(est_path);
    const GraphDoc truth = load_graph(truth_path);
    const EvalReport rep =
        evaluate(threshold_graph(est.graph, 0.0), threshold_graph(truth.graph, 0.0));

    const fs::path dir(out);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "eval.json");
        f << eval_report_to_json(rep).dump(2) << "\n";
    }

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.inputs = {est_path, truth_path};
    manifest.outputs = {"eval.json"};
    finish(std::move(manifest), dir);
    std::cout << eval_report_to_json(rep).dump() << "\n";
    return 0;
}

int cmd_replicate(const std::string& preset, const std::string& seeds_arg,
                  const std::string& config_path, double threshold_override, int n_override,
                  const std::string& out) {
    PipelineConfig cfg = load_pipeline_config(config_path);
    if (threshold_override >= 0.0) cfg.fixed_threshold = threshold_override;

    const std::vector<std::uint64_t> seeds = parse_seed_range(seeds_arg);
    const ReplicationTable table = run_replication(
        preset, seeds, cfg, n_override > 0 ? std::optional<int>(n_override) : std::nullopt);

    const fs::path dir(out);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "replication.json");
        f << replication_table_to_json(table).dump(2) << "\n";
    }

    std::cout << preset << " over " << seeds.size() << " seeds (mean(sd)):\n";
    for (const auto& [name, stat] : table.summary()) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-12s %.3f(%.3f)\n", name.c_str(), stat.mean,
                      stat.sd);
        std::cout << line;
    }

    RunManifest manifest;
    manifest.command = "replicate";
    manifest.config = pipeline_config_to_json(cfg);
    manifest.config["preset"] = preset;
    manifest.config["seeds"] = seeds_arg;
    manifest.outputs = {"replication.json"};
    finish(std::move(manifest), dir);
    return 0;
}

int cmd_export_dot(const std::string& graph_path, const std::string& x_arg,
                   const std::string& out) {
    const GraphDoc doc = load_graph(graph_path);

    std::string dot;
    if (!x_arg.empty()) {
        const Parameters params = doc.parameters();
        dot = projection_to_dot(project_hcg(params, parse_x(x_arg, params.p)));
    } else {
        dot = graph_to_dot(doc.graph);
    }

    const fs::path dir(out);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "graph.dot");
        f << dot;
    }

    RunManifest manifest;
    manifest.command = "export-dot";
    manifest.inputs = {graph_path};
    manifest.outputs = {"graph.dot"};
    finish(std::move(manifest), dir);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"heterogeneous causal graph learning and effect estimation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic scenario dataset");
    std::string sim_preset, sim_spec, sim_out = "out";
    std::uint64_t sim_seed = 1;
    int sim_n = 0;
    sim->add_option("--preset", sim_preset, "scenario preset (S1..S6, S3nx, S3mod)");
    sim->add_option("--spec", sim_spec, "scenario spec JSON file");
    sim->add_option("--seed", sim_seed, "generation seed");
    sim->add_option("--n", sim_n, "sample-size override");
    sim->add_option("--out", sim_out, "output directory")->required();

    // discover
    auto* dis = app.add_subcommand("discover", "estimate the causal graph from a dataset");
    std::string dis_data, dis_config, dis_out = "out";
    double dis_threshold = -1.0;
    dis->add_option("--data", dis_data, "dataset CSV")->required();
    dis->add_option("--config", dis_config, "pipeline config JSON");
    dis->add_option("--threshold", dis_threshold, "fixed pruning threshold (skips grid search)");
    dis->add_option("--out", dis_out, "output directory")->required();

    // effects
    auto* eff = app.add_subcommand("effects", "closed-form effects from a graph");
    std::string eff_graph, eff_links, eff_out = "out";
    std::vector<std::string> eff_x;
    double eff_a = 0.0;
    eff->add_option("--graph", eff_graph, "graph JSON")->required();
    eff->add_option("--x", eff_x, "moderator value v1,v2,... (repeatable)");
    auto* eff_a_opt = eff->add_option("--a", eff_a, "treatment value (functional model)");
    eff->add_option("--links", eff_links, "link spec JSON (functional model)");
    eff->add_option("--out", eff_out, "output directory")->required();

    // bootstrap
    auto* boot = app.add_subcommand("bootstrap", "bootstrap confidence intervals");
    std::string boot_data, boot_config, boot_method = "percentile", boot_out = "out";
    std::vector<std::string> boot_x;
    int boot_k = 1000;
    double boot_alpha = 0.05;
    std::uint64_t boot_seed = 1;
    boot->add_option("--data", boot_data, "dataset CSV")->required();
    boot->add_option("--config", boot_config, "pipeline config JSON");
    boot->add_option("--x", boot_x, "moderator value (repeatable)");
    boot->add_option("--K", boot_k, "bootstrap resamples");
    boot->add_option("--alpha", boot_alpha, "significance level");
    boot->add_option("--method", boot_method, "percentile | gaussian");
    boot->add_option("--seed", boot_seed, "resampling seed");
    boot->add_option("--out", boot_out, "output directory")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "graph recovery metrics");
    std::string ev_est, ev_truth, ev_out = "out";
    ev->add_option("--est", ev_est, "estimated graph JSON")->required();
    ev->add_option("--truth", ev_truth, "true graph JSON")->required();
    ev->add_option("--out", ev_out, "output directory")->required();

    // replicate
    auto* rep = app.add_subcommand("replicate", "scenario replication table");
    std::string rep_preset, rep_seeds = "1..20", rep_config, rep_out = "out";
    double rep_threshold = -1.0;
    int rep_n = 0;
    rep->add_option("--preset", rep_preset, "scenario preset")->required();
    rep->add_option("--seeds", rep_seeds, "seed range a..b or list a,b,c");
    rep->add_option("--config", rep_config, "pipeline config JSON");
    rep->add_option("--threshold", rep_threshold, "fixed pruning threshold");
    rep->add_option("--n", rep_n, "sample-size override");
    rep->add_option("--out", rep_out, "output directory")->required();

    // export-dot
    auto* dot = app.add_subcommand("export-dot", "graphviz export");
    std::string dot_graph, dot_x, dot_out = "out";
    dot->add_option("--graph", dot_graph, "graph JSON")->required();
    dot->add_option("--x", dot_x, "moderator value; exports the projected graph");
    dot->add_option("--out", dot_out, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return app.exit(e, std::cerr, std::cerr);
    }

    try {
        if (sim->parsed()) {
            if (sim_preset.empty() == sim_spec.empty())
                throw std::runtime_error("simulate needs exactly one of --preset / --spec");
            return cmd_simulate(sim_preset, sim_spec, sim_seed, sim_n, sim_out);
        }
        if (dis->parsed()) return cmd_discover(dis_data, dis_config, dis_threshold, dis_out);
        if (eff->parsed())
            return cmd_effects(eff_graph, eff_x, eff_a, eff_a_opt->count() > 0, eff_links,
                               eff_out);
        if (boot->parsed())
            return cmd_bootstrap(boot_data, boot_config, boot_x, boot_k, boot_alpha,
                                 boot_method, boot_seed, boot_out);
        if (ev->parsed()) return cmd_evaluate(ev_est, ev_truth, ev_out);
        if (rep->parsed())
            return cmd_replicate(rep_preset, rep_seeds, rep_config, rep_threshold, rep_n,
                                 rep_out);
        if (dot->parsed()) return cmd_export_dot(dot_graph, dot_x, dot_out);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace hcg::cli
