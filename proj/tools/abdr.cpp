// abdr: command-line driver for convex subspace clustering runs.
//
//   abdr run   [options]                 one pipeline run
//   abdr sweep --gammas 0.1,1,10 [...]   one run per gamma (and mode)
//   abdr gen   --dataset example1 ...    dump a generated dataset
//
// A JSON config (--config) supplies defaults; explicit flags override it.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "abdr/run.hpp"

namespace {

using abdr::json;

// Flags shared by every verb, kept as strings/optionals so "not given" is
// distinguishable from a default and only given flags patch the config.
struct Flags {
    std::string config_path;
    std::map<std::string, std::string> text;
    std::map<std::string, double> reals;
    std::map<std::string, long long> ints;
    std::vector<int> sub_dims;
    std::vector<int> counts;
    bool header = false;
    bool normalize = false;
    bool dump_graph = false;
};

void add_dataset_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config_path, "JSON run config; flags override its values")->check(CLI::ExistingFile);
    app.add_option("--dataset", f.text["dataset"], "example1 | example2 | example3 | subspaces | csv");
    app.add_option("--data", f.text["data"], "CSV data file (rows = features, columns = samples)");
    app.add_option("--labels", f.text["labels"], "CSV ground-truth labels, one per line");
    app.add_flag("--header", f.header, "skip the first line of CSV inputs");
    app.add_flag("--normalize", f.normalize, "scale every sample to unit length");
    app.add_option("--noise-std", f.reals["noise_std"], "noise standard deviation (example3, subspaces)");
    app.add_option("--noisy-rate", f.reals["noisy_rate"], "fraction of perturbed points (example3)");
    app.add_option("--sub-k", f.ints["sub_k"], "number of subspaces (subspaces)");
    app.add_option("--ambient-dim", f.ints["ambient_dim"], "ambient dimension (subspaces)");
    app.add_option("--sub-dims", f.sub_dims, "subspace dimensions (subspaces)")->delimiter(',');
    app.add_option("--counts", f.counts, "points per subspace (subspaces)")->delimiter(',');
    app.add_option("--seed", f.ints["seed"], "root random seed");
    app.add_option("--out", f.text["out"], "output directory");
}

void add_model_flags(CLI::App& app, Flags& f) {
    app.add_option("--knn", f.ints["knn"], "neighbours per point in the fusion graph (default 10)");
    app.add_option("--phi", f.text["phi"], "Gaussian kernel parameter or 'auto' (default auto)");
    app.add_option("--gamma", f.reals["gamma"], "fusion strength (default 1)");
    app.add_option("--mu1", f.reals["mu1"], "column-split penalty (default 1)");
    app.add_option("--mu2", f.reals["mu2"], "row-split penalty (default 1)");
    app.add_option("--alpha", f.text["alpha"], "proximal weight or 'auto' (default auto)");
    app.add_option("--max-iter", f.ints["max_iter"], "iteration cap (default 200)");
    app.add_option("--tol-primal", f.reals["tol_primal"], "primal residual tolerance (default 1e-5)");
    app.add_option("--tol-change", f.reals["tol_change"], "relative Z change tolerance (default 1e-6)");
    app.add_option("--mode", f.text["mode"], "both | column_only | row_only (default both)");
    app.add_option("--k", f.text["k"], "number of clusters or 'auto' (default auto)");
    app.add_option("--rel-threshold", f.reals["rel_threshold"], "block-count threshold relative to max W (default 1e-3)");
    app.add_flag("--dump-graph", f.dump_graph, "also write graph.csv (1-based edge list)");
}

json auto_or_number(const std::string& field, const std::string& value, bool integer) {
    if (value == "auto") return "auto";
    try {
        std::size_t used = 0;
        json out = integer ? json(std::stoll(value, &used)) : json(std::stod(value, &used));
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw abdr::ConfigError(field, "expected " + std::string(integer ? "an integer" : "a number") +
                                           " or 'auto', got '" + value + "'");
    }
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw abdr::ConfigError("config", "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw abdr::ConfigError("config", path + ": " + e.what());
    }
}

abdr::RunConfig resolve(const CLI::App& app, const Flags& f) {
    json cfg = f.config_path.empty() ? json::object() : load_config_file(f.config_path);
    json patch = json::object();
    const auto given = [&](const char* flag) { return app.count(flag) > 0; };

    if (given("--dataset")) patch["dataset"]["kind"] = f.text.at("dataset");
    if (given("--data")) {
        patch["dataset"]["data_path"] = f.text.at("data");
        if (!given("--dataset")) patch["dataset"]["kind"] = "csv";
    }
    if (given("--labels")) patch["dataset"]["labels_path"] = f.text.at("labels");
    if (given("--header")) patch["dataset"]["header"] = f.header;
    if (given("--normalize")) patch["dataset"]["normalize"] = f.normalize;
    if (given("--noise-std")) patch["dataset"]["noise_std"] = f.reals.at("noise_std");
    if (given("--noisy-rate")) patch["dataset"]["noisy_rate"] = f.reals.at("noisy_rate");
    if (given("--sub-k")) patch["dataset"]["k"] = f.ints.at("sub_k");
    if (given("--ambient-dim")) patch["dataset"]["ambient_dim"] = f.ints.at("ambient_dim");
    if (given("--sub-dims")) patch["dataset"]["sub_dims"] = f.sub_dims;
    if (given("--counts")) patch["dataset"]["counts"] = f.counts;
    if (given("--seed")) patch["seed"] = f.ints.at("seed");
    if (given("--out")) patch["output"] = f.text.at("out");

    if (app.get_option_no_throw("--knn") != nullptr) {
        if (given("--knn")) patch["graph"]["knn"] = f.ints.at("knn");
        if (given("--phi")) patch["graph"]["phi"] = auto_or_number("graph.phi", f.text.at("phi"), false);
        for (const auto& [flag, key] : std::vector<std::pair<const char*, const char*>>{
                 {"--gamma", "gamma"}, {"--mu1", "mu1"}, {"--mu2", "mu2"},
                 {"--tol-primal", "tol_primal"}, {"--tol-change", "tol_change"}}) {
            if (given(flag)) patch["solver"][key] = f.reals.at(key);
        }
        if (given("--alpha")) patch["solver"]["alpha"] = auto_or_number("solver.alpha", f.text.at("alpha"), false);
        if (given("--max-iter")) patch["solver"]["max_iter"] = f.ints.at("max_iter");
        if (given("--mode")) patch["solver"]["mode"] = f.text.at("mode");
        if (given("--k")) patch["clustering"]["k"] = auto_or_number("clustering.k", f.text.at("k"), true);
        if (given("--rel-threshold")) patch["clustering"]["rel_threshold"] = f.reals.at("rel_threshold");
        if (given("--dump-graph")) patch["dump_graph"] = f.dump_graph;
    }
    cfg.merge_patch(patch);
    return abdr::run_config_from_json(cfg);
}

std::string field_or_null(const json& j) { return j.is_null() ? "n/a" : j.dump(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convex subspace clustering with adaptive block diagonal representation"};
    app.require_subcommand(1);

    Flags run_flags;
    auto* run_cmd = app.add_subcommand("run", "run the clustering pipeline once");
    add_dataset_flags(*run_cmd, run_flags);
    add_model_flags(*run_cmd, run_flags);

    Flags sweep_flags;
    std::vector<double> gammas;
    std::vector<std::string> modes;
    auto* sweep_cmd = app.add_subcommand("sweep", "run the pipeline for several gamma values");
    add_dataset_flags(*sweep_cmd, sweep_flags);
    add_model_flags(*sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--gammas", gammas, "comma-separated gamma values")->delimiter(',')->required();
    sweep_cmd->add_option("--modes", modes, "ablation: comma-separated fusion modes")->delimiter(',');

    Flags gen_flags;
    auto* gen_cmd = app.add_subcommand("gen", "write a generated dataset to data.csv / labels.csv");
    add_dataset_flags(*gen_cmd, gen_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            const auto cfg = resolve(*run_cmd, run_flags);
            const auto s = abdr::run(cfg);
            std::cout << "estimated_k=" << s.result.estimated_k
                      << " clustering_error=" << field_or_null(s.metrics["clustering_error"])
                      << " off_block_mass=" << field_or_null(s.metrics["off_block_mass"])
                      << " iterations=" << s.result.trace.size()
                      << " final_objective=" << abdr::io::format_real(s.result.trace.back().objective) << '\n'
                      << "artifacts written to " << cfg.output << '\n';
        } else if (*sweep_cmd) {
            const auto cfg = resolve(*sweep_cmd, sweep_flags);
            std::vector<abdr::FusionMode> mode_list;
            for (const auto& m : modes) {
                try {
                    mode_list.push_back(abdr::parse_mode(m));
                } catch (const abdr::InvalidArgument& e) {
                    throw abdr::ConfigError("modes", e.what());
                }
            }
            const auto rows = abdr::sweep(cfg, gammas, mode_list);
            for (const auto& r : rows) {
                std::cout << "gamma=" << r.gamma << " mode=" << abdr::to_string(r.mode)
                          << " estimated_k=" << r.estimated_k << " clustering_error="
                          << (r.clustering_error ? abdr::io::format_real(*r.clustering_error) : "n/a")
                          << " iterations=" << r.iterations << '\n';
            }
            std::cout << "summary written to " << cfg.output << "/sweep.csv\n";
        } else if (*gen_cmd) {
            const auto cfg = resolve(*gen_cmd, gen_flags);
            abdr::gen(cfg, cfg.output);
            std::cout << "dataset written to " << cfg.output << '\n';
        }
    } catch (const abdr::Error& e) {
        std::cerr << "abdr: error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "abdr: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
