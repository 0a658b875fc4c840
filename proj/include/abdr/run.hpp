#pragma once

// End-to-end runs: dataset -> graph -> solve -> cluster -> metrics, driven by
// a RunConfig that round-trips through JSON. Every artifact a run produces is
// written to its output directory; `run.json` holds the config with all
// "auto" values replaced by what they resolved to.

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "abdr/dataset.hpp"
#include "abdr/graph.hpp"
#include "abdr/io.hpp"
#include "abdr/metrics.hpp"
#include "abdr/solver.hpp"
#include "abdr/spectral.hpp"

namespace abdr {

using json = nlohmann::json;

enum class DatasetKind { example1, example2, example3, subspaces, csv };

inline std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::example1: return "example1";
        case DatasetKind::example2: return "example2";
        case DatasetKind::example3: return "example3";
        case DatasetKind::subspaces: return "subspaces";
        case DatasetKind::csv: return "csv";
    }
    return "example1";
}

inline DatasetKind parse_dataset_kind(const std::string& s) {
    for (auto k : {DatasetKind::example1, DatasetKind::example2, DatasetKind::example3, DatasetKind::subspaces,
                   DatasetKind::csv})
        if (to_string(k) == s) return k;
    throw ConfigError("dataset.kind", "unknown dataset '" + s + "'");
}

struct DatasetSpec {
    DatasetKind kind = DatasetKind::example1;
    // example3
    double noise_std = 0.1;
    double noisy_rate = 0.2;
    // subspaces (noise_std shared with example3)
    int k = 2;
    int ambient_dim = 4;
    std::vector<int> sub_dims{1, 1};
    std::vector<int> counts{10, 10};
    // csv
    std::string data_path;
    std::string labels_path;
    bool header = false;

    bool normalize = false;
};

struct GraphSpec {
    int knn = 10;
    std::optional<double> phi;  ///< nullopt: median heuristic
};

struct ClusteringSpec {
    std::optional<int> k;  ///< nullopt: estimate_block_count
    double rel_threshold = 1e-3;
};

struct RunConfig {
    DatasetSpec dataset;
    GraphSpec graph;
    SolverConfig solver;
    ClusteringSpec clustering;
    std::uint64_t seed = 0;
    std::string output = "abdr_out";
    bool dump_graph = false;

    std::uint64_t dataset_seed() const { return mix_seed(seed, 0); }
    std::uint64_t cluster_seed() const { return mix_seed(seed, 1); }
};

namespace detail {

inline json auto_or(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

template <typename T>
T get_field(const json& obj, const char* key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key, std::string("wrong type (") + e.what() + ")");
    }
}

inline std::optional<double> get_auto_real(const json& obj, const char* key, const std::string& path,
                                           std::optional<double> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
    if (v.is_number()) return v.get<double>();
    throw ConfigError(path + "." + key, "expected a number or \"auto\"");
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; }))
            throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
    json ds = {{"kind", to_string(c.dataset.kind)}, {"normalize", c.dataset.normalize}};
    switch (c.dataset.kind) {
        case DatasetKind::example3:
            ds["noise_std"] = c.dataset.noise_std;
            ds["noisy_rate"] = c.dataset.noisy_rate;
            break;
        case DatasetKind::subspaces:
            ds["k"] = c.dataset.k;
            ds["ambient_dim"] = c.dataset.ambient_dim;
            ds["sub_dims"] = c.dataset.sub_dims;
            ds["counts"] = c.dataset.counts;
            ds["noise_std"] = c.dataset.noise_std;
            break;
        case DatasetKind::csv:
            ds["data_path"] = c.dataset.data_path;
            ds["labels_path"] = c.dataset.labels_path;
            ds["header"] = c.dataset.header;
            break;
        default: break;
    }
    return {
        {"dataset", ds},
        {"graph", {{"knn", c.graph.knn}, {"phi", detail::auto_or(c.graph.phi)}}},
        {"solver",
         {{"gamma", c.solver.gamma},
          {"mu1", c.solver.mu1},
          {"mu2", c.solver.mu2},
          {"alpha", detail::auto_or(c.solver.alpha)},
          {"max_iter", c.solver.max_iter},
          {"tol_primal", c.solver.tol_primal},
          {"tol_change", c.solver.tol_change},
          {"mode", to_string(c.solver.mode)}}},
        {"clustering",
         {{"k", c.clustering.k ? json(*c.clustering.k) : json("auto")},
          {"rel_threshold", c.clustering.rel_threshold}}},
        {"seed", c.seed},
        {"output", c.output},
        {"dump_graph", c.dump_graph},
    };
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline RunConfig run_config_from_json(const json& j) {
    using detail::get_field;
    RunConfig c;
    detail::reject_unknown(j, "", {"dataset", "graph", "solver", "clustering", "seed", "output", "dump_graph"});
    c.seed = get_field<std::uint64_t>(j, "seed", "config", c.seed);
    c.output = get_field<std::string>(j, "output", "config", c.output);
    c.dump_graph = get_field<bool>(j, "dump_graph", "config", c.dump_graph);

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        detail::reject_unknown(d, "dataset",
                               {"kind", "normalize", "noise_std", "noisy_rate", "k", "ambient_dim", "sub_dims",
                                "counts", "data_path", "labels_path", "header"});
        auto& s = c.dataset;
        s.kind = parse_dataset_kind(get_field<std::string>(d, "kind", "dataset", to_string(s.kind)));
        s.normalize = get_field<bool>(d, "normalize", "dataset", s.normalize);
        s.noise_std = get_field<double>(d, "noise_std", "dataset", s.noise_std);
        s.noisy_rate = get_field<double>(d, "noisy_rate", "dataset", s.noisy_rate);
        s.k = get_field<int>(d, "k", "dataset", s.k);
        s.ambient_dim = get_field<int>(d, "ambient_dim", "dataset", s.ambient_dim);
        s.sub_dims = get_field<std::vector<int>>(d, "sub_dims", "dataset", s.sub_dims);
        s.counts = get_field<std::vector<int>>(d, "counts", "dataset", s.counts);
        s.data_path = get_field<std::string>(d, "data_path", "dataset", s.data_path);
        s.labels_path = get_field<std::string>(d, "labels_path", "dataset", s.labels_path);
        s.header = get_field<bool>(d, "header", "dataset", s.header);
    }
    if (j.contains("graph")) {
        const auto& g = j.at("graph");
        detail::reject_unknown(g, "graph", {"knn", "phi"});
        c.graph.knn = get_field<int>(g, "knn", "graph", c.graph.knn);
        c.graph.phi = detail::get_auto_real(g, "phi", "graph", c.graph.phi);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::reject_unknown(s, "solver",
                               {"gamma", "mu1", "mu2", "alpha", "max_iter", "tol_primal", "tol_change", "mode"});
        auto& o = c.solver;
        o.gamma = get_field<double>(s, "gamma", "solver", o.gamma);
        o.mu1 = get_field<double>(s, "mu1", "solver", o.mu1);
        o.mu2 = get_field<double>(s, "mu2", "solver", o.mu2);
        o.alpha = detail::get_auto_real(s, "alpha", "solver", o.alpha);
        o.max_iter = get_field<int>(s, "max_iter", "solver", o.max_iter);
        o.tol_primal = get_field<double>(s, "tol_primal", "solver", o.tol_primal);
        o.tol_change = get_field<double>(s, "tol_change", "solver", o.tol_change);
        try {
            o.mode = parse_mode(get_field<std::string>(s, "mode", "solver", to_string(o.mode)));
        } catch (const InvalidArgument& e) {
            throw ConfigError("solver.mode", e.what());
        }
    }
    if (j.contains("clustering")) {
        const auto& k = j.at("clustering");
        detail::reject_unknown(k, "clustering", {"k", "rel_threshold"});
        if (k.contains("k")) {
            const auto& v = k.at("k");
            if (v.is_string() && v.get<std::string>() == "auto") c.clustering.k.reset();
            else if (v.is_number_integer()) c.clustering.k = v.get<int>();
            else throw ConfigError("clustering.k", "expected a positive integer or \"auto\"");
        }
        c.clustering.rel_threshold = get_field<double>(k, "rel_threshold", "clustering", c.clustering.rel_threshold);
    }
    return c;
}

struct LoadedData {
    DataMatrix X;
    std::optional<LabelVector> truth;
    std::optional<int> true_k;
};

/// Checks that do not need the data itself.
inline void validate(const RunConfig& c) {
    try {
        c.solver.validate();
    } catch (const ConfigError& e) {
        throw ConfigError("solver." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
    if (c.graph.knn < 1) throw ConfigError("graph.knn", "must be >= 1");
    if (c.graph.phi && !(*c.graph.phi >= 0.0 && std::isfinite(*c.graph.phi)))
        throw ConfigError("graph.phi", "must be finite and >= 0");
    if (c.clustering.k && *c.clustering.k < 1) throw ConfigError("clustering.k", "must be >= 1");
    if (!(c.clustering.rel_threshold > 0.0 && c.clustering.rel_threshold < 1.0))
        throw ConfigError("clustering.rel_threshold", "must lie in (0, 1)");
    if (c.output.empty()) throw ConfigError("output", "must not be empty");
    const auto& d = c.dataset;
    if (d.kind == DatasetKind::csv) {
        if (d.data_path.empty()) throw ConfigError("dataset.data_path", "required for csv datasets");
        if (!std::filesystem::exists(d.data_path))
            throw ConfigError("dataset.data_path", "file not found: " + d.data_path);
        if (!d.labels_path.empty() && !std::filesystem::exists(d.labels_path))
            throw ConfigError("dataset.labels_path", "file not found: " + d.labels_path);
    }
    if (d.noise_std < 0.0) throw ConfigError("dataset.noise_std", "must be >= 0");
    if (d.noisy_rate < 0.0 || d.noisy_rate > 1.0) throw ConfigError("dataset.noisy_rate", "must lie in [0, 1]");
}

inline LoadedData load_dataset(const RunConfig& c) {
    const auto& d = c.dataset;
    const auto from = [&](LabeledDataset ds) {
        return LoadedData{d.normalize ? normalize_columns(ds.data) : ds.data, std::move(ds.truth), ds.subspace_count};
    };
    switch (d.kind) {
        case DatasetKind::example1: return from(gen_example1(c.dataset_seed()));
        case DatasetKind::example2: return from(gen_example2(c.dataset_seed()));
        case DatasetKind::example3: return from(gen_example3(c.dataset_seed(), d.noise_std, d.noisy_rate));
        case DatasetKind::subspaces:
            try {
                return from(gen_subspaces(d.k, d.ambient_dim, d.sub_dims, d.counts, d.noise_std, c.dataset_seed()));
            } catch (const InvalidArgument& e) {
                throw ConfigError("dataset", e.what());
            }
        case DatasetKind::csv: {
            DataMatrix X = load_csv(d.data_path, d.header);
            if (d.normalize) X = normalize_columns(X);
            LoadedData out{std::move(X), std::nullopt, std::nullopt};
            if (!d.labels_path.empty()) {
                out.truth = load_labels_csv(d.labels_path, d.header);
                if (Index(out.truth->size()) != out.X.n())
                    throw ConfigError("dataset.labels_path", "has " + std::to_string(out.truth->size()) +
                                                                 " labels for " + std::to_string(out.X.n()) +
                                                                 " samples");
                out.true_k = int(canonical_labels(out.truth->labels).k);
            }
            return out;
        }
    }
    throw ConfigError("dataset.kind", "unsupported");
}

struct RunSummary {
    RunConfig resolved;
    PipelineResult result;
    json metrics;
};

/// Metrics report; fields needing ground truth are null without it.
inline json metrics_json(const PipelineResult& r, const LoadedData& data) {
    json m;
    m["clustering_error"] = data.truth ? json(clustering_error(r.labels, *data.truth)) : json(nullptr);
    m["off_block_mass"] = data.truth ? json(off_block_mass(r.Z, *data.truth)) : json(nullptr);
    m["estimated_k"] = r.estimated_k;
    m["true_k"] = data.true_k ? json(*data.true_k) : json(nullptr);
    m["iterations"] = r.trace.size();
    m["final_objective"] = r.trace.size() ? json(r.trace.back().objective) : json(nullptr);
    return m;
}

inline void write_artifacts(const std::string& dir, const RunSummary& s, const WeightedGraph& G) {
    std::filesystem::create_directories(dir);
    const auto at = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };
    io::write_matrix_csv(at("Z.csv"), s.result.Z);
    io::write_matrix_csv(at("W.csv"), s.result.W.W);
    io::write_pgm(at("W.pgm"), s.result.W.W);
    io::write_trace_csv(at("trace.csv"), s.result.trace);
    io::write_labels_csv(at("labels.csv"), s.result.labels);
    if (s.resolved.dump_graph) io::write_edges_csv(at("graph.csv"), G);
    io::open_out(at("metrics.json")) << s.metrics.dump(2) << '\n';
    io::open_out(at("run.json")) << to_json(s.resolved).dump(2) << '\n';
}

namespace detail {

inline std::optional<int> check_k(const RunConfig& c, Index n) {
    if (c.clustering.k && *c.clustering.k > n)
        throw ConfigError("clustering.k", "exceeds the number of samples (" + std::to_string(n) + ")");
    return c.clustering.k;
}

inline WeightedGraph graph_for(const RunConfig& c, const DataMatrix& X) {
    if (c.graph.knn >= X.n())
        throw ConfigError("graph.knn", "must be < n (" + std::to_string(X.n()) + " samples)");
    return build_graph(X, c.graph.knn, c.graph.phi);
}

inline RunSummary execute(const RunConfig& c, const LoadedData& data, const WeightedGraph& G, const ZSystem& sys) {
    RunSummary s;
    s.result = cluster_pipeline(data.X, G, c.solver, check_k(c, data.X.n()), c.cluster_seed(),
                                c.clustering.rel_threshold, &sys);
    s.resolved = c;
    s.resolved.graph.phi = G.phi;
    s.resolved.solver.alpha = sys.alpha();
    s.resolved.clustering.k = s.result.estimated_k;
    s.metrics = metrics_json(s.result, data);
    return s;
}

}  // namespace detail

/// One pipeline run; writes every artifact into config.output.
inline RunSummary run(const RunConfig& config) {
    validate(config);
    const LoadedData data = load_dataset(config);
    const WeightedGraph G = detail::graph_for(config, data.X);
    const ZSystem sys(data.X, config.solver.alpha ? *config.solver.alpha
                                                  : choose_alpha(G, config.solver.mu1, config.solver.mu2));
    RunSummary s = detail::execute(config, data, G, sys);
    write_artifacts(config.output, s, G);
    return s;
}

/// Parallelism cap from ABDR_THREADS; 0 or unset means hardware concurrency.
inline unsigned thread_budget() {
    unsigned n = 0;
    if (const char* env = std::getenv("ABDR_THREADS")) {
        try {
            n = unsigned(std::stoul(env));
        } catch (const std::exception&) {
            throw ConfigError("ABDR_THREADS", std::string("not a nonnegative integer: '") + env + "'");
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

struct SweepRow {
    double gamma = 0.0;
    FusionMode mode = FusionMode::both;
    int estimated_k = 0;
    std::optional<double> clustering_error;
    std::optional<double> off_block_mass;
    std::size_t iterations = 0;
    double final_objective = 0.0;
};

/// Pipeline over every (mode, gamma) pair. The graph and the factorization of
/// X^T X + alpha I are built once and shared. Run i writes its artifacts to
/// `<output>/run_<i>/`; the summary goes to `<output>/sweep.csv`, with a
/// trailing `mode` column when more than the configured mode is swept.
inline std::vector<SweepRow> sweep(const RunConfig& config, const std::vector<double>& gammas,
                                   const std::vector<FusionMode>& modes = {}) {
    if (gammas.empty()) throw ConfigError("gammas", "must not be empty");
    validate(config);
    for (double g : gammas)
        if (!(g >= 0.0) || !std::isfinite(g)) throw ConfigError("gammas", "entries must be finite and >= 0");

    const bool ablation = !modes.empty();
    const std::vector<FusionMode> mode_list = ablation ? modes : std::vector<FusionMode>{config.solver.mode};
    std::vector<RunConfig> jobs;
    for (FusionMode m : mode_list) {
        for (double g : gammas) {
            RunConfig c = config;
            c.solver.gamma = g;
            c.solver.mode = m;
            char name[32];
            std::snprintf(name, sizeof name, "run_%03zu", jobs.size());
            c.output = (std::filesystem::path(config.output) / name).string();
            jobs.push_back(std::move(c));
        }
    }

    const LoadedData data = load_dataset(config);
    const WeightedGraph G = detail::graph_for(config, data.X);
    const ZSystem sys(data.X, config.solver.alpha ? *config.solver.alpha
                                                  : choose_alpha(G, config.solver.mu1, config.solver.mu2));

    std::vector<SweepRow> rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const RunSummary s = detail::execute(jobs[i], data, G, sys);
                write_artifacts(jobs[i].output, s, G);
                auto& r = rows[i];
                r.gamma = jobs[i].solver.gamma;
                r.mode = jobs[i].solver.mode;
                r.estimated_k = s.result.estimated_k;
                if (data.truth) {
                    r.clustering_error = s.metrics["clustering_error"].get<double>();
                    r.off_block_mass = s.metrics["off_block_mass"].get<double>();
                }
                r.iterations = s.result.trace.size();
                r.final_objective = s.result.trace.back().objective;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::min<unsigned>(thread_budget(), unsigned(jobs.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    std::filesystem::create_directories(config.output);
    auto out = io::open_out((std::filesystem::path(config.output) / "sweep.csv").string());
    out << "gamma,estimated_k,clustering_error,off_block_mass,iterations,final_objective" << (ablation ? ",mode" : "")
        << '\n';
    const auto opt = [](const std::optional<double>& v) { return v ? io::format_real(*v) : std::string(); };
    for (const auto& r : rows) {
        out << io::format_real(r.gamma) << ',' << r.estimated_k << ',' << opt(r.clustering_error) << ','
            << opt(r.off_block_mass) << ',' << r.iterations << ',' << io::format_real(r.final_objective);
        if (ablation) out << ',' << to_string(r.mode);
        out << '\n';
    }
    return rows;
}

/// Dump a dataset as `data.csv` (+ `labels.csv` when truth is known) into `dir`.
inline void gen(const RunConfig& config, const std::string& dir) {
    validate(config);
    const LoadedData data = load_dataset(config);
    std::filesystem::create_directories(dir);
    io::write_matrix_csv((std::filesystem::path(dir) / "data.csv").string(), data.X.values());
    if (data.truth) io::write_labels_csv((std::filesystem::path(dir) / "labels.csv").string(), *data.truth);
}

}  // namespace abdr
