#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "geoadex/dataset.hpp"
#include "geoadex/oracle.hpp"
#include "geoadex/report.hpp"
#include "geoadex/search.hpp"
#include "geoadex/stats.hpp"

using nlohmann::json;
using namespace geoadex;

namespace {

int default_jobs() {
    if (const char* env = std::getenv("GEOADEX_JOBS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::int64_t count, int jobs, const std::function<void(std::int64_t)>& fn) {
    jobs = std::max(1, std::min<std::int64_t>(jobs, count) > 0 ? std::min<int>(jobs, static_cast<int>(count)) : 1);
    if (jobs <= 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::int64_t i = next++; i < count; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

Dataset load_dataset(const std::string& path, std::string format, const std::string& label_column) {
    if (format == "auto")
        format = path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? "csv" : "libsvm";
    if (format == "csv") return load_csv(path, label_column);
    return load_libsvm(path);
}

void emit(const std::string& output, const std::string& content) {
    if (output.empty() || output == "-")
        std::cout << content << std::endl;
    else
        write_text_file(output, content);
}

struct PipelineFlags {
    std::string dataset;
    std::string format = "auto";
    std::string label_column = "label";
    std::int32_t k = 3;
    std::int64_t num_test = 100;
    std::int64_t holdout = -1;  // defaults to num_test
    std::uint64_t seed = 0;
    bool no_normalize = false;
    double jitter_magnitude = 1e-9;
};

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--dataset", f.dataset, "Input dataset file")->required();
    cmd->add_option("--format", f.format, "Input format")
        ->check(CLI::IsMember({"libsvm", "csv", "auto"}))
        ->capture_default_str();
    cmd->add_option("--label-column", f.label_column, "CSV label column (name or 0-based index)")
        ->capture_default_str();
    cmd->add_option("--k", f.k, "Number of neighbors (odd)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--num-test", f.num_test, "Queries attacked per run")->capture_default_str();
    cmd->add_option("--holdout", f.holdout,
                    "Points withheld from the generators (>= num-test; default num-test)");
    cmd->add_option("--seed", f.seed, "Base RNG seed")->capture_default_str();
    cmd->add_flag("--no-normalize", f.no_normalize, "Skip min-max normalization");
    cmd->add_option("--jitter", f.jitter_magnitude, "Generator jitter magnitude")
        ->capture_default_str();
}

struct PreparedRun {
    Dataset train;
    Dataset test;
    NormalizationParams params;
};

PreparedRun prepare_run(const Dataset& full, const PipelineFlags& f, std::uint64_t run_seed) {
    SplitSpec spec;
    spec.seed = run_seed;
    spec.num_test = f.holdout >= 0 ? f.holdout : f.num_test;
    Split split = split_dataset(full, spec);

    PreparedRun out;
    if (!f.no_normalize) {
        auto [train_norm, params] = normalize_minmax(split.train);
        out.train = std::move(train_norm);
        out.params = std::move(params);
        out.test = apply_normalization(split.test, out.params);
    } else {
        out.train = std::move(split.train);
        out.test = std::move(split.test);
    }
    out.train = jitter(out.train, f.jitter_magnitude, run_seed ^ 0x9e3779b97f4a7c15ull);
    return out;
}

void check_exact_cap(const PipelineFlags& f, std::int64_t n_train) {
    const std::int64_t per_cell = static_cast<std::int64_t>(f.k) * (n_train - f.k);
    if (per_cell > 100000)
        throw CLI::ValidationError(
            "--mode exact",
            "instance too large for exact mode: k(n-k) = " + std::to_string(per_cell) +
                " > 100000 bisectors per cell; use --mode approx");
}

// ---------------------------------------------------------------------------

int cmd_attack(const PipelineFlags& pf, const std::string& mode, std::int32_t m,
               const std::string& target, double time_limit, const std::string& init,
               std::int32_t init_candidates, std::int64_t runs, bool no_prune, int jobs,
               const std::string& output, const std::string& emit_format,
               const std::string& config_echo) {
    const Dataset full = load_dataset(pf.dataset, pf.format, pf.label_column);

    AttackConfig cfg;
    cfg.k = pf.k;
    cfg.mode = mode == "exact" ? SearchMode::exact : SearchMode::approx;
    cfg.m = m;
    cfg.distance_target = target == "facet" ? DistanceTarget::facet : DistanceTarget::cell;
    if (time_limit > 0)
        cfg.time_limit_s = time_limit;
    else
        cfg.time_limit_s.reset();
    cfg.init = init == "none" ? InitStrategy::none : InitStrategy::line_search;
    cfg.init_candidates = init_candidates;
    cfg.pruning = !no_prune;

    RunReport report;
    report.dataset_path = pf.dataset;
    report.dataset_fingerprint = full.fingerprint();
    report.n = full.size();
    report.d = full.dim();
    report.c = full.num_classes;
    report.normalized = !pf.no_normalize;
    report.config_echo_json = config_echo;

    for (std::int64_t r = 0; r < runs; ++r) {
        const std::uint64_t run_seed = pf.seed + static_cast<std::uint64_t>(r);
        const PreparedRun prep = prepare_run(full, pf, run_seed);
        if (cfg.mode == SearchMode::exact) check_exact_cap(pf, prep.train.size());

        const auto n_queries = std::min<std::int64_t>(pf.num_test, prep.test.size());
        RunRecord run;
        run.seed = run_seed;
        run.normalization = prep.params;
        run.queries.resize(static_cast<std::size_t>(n_queries));

        std::mutex io_mutex;
        const auto t0 = std::chrono::steady_clock::now();
        parallel_for(n_queries, jobs, [&](std::int64_t i) {
            Query q;
            q.x = prep.test.point(i);
            q.y = prep.test.labels[static_cast<std::size_t>(i)];
            q.k = cfg.k;
            Certificate cert = geoadex::geoadex(prep.train, q, cfg);
            QueryRecord rec;
            rec.query_index = i;
            rec.true_label = q.y;
            rec.pops_monotone = pop_monotone_check(cert.pop_trace);
            cert.pop_trace.clear();
            rec.certificate = std::move(cert);
            {
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "[run " << r << "] query " << i + 1 << "/" << n_queries << ": "
                          << to_string(rec.certificate.status);
                if (std::isfinite(rec.certificate.epsilon))
                    std::cerr << " eps=" << rec.certificate.epsilon;
                std::cerr << " (" << rec.certificate.stats.wall_time_s << "s)\n";
            }
            run.queries[static_cast<std::size_t>(i)] = std::move(rec);
        });
        run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.runs.push_back(std::move(run));
    }

    emit(output, emit_format == "csv" ? to_csv(report) : to_json(report));
    return 0;
}

int cmd_oracle(const PipelineFlags& pf, std::int64_t cell_cap, bool count_nonempty, bool compare,
               int jobs, const std::string& output, const std::string& config_echo) {
    const Dataset full = load_dataset(pf.dataset, pf.format, pf.label_column);
    const PreparedRun prep = prepare_run(full, pf, pf.seed);
    if (compare) check_exact_cap(pf, prep.train.size());

    const auto n_queries = std::min<std::int64_t>(pf.num_test, prep.test.size());
    OracleLimits limits;
    limits.max_cells = cell_cap;
    limits.count_nonempty = count_nonempty;

    AttackConfig cfg;
    cfg.k = pf.k;
    cfg.mode = SearchMode::exact;
    cfg.time_limit_s.reset();

    struct Row {
        json j;
        double gap = 0;
    };
    std::vector<Row> rows(static_cast<std::size_t>(n_queries));
    std::mutex io_mutex;
    parallel_for(n_queries, jobs, [&](std::int64_t i) {
        Query q;
        q.x = prep.test.point(i);
        q.y = prep.test.labels[static_cast<std::size_t>(i)];
        q.k = pf.k;
        const OracleResult o = oracle_min_distance(prep.train, q, limits);
        json row{
            {"query_index", i},
            {"true_label", q.y},
            {"epsilon_star", o.attained() ? json(o.epsilon_star) : json(nullptr)},
            {"adversarial_cells", o.adversarial_cell_count},
        };
        if (count_nonempty) row["nonempty_cells"] = o.nonempty_cell_count;
        double gap = 0;
        if (compare) {
            const Certificate cert = geoadex::geoadex(prep.train, q, cfg);
            gap = std::isfinite(cert.epsilon) && o.attained()
                      ? std::abs(cert.epsilon - o.epsilon_star)
                      : (std::isfinite(cert.epsilon) != o.attained()
                             ? std::numeric_limits<double>::infinity()
                             : 0.0);
            row["compare"] = json{{"epsilon", std::isfinite(cert.epsilon) ? json(cert.epsilon) : json(nullptr)},
                                  {"status", to_string(cert.status)},
                                  {"gap", gap}};
        }
        {
            std::lock_guard<std::mutex> lock(io_mutex);
            std::cerr << "query " << i + 1 << "/" << n_queries << ": eps*="
                      << (o.attained() ? std::to_string(o.epsilon_star) : "inf") << "\n";
        }
        rows[static_cast<std::size_t>(i)] = Row{std::move(row), gap};
    });

    json queries = json::array();
    double max_gap = 0;
    for (auto& r : rows) {
        queries.push_back(std::move(r.j));
        max_gap = std::max(max_gap, r.gap);
    }
    json out{
        {"schema_version", kReportSchemaVersion},
        {"dataset", {{"path", pf.dataset}, {"fingerprint", full.fingerprint()}}},
        {"config", json::parse(config_echo)},
        {"queries", std::move(queries)},
    };
    if (compare) out["max_gap"] = max_gap;
    emit(output, out.dump(2));
    return 0;
}

int cmd_gen_gaussian(std::int64_t n, std::int64_t d, double alpha, std::uint64_t seed,
                     const std::string& output) {
    const Dataset ds = gen_gaussian(n, d, alpha, seed);
    write_csv(ds, output);
    json meta{{"generator", "gaussian"}, {"n", n}, {"d", d}, {"alpha", alpha}, {"seed", seed}};
    write_text_file(output + ".meta.json", meta.dump(2));
    std::cerr << "wrote " << output << " (n=" << n << ", d=" << d << ", alpha=" << alpha << ")\n";
    return 0;
}

int cmd_closeness(const std::string& dataset, double alpha_flag, bool has_alpha,
                  const std::string& output) {
    double alpha = alpha_flag;
    if (!has_alpha) {
        if (dataset.empty())
            throw std::runtime_error("pass --dataset with a generated Gaussian set or --alpha");
        const std::string meta_path = dataset + ".meta.json";
        if (!std::filesystem::exists(meta_path))
            throw std::runtime_error(
                "no '" + meta_path + "': analytic closeness only covers datasets produced by "
                "gen-gaussian; a sample-based divergence estimate is not implemented");
        const json meta = json::parse(read_text_file(meta_path));
        if (meta.value("generator", "") != "gaussian")
            throw std::runtime_error("dataset was not produced by gen-gaussian");
        alpha = meta.at("alpha").get<double>();
    }
    emit(output, to_json(analytic_closeness(alpha)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Certified minimum-norm adversarial perturbations for k-NN classifiers.\n"
        "Best-first search over the order-k Voronoi diagram with a dual\n"
        "coordinate-ascent projection solver."};
    app.require_subcommand(1);

    // attack ----------------------------------------------------------------
    PipelineFlags apf;
    std::string mode = "approx", target = "cell", init = "line-search";
    std::string output = "-", emit_format = "json";
    std::int32_t m = 20, init_candidates = 10;
    double time_limit = 100.0;
    std::int64_t runs = 1;
    bool no_prune = false;
    int jobs = default_jobs();

    CLI::App* attack = app.add_subcommand("attack", "Find minimum-norm adversarial perturbations");
    add_pipeline_flags(attack, apf);
    attack->add_option("--mode", mode, "Search mode")
        ->check(CLI::IsMember({"exact", "approx"}))
        ->capture_default_str();
    auto* m_opt = attack->add_option("--m", m, "Approximate neighbor-set size (approx mode)")
                      ->check(CLI::PositiveNumber)
                      ->capture_default_str();
    attack->add_option("--distance-target", target, "Distance target per candidate")
        ->check(CLI::IsMember({"facet", "cell"}))
        ->capture_default_str();
    attack->add_option("--time-limit", time_limit, "Seconds per query; 0 disables")
        ->capture_default_str();
    attack->add_option("--init", init, "Upper-bound initialization")
        ->check(CLI::IsMember({"none", "line-search"}))
        ->capture_default_str();
    attack->add_option("--init-candidates", init_candidates,
                       "Wrong-class generators tried by the line search (0 = all)")
        ->capture_default_str();
    attack->add_option("--runs", runs, "Seeded split repetitions")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    attack->add_flag("--no-prune", no_prune, "Disable distance pruning (testing aid)");
    attack->add_option("--jobs", jobs, "Concurrent queries (env GEOADEX_JOBS)")
        ->check(CLI::PositiveNumber);
    attack->add_option("--output", output, "Report path ('-' = stdout)")->capture_default_str();
    attack->add_option("--emit", emit_format, "Report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    // oracle ----------------------------------------------------------------
    PipelineFlags opf;
    std::int64_t cell_cap = 100000;
    bool count_nonempty = false, compare = false;
    std::string oracle_output = "-";
    int oracle_jobs = default_jobs();

    CLI::App* oracle = app.add_subcommand(
        "oracle", "Exhaustive ground-truth minimum adversarial distance (small instances)");
    add_pipeline_flags(oracle, opf);
    oracle->add_option("--cell-cap", cell_cap, "Maximum C(n,k) cells")->capture_default_str();
    oracle->add_flag("--count-nonempty", count_nonempty, "Also count nonempty cells");
    oracle->add_flag("--compare", compare, "Run the exact search and report the gap");
    oracle->add_option("--jobs", oracle_jobs, "Concurrent queries")->check(CLI::PositiveNumber);
    oracle->add_option("--output", oracle_output, "Report path ('-' = stdout)")
        ->capture_default_str();

    // gen-gaussian ----------------------------------------------------------
    std::int64_t gn = 10000, gd = 20;
    double galpha = 0.5;
    std::uint64_t gseed = 0;
    std::string goutput;

    CLI::App* gen = app.add_subcommand("gen-gaussian", "Sample a two-class Gaussian dataset");
    gen->add_option("--n", gn, "Total points (even)")->capture_default_str();
    gen->add_option("--d", gd, "Dimensions")->check(CLI::PositiveNumber)->capture_default_str();
    gen->add_option("--alpha", galpha, "Half the mean separation along the first axis")
        ->capture_default_str();
    gen->add_option("--seed", gseed, "RNG seed")->capture_default_str();
    gen->add_option("--output", goutput, "Output CSV path")->required();

    // closeness -------------------------------------------------------------
    std::string cdataset, coutput = "-";
    double calpha = 0.0;

    CLI::App* closeness = app.add_subcommand(
        "closeness",
        "Analytic class closeness (mean over classes of the smallest KL divergence to another "
        "class). Gaussian datasets from gen-gaussian only; no sample-based estimator.");
    closeness->add_option("--dataset", cdataset, "CSV produced by gen-gaussian");
    auto* alpha_opt = closeness->add_option("--alpha", calpha, "Half mean separation (overrides)");
    closeness->add_option("--output", coutput, "Report path ('-' = stdout)")->capture_default_str();

    try {
        app.parse(argc, argv);

        if (attack->parsed()) {
            if (m_opt->count() > 0 && mode != "approx")
                throw CLI::ValidationError("--m", "--m only applies to --mode approx");
            if (apf.k % 2 == 0)
                throw CLI::ValidationError("--k", "k must be odd");
            if (apf.holdout >= 0 && apf.holdout < apf.num_test)
                throw CLI::ValidationError("--holdout", "holdout must be >= num-test");
            json echo{{"command", "attack"},   {"dataset", apf.dataset},
                      {"k", apf.k},            {"mode", mode},
                      {"m", m},                {"distance_target", target},
                      {"time_limit", time_limit}, {"init", init},
                      {"num_test", apf.num_test}, {"holdout", apf.holdout >= 0 ? apf.holdout : apf.num_test},
                      {"runs", runs},          {"seed", apf.seed},
                      {"normalize", !apf.no_normalize}, {"prune", !no_prune},
                      {"jitter", apf.jitter_magnitude}, {"jobs", jobs}};
            return cmd_attack(apf, mode, m, target, time_limit, init, init_candidates, runs,
                              no_prune, jobs, output, emit_format, echo.dump());
        }
        if (oracle->parsed()) {
            if (opf.k % 2 == 0) throw CLI::ValidationError("--k", "k must be odd");
            json echo{{"command", "oracle"}, {"dataset", opf.dataset}, {"k", opf.k},
                      {"num_test", opf.num_test}, {"seed", opf.seed},
                      {"normalize", !opf.no_normalize}, {"cell_cap", cell_cap},
                      {"compare", compare}};
            return cmd_oracle(opf, cell_cap, count_nonempty, compare, oracle_jobs, oracle_output,
                              echo.dump());
        }
        if (gen->parsed()) {
            if (gn <= 0 || gn % 2 != 0)
                throw CLI::ValidationError("--n", "n must be positive and even");
            if (galpha <= 0) throw CLI::ValidationError("--alpha", "alpha must be > 0");
            return cmd_gen_gaussian(gn, gd, galpha, gseed, goutput);
        }
        if (closeness->parsed())
            return cmd_closeness(cdataset, calpha, alpha_opt->count() > 0, coutput);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
