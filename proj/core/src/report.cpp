#include "geoadex/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "geoadex/stats.hpp"

namespace geoadex {

using nlohmann::json;

namespace {

CertificateStatus status_from_string(const std::string& s) {
    if (s == "optimal") return CertificateStatus::optimal;
    if (s == "bounded") return CertificateStatus::bounded;
    if (s == "upper_only") return CertificateStatus::upper_only;
    if (s == "infeasible_query") return CertificateStatus::infeasible_query;
    throw std::invalid_argument("unknown certificate status '" + s + "'");
}

json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

double from_finite_or_null(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json query_to_json(const QueryRecord& q) {
    json stats{
        {"cells_visited", q.certificate.stats.cells_visited},
        {"cells_processed", q.certificate.stats.cells_processed},
        {"facets_solved", q.certificate.stats.facets_solved},
        {"facets_pruned", q.certificate.stats.facets_pruned},
        {"pq_pops", q.certificate.stats.pq_pops},
        {"wall_time_s", q.certificate.stats.wall_time_s},
        {"timed_out", q.certificate.stats.timed_out},
    };
    json out{
        {"query_index", q.query_index},
        {"true_label", q.true_label},
        {"status", to_string(q.certificate.status)},
        {"epsilon", finite_or_null(q.certificate.epsilon)},
        {"lower_bound", finite_or_null(q.certificate.lower_bound)},
        {"pops_monotone", q.pops_monotone},
        {"stats", std::move(stats)},
    };
    if (std::isfinite(q.certificate.epsilon) && q.certificate.adv_point.size() > 0) {
        json pt = json::array();
        for (Eigen::Index i = 0; i < q.certificate.adv_point.size(); ++i)
            pt.push_back(q.certificate.adv_point[i]);
        out["adv_point"] = std::move(pt);
    }
    return out;
}

QueryRecord query_from_json(const json& j) {
    QueryRecord q;
    q.query_index = j.at("query_index").get<std::int64_t>();
    q.true_label = j.at("true_label").get<std::int32_t>();
    q.certificate.status = status_from_string(j.at("status").get<std::string>());
    q.certificate.epsilon = from_finite_or_null(j.at("epsilon"));
    q.certificate.lower_bound = from_finite_or_null(j.at("lower_bound"));
    q.pops_monotone = j.at("pops_monotone").get<bool>();
    const json& s = j.at("stats");
    q.certificate.stats.cells_visited = s.at("cells_visited").get<std::int64_t>();
    q.certificate.stats.cells_processed = s.at("cells_processed").get<std::int64_t>();
    q.certificate.stats.facets_solved = s.at("facets_solved").get<std::int64_t>();
    q.certificate.stats.facets_pruned = s.at("facets_pruned").get<std::int64_t>();
    q.certificate.stats.pq_pops = s.at("pq_pops").get<std::int64_t>();
    q.certificate.stats.wall_time_s = s.at("wall_time_s").get<double>();
    q.certificate.stats.timed_out = s.at("timed_out").get<bool>();
    if (j.contains("adv_point")) {
        const auto& pt = j.at("adv_point");
        q.certificate.adv_point.resize(static_cast<Eigen::Index>(pt.size()));
        for (std::size_t i = 0; i < pt.size(); ++i)
            q.certificate.adv_point[static_cast<Eigen::Index>(i)] = pt[i].get<double>();
    }
    return q;
}

}  // namespace

double RunRecord::mean_epsilon() const {
    std::vector<double> vals;
    for (const QueryRecord& q : queries)
        if (q.certificate.status != CertificateStatus::infeasible_query &&
            std::isfinite(q.certificate.epsilon))
            vals.push_back(q.certificate.epsilon);
    return mean(vals);
}

double RunRecord::mean_lower_bound() const {
    std::vector<double> vals;
    for (const QueryRecord& q : queries)
        if (q.certificate.status != CertificateStatus::infeasible_query &&
            std::isfinite(q.certificate.lower_bound))
            vals.push_back(q.certificate.lower_bound);
    return mean(vals);
}

std::int64_t RunRecord::timeout_count() const {
    std::int64_t count = 0;
    for (const QueryRecord& q : queries)
        if (q.certificate.stats.timed_out) ++count;
    return count;
}

Aggregate RunReport::aggregate() const {
    Aggregate agg;
    for (const RunRecord& run : runs) {
        const double m = run.mean_epsilon();
        if (std::isfinite(m)) agg.per_run_means.push_back(m);
        agg.timeout_count += run.timeout_count();
        agg.total_wall_time_s += run.wall_time_s;
    }
    agg.mean_epsilon = mean(agg.per_run_means);
    agg.ci95 = ci95_halfwidth(agg.per_run_means);
    std::vector<double> lbs;
    for (const RunRecord& run : runs) {
        const double lb = run.mean_lower_bound();
        if (std::isfinite(lb)) lbs.push_back(lb);
    }
    agg.mean_lower_bound = mean(lbs);
    return agg;
}

std::string to_json(const RunReport& report) {
    json runs = json::array();
    for (const RunRecord& run : report.runs) {
        json queries = json::array();
        for (const QueryRecord& q : run.queries) queries.push_back(query_to_json(q));
        json jrun{
            {"seed", run.seed},
            {"wall_time_s", run.wall_time_s},
            {"mean_epsilon", finite_or_null(run.mean_epsilon())},
            {"mean_lower_bound", finite_or_null(run.mean_lower_bound())},
            {"timeout_count", run.timeout_count()},
            {"queries", std::move(queries)},
        };
        if (!run.normalization.identity()) {
            jrun["normalization"] = json{{"feature_min", run.normalization.feature_min},
                                         {"feature_range", run.normalization.feature_range}};
        }
        runs.push_back(std::move(jrun));
    }

    const Aggregate agg = report.aggregate();
    json jagg{
        {"mean_epsilon", finite_or_null(agg.mean_epsilon)},
        {"ci95", std::isnan(agg.ci95) ? json(nullptr) : json(agg.ci95)},
        {"mean_lower_bound", finite_or_null(agg.mean_lower_bound)},
        {"timeout_count", agg.timeout_count},
        {"total_wall_time_s", agg.total_wall_time_s},
        {"per_run_means", agg.per_run_means},
    };

    json norm{{"enabled", report.normalized}, {"fit_on", "generators"}};

    json out{
        {"schema_version", kReportSchemaVersion},
        {"dataset",
         {{"path", report.dataset_path},
          {"fingerprint", report.dataset_fingerprint},
          {"n", report.n},
          {"d", report.d},
          {"c", report.c}}},
        {"normalization", std::move(norm)},
        {"config", json::parse(report.config_echo_json.empty() ? "{}" : report.config_echo_json)},
        {"runs", std::move(runs)},
        {"aggregate", std::move(jagg)},
    };
    return out.dump(2);
}

RunReport run_report_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion)
        throw std::invalid_argument("unsupported report schema version");
    RunReport report;
    const json& ds = j.at("dataset");
    report.dataset_path = ds.at("path").get<std::string>();
    report.dataset_fingerprint = ds.at("fingerprint").get<std::string>();
    report.n = ds.at("n").get<std::int64_t>();
    report.d = ds.at("d").get<std::int64_t>();
    report.c = ds.at("c").get<std::int64_t>();
    report.normalized = j.at("normalization").at("enabled").get<bool>();
    report.config_echo_json = j.at("config").dump();
    for (const json& jr : j.at("runs")) {
        RunRecord run;
        run.seed = jr.at("seed").get<std::uint64_t>();
        run.wall_time_s = jr.at("wall_time_s").get<double>();
        if (jr.contains("normalization")) {
            run.normalization.feature_min =
                jr.at("normalization").at("feature_min").get<std::vector<double>>();
            run.normalization.feature_range =
                jr.at("normalization").at("feature_range").get<std::vector<double>>();
        }
        for (const json& jq : jr.at("queries")) run.queries.push_back(query_from_json(jq));
        report.runs.push_back(std::move(run));
    }
    return report;
}

std::string to_csv(const RunReport& report) {
    std::ostringstream out;
    out << "run,seed,query_index,true_label,status,epsilon,lower_bound,wall_time_s,"
           "cells_visited,facets_solved,facets_pruned,timed_out\n";
    char buf[64];
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
        const RunRecord& run = report.runs[r];
        for (const QueryRecord& q : run.queries) {
            out << r << ',' << run.seed << ',' << q.query_index << ',' << q.true_label << ','
                << to_string(q.certificate.status) << ',';
            if (std::isfinite(q.certificate.epsilon)) {
                std::snprintf(buf, sizeof(buf), "%.17g", q.certificate.epsilon);
                out << buf;
            } else {
                out << "inf";
            }
            out << ',';
            if (std::isfinite(q.certificate.lower_bound)) {
                std::snprintf(buf, sizeof(buf), "%.17g", q.certificate.lower_bound);
                out << buf;
            } else {
                out << "inf";
            }
            std::snprintf(buf, sizeof(buf), "%.6g", q.certificate.stats.wall_time_s);
            out << ',' << buf << ',' << q.certificate.stats.cells_visited << ','
                << q.certificate.stats.facets_solved << ',' << q.certificate.stats.facets_pruned
                << ',' << (q.certificate.stats.timed_out ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double gaussian_pair_kl(double alpha) {
    if (alpha < 0) throw std::invalid_argument("alpha must be >= 0");
    // Equal isotropic covariances: KL reduces to half the squared mean gap.
    return 2.0 * alpha * alpha;
}

ClosenessReport analytic_closeness(double alpha) {
    ClosenessReport report;
    report.alpha = alpha;
    const double kl = gaussian_pair_kl(alpha);
    report.per_class_min_kl = {kl, kl};
    report.closeness = kl;
    return report;
}

std::string to_json(const ClosenessReport& report) {
    json out{
        {"alpha", report.alpha},
        {"per_class_min_kl", report.per_class_min_kl},
        {"closeness", report.closeness},
        {"mode", "analytic_gaussian"},
    };
    return out.dump(2);
}

}  // namespace geoadex
