#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "geoadex/dataset.hpp"
#include "geoadex/search.hpp"

namespace geoadex {

inline constexpr int kReportSchemaVersion = 1;

struct QueryRecord {
    std::int64_t query_index = 0;  // position within the test set
    std::int32_t true_label = 0;
    Certificate certificate;
    bool pops_monotone = true;
};

struct RunRecord {
    std::uint64_t seed = 0;
    std::vector<QueryRecord> queries;
    double wall_time_s = 0.0;
    NormalizationParams normalization;  // fitted on this run's generators

    /// Mean epsilon over finite certificates, infeasible queries excluded.
    double mean_epsilon() const;
    double mean_lower_bound() const;
    std::int64_t timeout_count() const;
};

struct Aggregate {
    double mean_epsilon = 0.0;
    double ci95 = 0.0;  // NaN for a single run
    double mean_lower_bound = 0.0;
    std::int64_t timeout_count = 0;
    double total_wall_time_s = 0.0;
    std::vector<double> per_run_means;
};

struct RunReport {
    std::string dataset_path;
    std::string dataset_fingerprint;
    std::int64_t n = 0, d = 0, c = 0;
    bool normalized = true;
    std::string config_echo_json;  // CLI flag echo, opaque JSON text
    std::vector<RunRecord> runs;

    Aggregate aggregate() const;
};

std::string to_json(const RunReport& report);
RunReport run_report_from_json(const std::string& text);

/// Per-query rows; lossy convenience export.
std::string to_csv(const RunReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// -- class closeness -------------------------------------------------------

/// KL divergence between the two isotropic unit-variance Gaussians whose
/// means differ by 2*alpha along the first coordinate.
double gaussian_pair_kl(double alpha);

struct ClosenessReport {
    double alpha = 0.0;
    std::vector<double> per_class_min_kl;
    double closeness = 0.0;  // mean of the per-class minima
};

ClosenessReport analytic_closeness(double alpha);

std::string to_json(const ClosenessReport& report);

}  // namespace geoadex
