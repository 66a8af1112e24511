#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "geoadex/dataset.hpp"
#include "geoadex/knn.hpp"
#include "geoadex/qp.hpp"

namespace geoadex {

enum class SearchMode { exact, approx };
enum class InitStrategy { none, line_search };

struct AttackConfig {
    std::int32_t k = 3;
    SearchMode mode = SearchMode::approx;
    std::int32_t m = 20;  // approx only
    DistanceTarget distance_target = DistanceTarget::cell;
    std::optional<double> time_limit_s = 100.0;
    InitStrategy init = InitStrategy::line_search;
    std::int32_t init_candidates = 10;  // nearest wrong-class generators tried; 0 = all
    std::int32_t init_bisection_steps = 30;
    bool pruning = true;
    bool record_pops = true;
    QpOptions qp;
};

enum class CertificateStatus { optimal, bounded, upper_only, infeasible_query };

const char* to_string(CertificateStatus s);

struct SearchStats {
    std::int64_t cells_visited = 0;
    std::int64_t cells_processed = 0;
    std::int64_t facets_solved = 0;
    std::int64_t facets_pruned = 0;
    std::int64_t pq_pops = 0;
    double wall_time_s = 0.0;
    bool timed_out = false;
};

struct Certificate {
    CertificateStatus status = CertificateStatus::upper_only;
    double epsilon = std::numeric_limits<double>::infinity();
    double lower_bound = 0.0;
    Vector adv_point;          // verified misclassified witness when epsilon is finite
    SearchStats stats;
    std::vector<double> pop_trace;
};

/// Best upper bound from bisecting segments toward wrong-class generators.
/// Returns epsilon = inf when no candidate segment ends misclassified.
std::pair<double, Vector> init_epsilon_line_search(const Dataset& ds, const Query& q,
                                                   std::int32_t steps = 30,
                                                   std::int32_t candidates = 10);

/// Best-first search over the order-k Voronoi complex, expanding outward from
/// the query cell until the nearest adversarial cell is certified (exact
/// mode) or a budget expires.
Certificate geoadex(const Dataset& ds, const Query& q, const AttackConfig& cfg);

/// True when the recorded deleteMin distances are non-decreasing.
bool pop_monotone_check(const std::vector<double>& trace);

}  // namespace geoadex
