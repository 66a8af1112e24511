#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "geoadex/geometry.hpp"
#include "geoadex/knn.hpp"
#include "geoadex/qp.hpp"

namespace geoadex {

/// Ground truth by exhaustive enumeration over all C(n,k) cells. Exists to
/// validate the search at small scale, not to attack.
struct OracleLimits {
    std::int64_t max_cells = 100000;
    bool count_nonempty = false;  // feasibility-test every cell, not just adversarial ones
};

struct OracleResult {
    double epsilon_star = std::numeric_limits<double>::infinity();
    CellKey argmin_cell;
    std::int64_t nonempty_cell_count = -1;  // -1 when not requested
    std::int64_t adversarial_cell_count = 0;
    Vector best_point;

    bool attained() const { return std::isfinite(epsilon_star); }
};

OracleResult oracle_min_distance(const Dataset& ds, const Query& q, const OracleLimits& limits = {});

/// Exact projection by enumerating candidate active subsets (size <= d, plus
/// the equality row) in increasing size, solving each KKT system, and
/// returning the first KKT-certified point. Feasibility is decided first by a
/// phase-1 simplex so that empty sets short-circuit.
ProjectionResult reference_project(const Vector& x, const ConstraintSet& cs);

/// Phase-1 simplex feasibility of {Az <= b [, <a_hat,z> = b_hat]}.
bool polytope_feasible(const ConstraintSet& cs, double tol = 1e-9);

/// Feasibility by vertex enumeration inside a large bounding box; exact for
/// sets that meet the box. Cross-check for d <= 3 tests.
bool polytope_feasible_vertex_enum(const ConstraintSet& cs, double box_radius = 1e4,
                                   double tol = 1e-7);

/// All unordered pairs of nonempty order-k cells that differ by one generator
/// and share a nonempty facet.
std::vector<std::pair<CellKey, CellKey>> neighbor_pairs_bruteforce(const Dataset& ds,
                                                                   std::int32_t k,
                                                                   std::int64_t max_cells = 100000);

/// Number of nonempty order-k cells (feasibility-tested one by one).
std::int64_t count_nonempty_cells(const Dataset& ds, std::int32_t k,
                                  std::int64_t max_cells = 100000);

}  // namespace geoadex
