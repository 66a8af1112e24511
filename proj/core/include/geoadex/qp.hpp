#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "geoadex/geometry.hpp"
#include "geoadex/types.hpp"

namespace geoadex {

enum class ProjectionStatus {
    feasible,
    infeasible,        // dual diverged: empty intersection
    budget_exhausted,  // iteration cap hit before convergence or divergence
    pruned,            // dual value crossed the eps cap: distance exceeds it
};

const char* to_string(ProjectionStatus s);

struct QpOptions {
    double step_tol = 1e-10;       // greedy projected-gradient step threshold
    double tol_feas = 1e-6;        // relative to (1 + |x| + |b_hat|)
    double tol_cs = 1e-6;
    double divergence_bound = 1e6; // raised to 100*eps_cap^2 when that is larger
    int divergence_window = 50;
    double divergence_min_rise = 0.1;
    std::int64_t max_iters = 0;    // 0: max(50 * #constraints, 200)
    bool record_objective = false;
};

/// Multipliers for the dual maximization; the last coordinate is the
/// unclamped equality multiplier when the constraint set carries one.
struct DualState {
    std::vector<double> lambda;
    std::vector<double> grad;   // equals the primal slack a_i.z - b_i at z(lambda)
    double objective = 0.0;
};

struct ProjectionResult {
    ProjectionStatus status = ProjectionStatus::infeasible;
    Vector z;
    double dist = std::numeric_limits<double>::infinity();
    double dual_value = 0.0;
    std::int64_t iterations = 0;
    DualState dual;
    std::vector<double> objective_trace;  // filled when record_objective

    bool feasible() const { return status == ProjectionStatus::feasible; }
};

/// Projects x onto {Az <= b} (optionally intersected with an equality
/// hyperplane) by greedy coordinate ascent on the dual
///   g(lambda) = -1/2 lambda^T A A^T lambda + lambda^T (Ax - b),  lambda >= 0,
/// recovering z = x - A^T lambda. Primal objective is 1/2 |z-x|^2, so the
/// dual optimum equals dist^2 / 2 and the eps cap triggers at 2 g > eps^2.
ProjectionResult gca_project(const Vector& x, const ConstraintSet& cs,
                             std::optional<double> eps_cap = std::nullopt,
                             const QpOptions& opts = {});

enum class DistanceTarget { facet, cell };

/// Source of candidate halfspaces when assembling a cell's constraints.
struct CandidateSource {
    bool approximate = false;
    std::int32_t m = 0;  // used when approximate

    std::vector<SwapPair> pairs(const Dataset& ds, const CellKey& cell) const;
};

/// Distance from x to the facet of `cell` across bisector `swap`
/// (target = facet: cell halfspaces plus the bisector equality), or to the
/// neighboring cell itself (target = cell: the neighbor's halfspaces).
ProjectionResult facet_distance(const Dataset& ds, const Vector& x, const CellKey& cell,
                                const SwapPair& swap, DistanceTarget target,
                                const CandidateSource& candidates,
                                std::optional<double> eps_cap = std::nullopt,
                                const QpOptions& opts = {});

/// Three checks on a finished solve: no divergence, primal residual within
/// tolerance, complementary slackness within tolerance.
bool test_activeness(const ProjectionResult& result, const ConstraintSet& cs, const Vector& x,
                     const QpOptions& opts = {});

double hyperplane_distance(const Vector& x, const Hyperplane& h);
double hyperplane_distance(const Vector& x, const Halfspace& h);

}  // namespace geoadex
