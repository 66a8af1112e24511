#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "geoadex/dataset.hpp"
#include "geoadex/knn.hpp"
#include "geoadex/types.hpp"

namespace geoadex {

/// Feasible side is {z : <a,z> <= b}. For a bisector between generators
/// (inside, outside): a = 2(x_out - x_in), b = |x_out|^2 - |x_in|^2, i.e. the
/// points at least as close to x_in as to x_out.
struct Halfspace {
    Vector a;
    double b = 0.0;
    std::int32_t inside = -1;
    std::int32_t outside = -1;

    /// Signed slack <a,z> - b; nonpositive on the feasible side.
    double eval(const Vector& z) const { return a.dot(z) - b; }
};

/// {z : <a,z> = b}
struct Hyperplane {
    Vector a;
    double b = 0.0;
};

struct ConstraintSet {
    std::vector<Halfspace> halfspaces;
    std::optional<Hyperplane> equality;

    std::size_t rows() const { return halfspaces.size() + (equality ? 1 : 0); }
};

struct FacetCandidate {
    CellKey cell;
    std::int32_t swap_out = -1;
    std::int32_t swap_in = -1;
    double dist = 0.0;
    bool is_adversarial = false;
};

using SwapPair = std::pair<std::int32_t, std::int32_t>;  // (swap_out, swap_in)

Halfspace bisector_halfspace(const Dataset& ds, std::int32_t inside, std::int32_t outside);

Hyperplane bisector_hyperplane(const Dataset& ds, std::int32_t g1, std::int32_t g2);

/// All k(n-k) halfspaces of an order-k cell, one per (inside, outside) pair.
ConstraintSet cell_constraints(const Dataset& ds, const CellKey& cell);

/// Halfspaces of `cell` restricted to the given swap pairs.
ConstraintSet constraints_from_pairs(const Dataset& ds, const CellKey& cell,
                                     const std::vector<SwapPair>& pairs);

/// Every (i in cell, j not in cell) pair, sorted by (swap_out, swap_in).
std::vector<SwapPair> candidate_bisectors_exact(const Dataset& ds, const CellKey& cell);

/// Pairs (i in cell, j in union of per-generator m-nearest non-cell sets),
/// deduplicated and sorted; at most k^2 m pairs. Saturates to the exact list
/// once m >= n-k.
std::vector<SwapPair> candidate_bisectors_approx(const Dataset& ds, const CellKey& cell,
                                                 std::int32_t m);

/// Order-1 Voronoi neighbors of generator i, decided by bisector activeness
/// testing against the order-1 cell of i. Small instances only.
std::set<std::int32_t> order1_neighbors_bruteforce(const Dataset& ds, std::int32_t i,
                                                   std::int64_t max_n = 400);

/// True when z satisfies every halfspace (and the equality, if any) within tol.
bool satisfies(const ConstraintSet& cs, const Vector& z, double tol = 0.0);

}  // namespace geoadex
