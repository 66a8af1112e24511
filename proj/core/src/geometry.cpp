#include "geoadex/geometry.hpp"

#include <algorithm>
#include <stdexcept>

#include "geoadex/qp.hpp"

namespace geoadex {

Halfspace bisector_halfspace(const Dataset& ds, std::int32_t inside, std::int32_t outside) {
    if (inside == outside) throw std::invalid_argument("bisector needs distinct generators");
    const Vector xin = ds.point(inside);
    const Vector xout = ds.point(outside);
    Halfspace h;
    h.a = 2.0 * (xout - xin);
    h.b = xout.squaredNorm() - xin.squaredNorm();
    h.inside = inside;
    h.outside = outside;
    if (h.a.norm() == 0)
        throw std::invalid_argument("identical generators " + std::to_string(inside) + ", " +
                                    std::to_string(outside) + " (jitter the dataset)");
    return h;
}

Hyperplane bisector_hyperplane(const Dataset& ds, std::int32_t g1, std::int32_t g2) {
    const Halfspace h = bisector_halfspace(ds, g1, g2);
    return Hyperplane{h.a, h.b};
}

ConstraintSet cell_constraints(const Dataset& ds, const CellKey& cell) {
    ConstraintSet cs;
    cs.halfspaces.reserve(cell.size() * static_cast<std::size_t>(ds.size() - static_cast<std::int64_t>(cell.size())));
    for (std::int32_t in : cell)
        for (std::int64_t out = 0; out < ds.size(); ++out)
            if (!cell_contains(cell, static_cast<std::int32_t>(out)))
                cs.halfspaces.push_back(bisector_halfspace(ds, in, static_cast<std::int32_t>(out)));
    return cs;
}

ConstraintSet constraints_from_pairs(const Dataset& ds, const CellKey& cell,
                                     const std::vector<SwapPair>& pairs) {
    (void)cell;
    ConstraintSet cs;
    cs.halfspaces.reserve(pairs.size());
    for (const auto& [swap_out, swap_in] : pairs)
        cs.halfspaces.push_back(bisector_halfspace(ds, swap_out, swap_in));
    return cs;
}

std::vector<SwapPair> candidate_bisectors_exact(const Dataset& ds, const CellKey& cell) {
    std::vector<SwapPair> pairs;
    pairs.reserve(cell.size() * static_cast<std::size_t>(ds.size() - static_cast<std::int64_t>(cell.size())));
    for (std::int32_t swap_out : cell)
        for (std::int64_t j = 0; j < ds.size(); ++j)
            if (!cell_contains(cell, static_cast<std::int32_t>(j)))
                pairs.emplace_back(swap_out, static_cast<std::int32_t>(j));
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<SwapPair> candidate_bisectors_approx(const Dataset& ds, const CellKey& cell,
                                                 std::int32_t m) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    std::vector<std::int32_t> pool;
    for (std::int32_t in : cell) {
        auto nb = m_nearest_outside(ds, in, m, cell);
        pool.insert(pool.end(), nb.begin(), nb.end());
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    std::vector<SwapPair> pairs;
    pairs.reserve(cell.size() * pool.size());
    for (std::int32_t swap_out : cell)
        for (std::int32_t swap_in : pool) pairs.emplace_back(swap_out, swap_in);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::set<std::int32_t> order1_neighbors_bruteforce(const Dataset& ds, std::int32_t i,
                                                   std::int64_t max_n) {
    if (ds.size() > max_n)
        throw std::invalid_argument(
            "order-1 brute force is capped at n <= " + std::to_string(max_n) +
            "; use the approximate neighbor sets instead");
    const CellKey cell{i};
    const ConstraintSet base = cell_constraints(ds, cell);
    std::set<std::int32_t> neighbors;
    for (std::int64_t j = 0; j < ds.size(); ++j) {
        if (j == i) continue;
        ConstraintSet cs = base;
        const Halfspace h = bisector_halfspace(ds, i, static_cast<std::int32_t>(j));
        cs.equality = Hyperplane{h.a, h.b};
        // Project from the midpoint: it already sits on the bisector, which
        // keeps the activeness solve well conditioned.
        const Vector mid = 0.5 * (ds.point(i) + ds.point(static_cast<std::int32_t>(j)));
        const ProjectionResult r = gca_project(mid, cs);
        if (test_activeness(r, cs, mid)) neighbors.insert(static_cast<std::int32_t>(j));
    }
    return neighbors;
}

bool satisfies(const ConstraintSet& cs, const Vector& z, double tol) {
    for (const Halfspace& h : cs.halfspaces)
        if (h.eval(z) > tol) return false;
    if (cs.equality && std::abs(cs.equality->a.dot(z) - cs.equality->b) > tol) return false;
    return true;
}

}  // namespace geoadex
