#pragma once

#include <cstdint>
#include <vector>

#include "geoadex/dataset.hpp"
#include "geoadex/types.hpp"

namespace geoadex {

struct Query {
    Vector x;
    std::int32_t y = 0;
    std::int32_t k = 1;
};

struct VoteResult {
    std::vector<std::int32_t> counts;  // one tally per class
    std::int32_t winner = 0;
};

/// The k generators nearest to x (Euclidean), distance ties broken by lower
/// index; result canonically sorted by index.
CellKey knn_indices(const Dataset& ds, const Vector& x, std::int32_t k);

/// Plurality vote over a cell's labels. Vote ties break toward the class with
/// the smallest summed distance to x when x is given, else the smallest index.
VoteResult vote(const Dataset& ds, const CellKey& cell, const Vector* x = nullptr);

std::int32_t classify(const Dataset& ds, const Vector& x, std::int32_t k);

bool cell_is_adversarial(const Dataset& ds, const CellKey& cell, std::int32_t y);

/// The m generators nearest to generator i (i itself excluded), then with
/// members of `exclude` removed. Exclusion applies after the m-selection.
std::vector<std::int32_t> m_nearest(const Dataset& ds, std::int32_t i, std::int32_t m,
                                    const CellKey& exclude = {});

/// The m nearest generators to i drawn from the pool outside `cell` (and i).
/// This is the neighbor-set approximation used to assemble candidate
/// bisectors; with m >= n-k it saturates to every non-cell generator.
std::vector<std::int32_t> m_nearest_outside(const Dataset& ds, std::int32_t i, std::int32_t m,
                                            const CellKey& cell);

}  // namespace geoadex
