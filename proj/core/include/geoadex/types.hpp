#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace geoadex {

using Vector = Eigen::VectorXd;
// Points are stored one per row; row-major keeps row views contiguous.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Canonical identifier of an order-k Voronoi cell: the k generator indices,
/// sorted ascending.
using CellKey = std::vector<std::int32_t>;

/// Returns `cell` with `swap_out` replaced by `swap_in`, re-canonicalized.
CellKey neighbor_key(const CellKey& cell, std::int32_t swap_out, std::int32_t swap_in);

bool cell_contains(const CellKey& cell, std::int32_t idx);

struct CellKeyHash {
    std::size_t operator()(const CellKey& key) const noexcept {
        // FNV-1a over the index bytes.
        std::uint64_t h = 1469598103934665603ull;
        for (std::int32_t v : key) {
            for (int b = 0; b < 4; ++b) {
                h ^= static_cast<std::uint64_t>((static_cast<std::uint32_t>(v) >> (8 * b)) & 0xff);
                h *= 1099511628211ull;
            }
        }
        return static_cast<std::size_t>(h);
    }
};

}  // namespace geoadex
