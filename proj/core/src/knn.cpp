#include "geoadex/knn.hpp"

#include <algorithm>
#include <stdexcept>

namespace geoadex {

CellKey neighbor_key(const CellKey& cell, std::int32_t swap_out, std::int32_t swap_in) {
    CellKey out;
    out.reserve(cell.size());
    for (std::int32_t g : cell)
        if (g != swap_out) out.push_back(g);
    out.push_back(swap_in);
    std::sort(out.begin(), out.end());
    return out;
}

bool cell_contains(const CellKey& cell, std::int32_t idx) {
    return std::binary_search(cell.begin(), cell.end(), idx);
}

namespace {

/// Indices of the k smallest entries of dist2, ties by lower index.
std::vector<std::int32_t> select_k(std::vector<std::pair<double, std::int32_t>>& order,
                                   std::int32_t k) {
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end());
    std::vector<std::int32_t> out;
    out.reserve(static_cast<std::size_t>(k));
    std::sort(order.begin(), order.begin() + k);
    for (std::int32_t i = 0; i < k; ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
    return out;
}

}  // namespace

CellKey knn_indices(const Dataset& ds, const Vector& x, std::int32_t k) {
    if (k < 1 || k > ds.size()) throw std::invalid_argument("k out of range");
    std::vector<std::pair<double, std::int32_t>> order;
    order.reserve(static_cast<std::size_t>(ds.size()));
    for (std::int64_t i = 0; i < ds.size(); ++i)
        order.emplace_back((ds.points.row(i).transpose() - x).squaredNorm(),
                           static_cast<std::int32_t>(i));
    CellKey key = select_k(order, k);
    std::sort(key.begin(), key.end());
    return key;
}

VoteResult vote(const Dataset& ds, const CellKey& cell, const Vector* x) {
    VoteResult result;
    result.counts.assign(static_cast<std::size_t>(ds.num_classes), 0);
    for (std::int32_t g : cell) ++result.counts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(g)])];
    const std::int32_t top = *std::max_element(result.counts.begin(), result.counts.end());

    std::vector<std::int32_t> tied;
    for (std::int32_t c = 0; c < ds.num_classes; ++c)
        if (result.counts[static_cast<std::size_t>(c)] == top) tied.push_back(c);

    if (tied.size() == 1 || x == nullptr) {
        result.winner = tied.front();  // smallest class index among the tied
        return result;
    }
    // Tie with a query point in context: smallest summed distance from x to
    // the voting generators of each tied class.
    double best_sum = std::numeric_limits<double>::infinity();
    result.winner = tied.front();
    for (std::int32_t c : tied) {
        double sum = 0;
        for (std::int32_t g : cell)
            if (ds.labels[static_cast<std::size_t>(g)] == c)
                sum += (ds.points.row(g).transpose() - *x).norm();
        if (sum < best_sum) {
            best_sum = sum;
            result.winner = c;
        }
    }
    return result;
}

std::int32_t classify(const Dataset& ds, const Vector& x, std::int32_t k) {
    const CellKey cell = knn_indices(ds, x, k);
    return vote(ds, cell, &x).winner;
}

bool cell_is_adversarial(const Dataset& ds, const CellKey& cell, std::int32_t y) {
    return vote(ds, cell, nullptr).winner != y;
}

std::vector<std::int32_t> m_nearest(const Dataset& ds, std::int32_t i, std::int32_t m,
                                    const CellKey& exclude) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    std::vector<std::pair<double, std::int32_t>> order;
    order.reserve(static_cast<std::size_t>(ds.size()));
    for (std::int64_t j = 0; j < ds.size(); ++j) {
        if (j == i) continue;
        order.emplace_back((ds.points.row(j) - ds.points.row(i)).squaredNorm(),
                           static_cast<std::int32_t>(j));
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(m), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
    std::vector<std::int32_t> out;
    out.reserve(take);
    for (std::size_t t = 0; t < take; ++t) {
        const std::int32_t j = order[t].second;
        if (!cell_contains(exclude, j)) out.push_back(j);
    }
    return out;
}

std::vector<std::int32_t> m_nearest_outside(const Dataset& ds, std::int32_t i, std::int32_t m,
                                            const CellKey& cell) {
    if (m < 1) throw std::invalid_argument("m must be >= 1");
    std::vector<std::pair<double, std::int32_t>> order;
    order.reserve(static_cast<std::size_t>(ds.size()));
    for (std::int64_t j = 0; j < ds.size(); ++j) {
        if (j == i || cell_contains(cell, static_cast<std::int32_t>(j))) continue;
        order.emplace_back((ds.points.row(j) - ds.points.row(i)).squaredNorm(),
                           static_cast<std::int32_t>(j));
    }
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(m), order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end());
    std::vector<std::int32_t> out;
    out.reserve(take);
    for (std::size_t t = 0; t < take; ++t) out.push_back(order[t].second);
    return out;
}

}  // namespace geoadex
