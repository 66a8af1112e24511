#include "geoadex/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "geoadex/geometry.hpp"

namespace geoadex {

const char* to_string(CertificateStatus s) {
    switch (s) {
        case CertificateStatus::optimal: return "optimal";
        case CertificateStatus::bounded: return "bounded";
        case CertificateStatus::upper_only: return "upper_only";
        case CertificateStatus::infeasible_query: return "infeasible_query";
    }
    return "?";
}

bool pop_monotone_check(const std::vector<double>& trace) {
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i] < trace[i - 1]) return false;
    return true;
}

std::pair<double, Vector> init_epsilon_line_search(const Dataset& ds, const Query& q,
                                                   std::int32_t steps, std::int32_t candidates) {
    std::vector<std::pair<double, std::int32_t>> wrong;
    for (std::int64_t g = 0; g < ds.size(); ++g)
        if (ds.labels[static_cast<std::size_t>(g)] != q.y)
            wrong.emplace_back((ds.points.row(g).transpose() - q.x).norm(),
                               static_cast<std::int32_t>(g));
    std::sort(wrong.begin(), wrong.end());
    if (candidates > 0 && static_cast<std::size_t>(candidates) < wrong.size())
        wrong.resize(static_cast<std::size_t>(candidates));

    double best = std::numeric_limits<double>::infinity();
    Vector best_point;
    for (const auto& [unused_dist, g] : wrong) {
        const Vector seg = ds.point(g) - q.x;
        if (classify(ds, q.x + seg, q.k) == q.y) continue;  // even the endpoint stays correct
        double lo = 0.0, hi = 1.0;
        for (std::int32_t s = 0; s < steps; ++s) {
            const double mid = 0.5 * (lo + hi);
            if (classify(ds, q.x + mid * seg, q.k) != q.y)
                hi = mid;
            else
                lo = mid;
        }
        // Push slightly past the crossing; fall back to the verified endpoint.
        Vector w = q.x + std::min(1.0, hi + 1e-9) * seg;
        if (classify(ds, w, q.k) == q.y) w = q.x + hi * seg;
        const double norm = (w - q.x).norm();
        if (norm < best) {
            best = norm;
            best_point = w;
        }
    }
    return {best, best_point};
}

namespace {

struct PQEntry {
    double dist;
    CellKey neighbor;
    SwapPair swap;

    bool operator>(const PQEntry& o) const {
        if (dist != o.dist) return dist > o.dist;
        if (neighbor != o.neighbor) return neighbor > o.neighbor;
        return swap > o.swap;
    }
};

struct CachedSolve {
    ProjectionStatus status;
    double dist;
    Vector z;
    bool full_constraints;
    bool active;
};

struct SearchState {
    const Dataset& ds;
    const Query& q;
    const AttackConfig& cfg;

    std::priority_queue<PQEntry, std::vector<PQEntry>, std::greater<PQEntry>> pq;
    std::unordered_set<CellKey, CellKeyHash> visited;
    std::unordered_map<CellKey, CachedSolve, CellKeyHash> cell_solves;  // cell-target only

    double eps = std::numeric_limits<double>::infinity();
    Vector adv_point;
    double last_pop = 0.0;
    bool popped_any = false;
    bool expired = false;

    Certificate cert;
    std::chrono::steady_clock::time_point deadline;
    bool has_deadline = false;

    bool time_up() {
        if (!has_deadline) return false;
        if (expired) return true;
        expired = std::chrono::steady_clock::now() >= deadline;
        return expired;
    }
};

ConstraintSet assemble(const Dataset& ds, const CellKey& cell, const SwapPair& swap,
                       DistanceTarget target, const CandidateSource& source) {
    if (target == DistanceTarget::facet) {
        ConstraintSet cs = constraints_from_pairs(ds, cell, source.pairs(ds, cell));
        cs.equality = bisector_hyperplane(ds, swap.first, swap.second);
        return cs;
    }
    const CellKey neighbor = neighbor_key(cell, swap.first, swap.second);
    return constraints_from_pairs(ds, neighbor, source.pairs(ds, neighbor));
}

/// Nudges a boundary point into the adversarial cell and verifies it
/// actually misclassifies. Returns the witness or nothing.
std::optional<Vector> verify_witness(const Dataset& ds, const Query& q, const Vector& z,
                                     const SwapPair& swap) {
    std::vector<Vector> dirs;
    Vector away = z - q.x;
    if (away.norm() > 1e-12) dirs.push_back(away.normalized());
    Vector across = ds.point(swap.second) - ds.point(swap.first);
    if (across.norm() > 1e-12) dirs.push_back(across.normalized());
    if (dirs.size() == 2) dirs.push_back((dirs[0] + dirs[1]).normalized());

    for (double t = 1e-9; t <= 1.1e-4; t *= 10.0) {
        for (const Vector& dir : dirs) {
            const Vector w = z + t * dir;
            if (classify(ds, w, q.k) != q.y) return w;
        }
    }
    return std::nullopt;
}

/// Enumerates the candidate facets of `cell`, updates eps on adversarial
/// neighbors, and queues survivors. Returns false when the time limit expired.
bool process_cell_impl(SearchState& st, const CellKey& cell) {
    const Dataset& ds = st.ds;
    const AttackConfig& cfg = st.cfg;
    ++st.cert.stats.cells_processed;

    const bool approx = cfg.mode == SearchMode::approx;
    const CandidateSource source{approx, cfg.m};
    const CandidateSource full_source{false, 0};

    const std::vector<SwapPair> pairs = source.pairs(ds, cell);
    for (const SwapPair& swap : pairs) {
        if (st.time_up()) return false;
        const CellKey neighbor = neighbor_key(cell, swap.first, swap.second);
        if (st.visited.count(neighbor)) continue;

        const bool is_adv = cell_is_adversarial(ds, neighbor, st.q.y);

        if (cfg.pruning && std::isfinite(st.eps)) {
            const Halfspace h = bisector_halfspace(ds, swap.first, swap.second);
            const double resid = h.eval(st.q.x);
            double bound = std::abs(resid) / h.a.norm();
            // For the cell target the bisector only bounds the neighbor's
            // distance from the near side.
            if (cfg.distance_target == DistanceTarget::cell && resid > 0) bound = 0.0;
            if (bound > st.eps) {
                ++st.cert.stats.facets_pruned;
                continue;
            }
        }

        const std::optional<double> cap =
            (cfg.pruning && std::isfinite(st.eps)) ? std::optional<double>(st.eps) : std::nullopt;
        // Adversarial facets are re-solved against the full bisector set in
        // approximate runs before any eps update.
        const bool want_full = approx && is_adv;
        const CandidateSource& use_source = want_full ? full_source : source;

        ProjectionStatus status;
        double dist;
        Vector z;
        bool active;

        CachedSolve* cached = nullptr;
        if (cfg.distance_target == DistanceTarget::cell) {
            auto it = st.cell_solves.find(neighbor);
            if (it != st.cell_solves.end() && (it->second.full_constraints || !want_full))
                cached = &it->second;
        }
        if (cached) {
            status = cached->status;
            dist = cached->dist;
            z = cached->z;
            active = cached->active;
        } else {
            const ConstraintSet cs = assemble(ds, cell, swap, cfg.distance_target, use_source);
            const ProjectionResult r = gca_project(st.q.x, cs, cap, cfg.qp);
            ++st.cert.stats.facets_solved;
            status = r.status;
            dist = r.dist;
            z = r.z;
            active = test_activeness(r, cs, st.q.x, cfg.qp);
            if (cfg.distance_target == DistanceTarget::cell && status != ProjectionStatus::pruned)
                st.cell_solves[neighbor] =
                    CachedSolve{status, dist, z, want_full || cfg.mode == SearchMode::exact, active};
        }

        if (status == ProjectionStatus::pruned) {
            ++st.cert.stats.facets_pruned;
            continue;
        }
        if (!active) continue;

        if (is_adv) {
            if (dist < st.eps) {
                if (auto witness = verify_witness(ds, st.q, z, swap)) {
                    st.eps = dist;
                    st.adv_point = *witness;
                }
            }
            continue;  // never queued: eps now covers this facet
        }
        if (dist < st.eps)
            st.pq.push(PQEntry{dist, neighbor, swap});
    }
    return !st.time_up();
}

Certificate finish(SearchState& st, CertificateStatus status) {
    Certificate& cert = st.cert;
    cert.status = status;
    cert.epsilon = st.eps;
    cert.adv_point = st.adv_point;
    cert.stats.timed_out = st.expired;
    if (status == CertificateStatus::optimal)
        cert.lower_bound = st.eps;
    else
        cert.lower_bound = st.popped_any ? st.last_pop : 0.0;
    cert.stats.cells_visited = static_cast<std::int64_t>(st.visited.size());
    return cert;
}

}  // namespace

Certificate geoadex(const Dataset& ds, const Query& q, const AttackConfig& cfg) {
    if (q.k < 1 || q.k > ds.size()) throw std::invalid_argument("k out of range");
    const auto t0 = std::chrono::steady_clock::now();

    SearchState st{ds, q, cfg};
    if (cfg.time_limit_s) {
        st.deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(*cfg.time_limit_s));
        st.has_deadline = true;
    }

    auto stamp = [&](Certificate cert) {
        cert.stats.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cert.pop_trace.shrink_to_fit();
        return cert;
    };

    if (classify(ds, q.x, q.k) != q.y) {
        st.eps = 0.0;
        st.adv_point = q.x;
        return stamp(finish(st, CertificateStatus::infeasible_query));
    }

    if (cfg.init == InitStrategy::line_search) {
        auto [eps0, point0] = init_epsilon_line_search(ds, q, cfg.init_bisection_steps,
                                                       cfg.init_candidates);
        if (std::isfinite(eps0)) {
            st.eps = eps0;
            st.adv_point = point0;
        }
    }

    const bool exact = cfg.mode == SearchMode::exact;
    const CertificateStatus done_status =
        exact ? CertificateStatus::optimal : CertificateStatus::upper_only;
    const CertificateStatus cut_status =
        exact ? CertificateStatus::bounded : CertificateStatus::upper_only;

    const CellKey cell0 = knn_indices(ds, q.x, q.k);
    st.visited.insert(cell0);
    if (!process_cell_impl(st, cell0)) return stamp(finish(st, cut_status));

    while (!st.pq.empty()) {
        if (st.time_up()) return stamp(finish(st, cut_status));
        const PQEntry e = st.pq.top();
        st.pq.pop();
        ++st.cert.stats.pq_pops;
        st.last_pop = e.dist;
        st.popped_any = true;
        if (cfg.record_pops) st.cert.pop_trace.push_back(e.dist);

        // Everything beyond the frontier is at least this far away.
        if (e.dist >= st.eps) return stamp(finish(st, done_status));
        if (st.visited.count(e.neighbor)) continue;

        if (cell_is_adversarial(ds, e.neighbor, q.y)) {
            // Unreachable under the insert policy (adversarial facets fold
            // into eps at discovery); kept as a safety net.
            st.eps = std::min(st.eps, e.dist);
            return stamp(finish(st, done_status));
        }

        st.visited.insert(e.neighbor);
        if (!process_cell_impl(st, e.neighbor)) return stamp(finish(st, cut_status));
    }
    return stamp(finish(st, done_status));
}

}  // namespace geoadex
