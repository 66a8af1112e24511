#include "geoadex/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace geoadex {

const char* to_string(ProjectionStatus s) {
    switch (s) {
        case ProjectionStatus::feasible: return "feasible";
        case ProjectionStatus::infeasible: return "infeasible";
        case ProjectionStatus::budget_exhausted: return "budget_exhausted";
        case ProjectionStatus::pruned: return "pruned";
    }
    return "?";
}

namespace {

/// Dense row view of the constraint system: halfspaces first, the equality
/// row (unclamped multiplier) last.
struct Rows {
    std::vector<const Vector*> a;
    std::vector<double> b;
    std::size_t eq_index = SIZE_MAX;  // SIZE_MAX: no equality row

    std::size_t size() const { return a.size(); }
    bool is_equality(std::size_t i) const { return i == eq_index; }
};

Rows make_rows(const ConstraintSet& cs) {
    Rows rows;
    rows.a.reserve(cs.rows());
    rows.b.reserve(cs.rows());
    for (const Halfspace& h : cs.halfspaces) {
        rows.a.push_back(&h.a);
        rows.b.push_back(h.b);
    }
    if (cs.equality) {
        rows.eq_index = rows.a.size();
        rows.a.push_back(&cs.equality->a);
        rows.b.push_back(cs.equality->b);
    }
    return rows;
}

/// Gram rows a_i . a_j, computed on first touch and memoized per solve.
class LazyGram {
  public:
    explicit LazyGram(const Rows& rows) : rows_(rows), cache_(rows.size()) {}

    const Eigen::VectorXd& row(std::size_t j) {
        if (cache_[j].size() == 0) {
            Eigen::VectorXd g(static_cast<Eigen::Index>(rows_.size()));
            for (std::size_t i = 0; i < rows_.size(); ++i) g[static_cast<Eigen::Index>(i)] = rows_.a[i]->dot(*rows_.a[j]);
            cache_[j] = std::move(g);
        }
        return cache_[j];
    }

  private:
    const Rows& rows_;
    std::vector<Eigen::VectorXd> cache_;
};

}  // namespace

ProjectionResult gca_project(const Vector& x, const ConstraintSet& cs,
                             std::optional<double> eps_cap, const QpOptions& opts) {
    if (cs.rows() == 0) throw std::invalid_argument("gca_project needs a nonempty constraint set");
    const Rows rows = make_rows(cs);
    const auto m = rows.size();

    std::vector<double> norm_sq(m);
    for (std::size_t i = 0; i < m; ++i) {
        norm_sq[i] = rows.a[i]->squaredNorm();
        if (norm_sq[i] <= 0) throw std::invalid_argument("constraint row with zero normal");
    }

    // grad_i = a_i.(x - A^T lambda) - b_i: starts at the slack of x and is
    // maintained incrementally as single coordinates of lambda move.
    std::vector<double> grad(m);
    for (std::size_t i = 0; i < m; ++i) grad[i] = rows.a[i]->dot(x) - rows.b[i];
    std::vector<double> lambda(m, 0.0);
    double g = 0.0;

    LazyGram gram(rows);

    double cap_sq = std::numeric_limits<double>::infinity();
    double divergence_bound = opts.divergence_bound;
    if (eps_cap) {
        cap_sq = (*eps_cap) * (*eps_cap);
        if (std::isfinite(cap_sq)) divergence_bound = std::max(divergence_bound, 100.0 * cap_sq);
    }

    const std::int64_t max_iters =
        opts.max_iters > 0 ? opts.max_iters
                           : std::max<std::int64_t>(50 * static_cast<std::int64_t>(m), 200);

    ProjectionResult result;
    result.objective_trace.clear();

    // Rate-based divergence: three consecutive non-decaying window rises.
    double window_start_g = 0.0;
    double rise[3] = {0, 0, 0};
    int windows_seen = 0;

    auto finish = [&](ProjectionStatus status, std::int64_t iters) {
        result.status = status;
        result.iterations = iters;
        result.dual_value = g;
        result.dual.lambda = lambda;
        result.dual.grad = grad;
        result.dual.objective = g;
        Vector z = x;
        for (std::size_t i = 0; i < m; ++i)
            if (lambda[i] != 0.0) z -= lambda[i] * (*rows.a[i]);
        result.z = std::move(z);
        result.dist = (result.z - x).norm();
        return result;
    };

    std::int64_t it = 0;
    for (; it < max_iters; ++it) {
        // Greedy pick: the coordinate with the largest projected-gradient step.
        std::size_t j = 0;
        double best_step = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = rows.is_equality(i)
                                 ? std::abs(grad[i])
                                 : std::abs(std::max(lambda[i] + grad[i], 0.0) - lambda[i]);
            if (s > best_step) {
                best_step = s;
                j = i;
            }
        }
        if (best_step <= opts.step_tol) return finish(ProjectionStatus::feasible, it);

        double next = lambda[j] + grad[j] / norm_sq[j];
        if (!rows.is_equality(j)) next = std::max(next, 0.0);
        const double delta = next - lambda[j];
        if (delta == 0.0) return finish(ProjectionStatus::feasible, it);

        g += grad[j] * delta - 0.5 * norm_sq[j] * delta * delta;
        lambda[j] = next;
        const Eigen::VectorXd& gj = gram.row(j);
        for (std::size_t i = 0; i < m; ++i) grad[i] -= gj[static_cast<Eigen::Index>(i)] * delta;

        if (opts.record_objective) result.objective_trace.push_back(g);

        if (2.0 * g > cap_sq) return finish(ProjectionStatus::pruned, it + 1);
        if (g > divergence_bound) return finish(ProjectionStatus::infeasible, it + 1);

        if (opts.divergence_window > 0 && (it + 1) % opts.divergence_window == 0) {
            const double r = g - window_start_g;
            window_start_g = g;
            rise[0] = rise[1];
            rise[1] = rise[2];
            rise[2] = r;
            ++windows_seen;
            if (windows_seen >= 3 && rise[0] >= opts.divergence_min_rise &&
                rise[1] >= opts.divergence_min_rise && rise[2] >= opts.divergence_min_rise &&
                rise[2] >= 0.8 * rise[0])
                return finish(ProjectionStatus::infeasible, it + 1);
        }

        // Periodic exact refresh against incremental drift.
        if ((it + 1) % 1024 == 0) {
            for (std::size_t i = 0; i < m; ++i) grad[i] = rows.a[i]->dot(x) - rows.b[i];
            for (std::size_t jj = 0; jj < m; ++jj) {
                if (lambda[jj] == 0.0) continue;
                const Eigen::VectorXd& gr = gram.row(jj);
                for (std::size_t i = 0; i < m; ++i) grad[i] -= gr[static_cast<Eigen::Index>(i)] * lambda[jj];
            }
        }
    }
    return finish(ProjectionStatus::budget_exhausted, it);
}

std::vector<SwapPair> CandidateSource::pairs(const Dataset& ds, const CellKey& cell) const {
    return approximate ? candidate_bisectors_approx(ds, cell, m)
                       : candidate_bisectors_exact(ds, cell);
}

ProjectionResult facet_distance(const Dataset& ds, const Vector& x, const CellKey& cell,
                                const SwapPair& swap, DistanceTarget target,
                                const CandidateSource& candidates,
                                std::optional<double> eps_cap, const QpOptions& opts) {
    ConstraintSet cs;
    if (target == DistanceTarget::facet) {
        cs = constraints_from_pairs(ds, cell, candidates.pairs(ds, cell));
        cs.equality = bisector_hyperplane(ds, swap.first, swap.second);
    } else {
        const CellKey neighbor = neighbor_key(cell, swap.first, swap.second);
        cs = constraints_from_pairs(ds, neighbor, candidates.pairs(ds, neighbor));
    }
    return gca_project(x, cs, eps_cap, opts);
}

bool test_activeness(const ProjectionResult& result, const ConstraintSet& cs, const Vector& x,
                     const QpOptions& opts) {
    if (result.status != ProjectionStatus::feasible) return false;

    const double b_hat = cs.equality ? std::abs(cs.equality->b) : 0.0;
    const double scale = 1.0 + x.norm() + b_hat;
    const double tol_feas = opts.tol_feas * scale;
    const double tol_cs = opts.tol_cs * scale;

    // Recompute residuals from z rather than trusting the incremental grad.
    const std::size_t n_ineq = cs.halfspaces.size();
    for (std::size_t i = 0; i < n_ineq; ++i) {
        const double resid = cs.halfspaces[i].eval(result.z);
        if (resid > tol_feas) return false;
        if (i < result.dual.lambda.size() && std::abs(result.dual.lambda[i] * resid) > tol_cs)
            return false;
    }
    if (cs.equality) {
        const double resid = cs.equality->a.dot(result.z) - cs.equality->b;
        if (std::abs(resid) > tol_feas) return false;
    }
    return true;
}

double hyperplane_distance(const Vector& x, const Hyperplane& h) {
    return std::abs(h.a.dot(x) - h.b) / h.a.norm();
}

double hyperplane_distance(const Vector& x, const Halfspace& h) {
    return std::abs(h.eval(x)) / h.a.norm();
}

}  // namespace geoadex
