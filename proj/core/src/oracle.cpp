#include "geoadex/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Dense>

namespace geoadex {

namespace {

double binom(std::int64_t n, std::int64_t k) {
    double v = 1.0;
    for (std::int64_t i = 1; i <= k; ++i) v *= static_cast<double>(n - k + i) / static_cast<double>(i);
    return v;
}

bool next_combination(std::vector<std::int32_t>& c, std::int32_t n) {
    const auto k = static_cast<std::int32_t>(c.size());
    std::int32_t i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return false;
    ++c[static_cast<std::size_t>(i)];
    for (std::int32_t j = i + 1; j < k; ++j)
        c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
    return true;
}

// ---------------------------------------------------------------------------
// Phase-1 simplex: min sum of artificials for Az <= b (plus optional
// equality), Bland's rule throughout.
// ---------------------------------------------------------------------------

struct SimplexRow {
    const Vector* a;
    double b;
    bool equality;
};

class Phase1Simplex {
  public:
    explicit Phase1Simplex(const ConstraintSet& cs) {
        for (const Halfspace& h : cs.halfspaces) rows_.push_back({&h.a, h.b, false});
        if (cs.equality) rows_.push_back({&cs.equality->a, cs.equality->b, true});
        d_ = static_cast<std::int64_t>(rows_.front().a->size());
    }

    /// Minimum total artificial value; 0 iff the system is feasible.
    double solve() {
        const auto r_count = static_cast<std::int64_t>(rows_.size());
        std::int64_t n_slack = 0;
        for (const auto& r : rows_)
            if (!r.equality) ++n_slack;

        // Column layout: z+ (d), z- (d), slacks, artificials.
        const std::int64_t slack0 = 2 * d_;
        std::int64_t art0 = slack0 + n_slack;
        std::vector<std::int64_t> art_of_row(static_cast<std::size_t>(r_count), -1);
        std::int64_t n_art = 0;
        {
            std::int64_t si = 0;
            for (std::int64_t r = 0; r < r_count; ++r) {
                const auto& row = rows_[static_cast<std::size_t>(r)];
                const bool flip = row.b < 0;
                if (row.equality || flip) art_of_row[static_cast<std::size_t>(r)] = n_art++;
                if (!row.equality) ++si;
            }
        }
        const std::int64_t n_cols = art0 + n_art;

        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(r_count, n_cols + 1);
        std::vector<std::int64_t> basis(static_cast<std::size_t>(r_count), -1);
        std::vector<bool> is_art(static_cast<std::size_t>(n_cols), false);

        std::int64_t si = 0;
        for (std::int64_t r = 0; r < r_count; ++r) {
            const auto& row = rows_[static_cast<std::size_t>(r)];
            const double sign = row.b < 0 ? -1.0 : 1.0;
            for (std::int64_t j = 0; j < d_; ++j) {
                const double v = sign * (*row.a)[j];
                T(r, j) = v;
                T(r, d_ + j) = -v;
            }
            T(r, n_cols) = sign * row.b;
            if (!row.equality) {
                T(r, slack0 + si) = sign;
                if (sign > 0) basis[static_cast<std::size_t>(r)] = slack0 + si;
                ++si;
            }
            if (art_of_row[static_cast<std::size_t>(r)] >= 0) {
                const std::int64_t col = art0 + art_of_row[static_cast<std::size_t>(r)];
                T(r, col) = 1.0;
                basis[static_cast<std::size_t>(r)] = col;
                is_art[static_cast<std::size_t>(col)] = true;
            }
        }

        const double pivot_tol = 1e-11;
        const std::int64_t max_pivots = 2000 + 60 * (r_count + n_cols);
        std::vector<bool> in_basis(static_cast<std::size_t>(n_cols), false);
        for (auto bvar : basis) in_basis[static_cast<std::size_t>(bvar)] = true;

        for (std::int64_t pivots = 0; pivots < max_pivots; ++pivots) {
            // Reduced cost of column j for objective = sum of artificials.
            std::int64_t enter = -1;
            for (std::int64_t j = 0; j < n_cols; ++j) {
                if (in_basis[static_cast<std::size_t>(j)]) continue;
                double rc = is_art[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
                for (std::int64_t r = 0; r < r_count; ++r)
                    if (is_art[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])])
                        rc -= T(r, j);
                if (rc < -1e-9) {
                    enter = j;  // Bland: first improving column
                    break;
                }
            }
            if (enter < 0) break;

            std::int64_t leave = -1;
            double best_ratio = 0;
            for (std::int64_t r = 0; r < r_count; ++r) {
                if (T(r, enter) <= pivot_tol) continue;
                const double ratio = T(r, n_cols) / T(r, enter);
                if (leave < 0 || ratio < best_ratio - 1e-12 ||
                    (std::abs(ratio - best_ratio) <= 1e-12 &&
                     basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
                    leave = r;
                    best_ratio = ratio;
                }
            }
            if (leave < 0) break;  // cannot happen: objective bounded below by 0

            // Pivot on (leave, enter).
            T.row(leave) /= T(leave, enter);
            for (std::int64_t r = 0; r < r_count; ++r) {
                if (r == leave) continue;
                const double f = T(r, enter);
                if (f != 0.0) T.row(r) -= f * T.row(leave);
            }
            in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave)])] = false;
            in_basis[static_cast<std::size_t>(enter)] = true;
            basis[static_cast<std::size_t>(leave)] = enter;
        }

        double obj = 0.0;
        for (std::int64_t r = 0; r < r_count; ++r)
            if (is_art[static_cast<std::size_t>(basis[static_cast<std::size_t>(r)])])
                obj += T(r, n_cols);
        return obj;
    }

  private:
    std::vector<SimplexRow> rows_;
    std::int64_t d_ = 0;
};

/// Dykstra alternating projections; used only to order KKT candidate rows.
Vector dykstra_warm_start(const Vector& x, const ConstraintSet& cs, int sweeps) {
    const std::size_t m = cs.rows();
    std::vector<Vector> corrections(m, Vector::Zero(x.size()));
    Vector z = x;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const Vector y = z + corrections[i];
            const bool eq = cs.equality && i == m - 1;
            const Vector& a = eq ? cs.equality->a : cs.halfspaces[i].a;
            const double b = eq ? cs.equality->b : cs.halfspaces[i].b;
            const double resid = a.dot(y) - b;
            Vector znew = y;
            if (eq || resid > 0) znew -= (resid / a.squaredNorm()) * a;
            corrections[i] = y - znew;
            moved += (znew - z).norm();
            z = znew;
        }
        if (moved < 1e-13) break;
    }
    return z;
}

}  // namespace

bool polytope_feasible(const ConstraintSet& cs, double tol) {
    if (cs.rows() == 0) return true;
    double b_scale = 1.0;
    for (const Halfspace& h : cs.halfspaces) b_scale = std::max(b_scale, std::abs(h.b));
    if (cs.equality) b_scale = std::max(b_scale, std::abs(cs.equality->b));
    Phase1Simplex lp(cs);
    return lp.solve() <= tol * b_scale;
}

bool polytope_feasible_vertex_enum(const ConstraintSet& cs, double box_radius, double tol) {
    if (cs.rows() == 0) return true;
    const auto d = static_cast<std::int64_t>(
        cs.halfspaces.empty() ? cs.equality->a.size() : cs.halfspaces.front().a.size());
    if (d > 4) throw std::invalid_argument("vertex enumeration is a d <= 4 cross-check");

    // Hyperplane pool: halfspace boundaries plus the bounding box faces.
    std::vector<Vector> normals;
    std::vector<double> offsets;
    for (const Halfspace& h : cs.halfspaces) {
        normals.push_back(h.a);
        offsets.push_back(h.b);
    }
    for (std::int64_t j = 0; j < d; ++j) {
        Vector e = Vector::Zero(d);
        e[j] = 1.0;
        normals.push_back(e);
        offsets.push_back(box_radius);
        normals.push_back(-e);
        offsets.push_back(box_radius);
    }

    const auto pool = static_cast<std::int32_t>(normals.size());
    const std::int32_t pick = cs.equality ? static_cast<std::int32_t>(d) - 1
                                          : static_cast<std::int32_t>(d);
    if (pick < 0) return false;

    auto check_vertex = [&](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible()) return false;
        const Vector z = lu.solve(b);
        for (std::size_t i = 0; i < cs.halfspaces.size(); ++i)
            if (cs.halfspaces[i].eval(z) > tol) return false;
        if (cs.equality && std::abs(cs.equality->a.dot(z) - cs.equality->b) > tol) return false;
        for (std::int64_t j = 0; j < d; ++j)
            if (std::abs(z[j]) > box_radius + tol) return false;
        return true;
    };

    if (pick == 0) {
        // Equality row alone pins the vertex only when d == 1.
        Eigen::MatrixXd A(1, d);
        Eigen::VectorXd b(1);
        A.row(0) = cs.equality->a.transpose();
        b[0] = cs.equality->b;
        return d == 1 && check_vertex(A, b);
    }

    std::vector<std::int32_t> comb(static_cast<std::size_t>(pick));
    for (std::int32_t i = 0; i < pick; ++i) comb[static_cast<std::size_t>(i)] = i;
    do {
        Eigen::MatrixXd A(d, d);
        Eigen::VectorXd b(d);
        std::int64_t r = 0;
        if (cs.equality) {
            A.row(r) = cs.equality->a.transpose();
            b[r++] = cs.equality->b;
        }
        for (std::int32_t idx : comb) {
            A.row(r) = normals[static_cast<std::size_t>(idx)].transpose();
            b[r++] = offsets[static_cast<std::size_t>(idx)];
        }
        if (check_vertex(A, b)) return true;
    } while (next_combination(comb, pool));
    return false;
}

namespace {

ProjectionResult reference_project_impl(const Vector& x, const ConstraintSet& cs,
                                        bool skip_feasibility_gate) {
    if (cs.rows() == 0) throw std::invalid_argument("reference_project needs constraints");
    if (cs.rows() > 200)
        throw std::invalid_argument("reference_project is capped at 200 constraints");

    ProjectionResult result;
    if (!skip_feasibility_gate && !polytope_feasible(cs)) {
        result.status = ProjectionStatus::infeasible;
        return result;
    }

    const auto d = static_cast<std::int64_t>(x.size());
    const double b_hat = cs.equality ? std::abs(cs.equality->b) : 0.0;
    const double scale = 1.0 + x.norm() + b_hat;
    const double tol_feas = 1e-7 * scale;
    const double tol_dual = 1e-9 * scale;

    auto primal_feasible = [&](const Vector& z) {
        for (const Halfspace& h : cs.halfspaces)
            if (h.eval(z) > tol_feas) return false;
        if (cs.equality && std::abs(cs.equality->a.dot(z) - cs.equality->b) > tol_feas)
            return false;
        return true;
    };
    auto accept = [&](const Vector& z, std::int64_t iters) {
        result.status = ProjectionStatus::feasible;
        result.z = z;
        result.dist = (z - x).norm();
        result.dual_value = 0.5 * result.dist * result.dist;
        result.iterations = iters;
        return result;
    };

    if (!cs.equality && primal_feasible(x)) return accept(x, 0);

    // Order the inequality rows by how tight they are at an alternating-
    // projection estimate; the true active set then shows up early in the
    // subset enumeration.
    const Vector warm = dykstra_warm_start(x, cs, 200);
    const auto m = static_cast<std::int32_t>(cs.halfspaces.size());
    std::vector<std::pair<double, std::int32_t>> tightness;
    tightness.reserve(static_cast<std::size_t>(m));
    for (std::int32_t i = 0; i < m; ++i)
        tightness.emplace_back(std::abs(cs.halfspaces[static_cast<std::size_t>(i)].eval(warm)) /
                                   cs.halfspaces[static_cast<std::size_t>(i)].a.norm(),
                               i);
    std::sort(tightness.begin(), tightness.end());

    const std::int32_t smax = static_cast<std::int32_t>(std::min<std::int64_t>(d, m));
    std::int64_t attempts = 0;
    constexpr std::int64_t kAttemptBudget = 20'000'000;

    for (std::int32_t s = 0; s <= smax; ++s) {
        if (s == 0 && !cs.equality) continue;  // interior case already handled
        std::vector<std::int32_t> comb(static_cast<std::size_t>(s));
        for (std::int32_t i = 0; i < s; ++i) comb[static_cast<std::size_t>(i)] = i;
        bool more = s > 0 || !comb.empty() || true;
        // Iterate all s-subsets of the reordered rows (single pass when s==0).
        while (more) {
            if (++attempts > kAttemptBudget)
                throw std::runtime_error("reference_project enumeration budget exceeded");

            const std::int64_t rows = s + (cs.equality ? 1 : 0);
            Eigen::MatrixXd A(rows, d);
            Eigen::VectorXd rhs(rows);
            for (std::int32_t i = 0; i < s; ++i) {
                const auto& h =
                    cs.halfspaces[static_cast<std::size_t>(tightness[static_cast<std::size_t>(comb[static_cast<std::size_t>(i)])].second)];
                A.row(i) = h.a.transpose();
                rhs[i] = h.a.dot(x) - h.b;
            }
            if (cs.equality) {
                A.row(rows - 1) = cs.equality->a.transpose();
                rhs[rows - 1] = cs.equality->a.dot(x) - cs.equality->b;
            }

            if (rows > 0) {
                const Eigen::MatrixXd gram = A * A.transpose();
                Eigen::VectorXd mu;
                Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
                bool solved = false;
                if (ldlt.info() == Eigen::Success) {
                    mu = ldlt.solve(rhs);
                    solved = (gram * mu - rhs).norm() <= 1e-8 * scale;
                }
                if (!solved) {
                    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram);
                    mu = cod.solve(rhs);
                    solved = (gram * mu - rhs).norm() <= 1e-8 * scale;
                }
                if (solved) {
                    bool dual_ok = true;
                    for (std::int32_t i = 0; i < s && dual_ok; ++i)
                        if (mu[i] < -tol_dual) dual_ok = false;
                    if (dual_ok) {
                        const Vector z = x - A.transpose() * mu;
                        if (primal_feasible(z)) return accept(z, attempts);
                    }
                }
            }

            more = s > 0 && next_combination(comb, m);
            if (s == 0) break;
        }
    }

    // Feasible by the LP gate but no KKT certificate surfaced: report the
    // failure loudly instead of guessing.
    throw std::runtime_error("reference_project found no KKT-certified point");
}

}  // namespace

ProjectionResult reference_project(const Vector& x, const ConstraintSet& cs) {
    return reference_project_impl(x, cs, false);
}

OracleResult oracle_min_distance(const Dataset& ds, const Query& q, const OracleLimits& limits) {
    const auto n = static_cast<std::int32_t>(ds.size());
    const std::int32_t k = q.k;
    if (k < 1 || k > n) throw std::invalid_argument("k out of range");
    if (binom(n, k) > static_cast<double>(limits.max_cells))
        throw std::invalid_argument("C(n,k) exceeds the oracle cell cap");

    // Distance tables reused by the per-cell lower bound.
    std::vector<double> dq(static_cast<std::size_t>(n));
    for (std::int32_t i = 0; i < n; ++i)
        dq[static_cast<std::size_t>(i)] = (ds.points.row(i).transpose() - q.x).norm();
    Eigen::MatrixXd gen_dist(n, n);
    for (std::int32_t i = 0; i < n; ++i)
        for (std::int32_t j = 0; j < n; ++j)
            gen_dist(i, j) = (ds.points.row(i) - ds.points.row(j)).norm();

    OracleResult result;
    std::vector<std::pair<double, CellKey>> candidates;  // (lower bound, cell)

    std::vector<std::int32_t> comb(static_cast<std::size_t>(k));
    for (std::int32_t i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
    do {
        const CellKey cell(comb.begin(), comb.end());
        if (!cell_is_adversarial(ds, cell, q.y)) continue;
        ++result.adversarial_cell_count;
        double lb = 0.0;
        for (std::int32_t in : cell) {
            for (std::int32_t out = 0; out < n; ++out) {
                if (cell_contains(cell, out)) continue;
                const double din = dq[static_cast<std::size_t>(in)];
                const double dout = dq[static_cast<std::size_t>(out)];
                if (din > dout)
                    lb = std::max(lb, (din * din - dout * dout) / (2.0 * gen_dist(in, out)));
            }
        }
        candidates.emplace_back(lb, cell);
    } while (next_combination(comb, n));

    std::sort(candidates.begin(), candidates.end());
    for (const auto& [lb, cell] : candidates) {
        if (lb >= result.epsilon_star) break;  // every later cell is at least this far
        const ConstraintSet cs = cell_constraints(ds, cell);
        if (!polytope_feasible(cs)) continue;
        const ProjectionResult r = reference_project_impl(q.x, cs, true);
        if (r.status == ProjectionStatus::feasible && r.dist < result.epsilon_star) {
            result.epsilon_star = r.dist;
            result.argmin_cell = cell;
            result.best_point = r.z;
        }
    }

    if (limits.count_nonempty)
        result.nonempty_cell_count = count_nonempty_cells(ds, k, limits.max_cells);
    return result;
}

std::int64_t count_nonempty_cells(const Dataset& ds, std::int32_t k, std::int64_t max_cells) {
    const auto n = static_cast<std::int32_t>(ds.size());
    if (binom(n, k) > static_cast<double>(max_cells))
        throw std::invalid_argument("C(n,k) exceeds the oracle cell cap");
    std::int64_t count = 0;
    std::vector<std::int32_t> comb(static_cast<std::size_t>(k));
    for (std::int32_t i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
    do {
        const CellKey cell(comb.begin(), comb.end());
        if (polytope_feasible(cell_constraints(ds, cell))) ++count;
    } while (next_combination(comb, n));
    return count;
}

std::vector<std::pair<CellKey, CellKey>> neighbor_pairs_bruteforce(const Dataset& ds,
                                                                   std::int32_t k,
                                                                   std::int64_t max_cells) {
    const auto n = static_cast<std::int32_t>(ds.size());
    if (binom(n, k) > static_cast<double>(max_cells))
        throw std::invalid_argument("C(n,k) exceeds the oracle cell cap");

    std::vector<CellKey> nonempty;
    std::unordered_set<CellKey, CellKeyHash> nonempty_set;
    std::vector<std::int32_t> comb(static_cast<std::size_t>(k));
    for (std::int32_t i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
    do {
        const CellKey cell(comb.begin(), comb.end());
        if (polytope_feasible(cell_constraints(ds, cell))) {
            nonempty.push_back(cell);
            nonempty_set.insert(cell);
        }
    } while (next_combination(comb, n));

    std::vector<std::pair<CellKey, CellKey>> pairs;
    for (const CellKey& cell : nonempty) {
        for (std::int32_t swap_out : cell) {
            for (std::int32_t swap_in = 0; swap_in < n; ++swap_in) {
                if (cell_contains(cell, swap_in)) continue;
                const CellKey other = neighbor_key(cell, swap_out, swap_in);
                if (!(cell < other) || !nonempty_set.count(other)) continue;
                ConstraintSet cs = cell_constraints(ds, cell);
                cs.equality = bisector_hyperplane(ds, swap_out, swap_in);
                if (polytope_feasible(cs)) pairs.emplace_back(cell, other);
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

}  // namespace geoadex
