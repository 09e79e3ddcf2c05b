#ifndef TREECUT_TESTS_HELPERS_HPP
#define TREECUT_TESTS_HELPERS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "treecut/cuts.hpp"
#include "treecut/instance.hpp"
#include "treecut/rng.hpp"
#include "treecut/simplex.hpp"
#include "treecut/state_graph.hpp"

namespace treecut::testing {

/// Random bounded LP: finite box, up to 6 vars and 6 rows. May be
/// infeasible; never unbounded.
inline LpProblem random_lp(Rng& rng) {
    LpProblem lp;
    int n = rng.uniform_int(1, 6);
    int m = rng.uniform_int(0, 6);
    lp.num_structural = n;
    lp.objective.resize(n);
    lp.lower.resize(n);
    lp.upper.resize(n);
    for (int j = 0; j < n; ++j) {
        lp.objective[j] = rng.uniform(-5.0, 5.0);
        lp.lower[j] = rng.uniform(-3.0, 0.0);
        lp.upper[j] = lp.lower[j] + rng.uniform(0.5, 4.0);
    }
    for (int i = 0; i < m; ++i) {
        SparseRow row;
        for (int j = 0; j < n; ++j) {
            if (rng.uniform() < 0.7) {
                double v = rng.uniform(-4.0, 4.0);
                if (std::fabs(v) > 1e-3) row.coefs.emplace_back(j, v);
            }
        }
        if (row.coefs.empty()) row.coefs.emplace_back(rng.uniform_int(0, n - 1), 1.0);
        row.rhs = rng.uniform(-3.0, 6.0);
        lp.add_row(std::move(row));
    }
    return lp;
}

namespace detail {

// Solves the square system M y = r by Gaussian elimination with partial
// pivoting; false when singular.
inline bool solve_square(std::vector<std::vector<double>> M, std::vector<double> r,
                         std::vector<double>& y) {
    int n = static_cast<int>(r.size());
    for (int k = 0; k < n; ++k) {
        int best = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(M[i][k]) > std::fabs(M[best][k])) best = i;
        if (std::fabs(M[best][k]) < 1e-10) return false;
        std::swap(M[k], M[best]);
        std::swap(r[k], r[best]);
        for (int i = k + 1; i < n; ++i) {
            double f = M[i][k] / M[k][k];
            if (f == 0.0) continue;
            for (int j = k; j < n; ++j) M[i][j] -= f * M[k][j];
            r[i] -= f * r[k];
        }
    }
    y.assign(n, 0.0);
    for (int k = n - 1; k >= 0; --k) {
        double s = r[k];
        for (int j = k + 1; j < n; ++j) s -= M[k][j] * y[j];
        y[k] = s / M[k][k];
    }
    return true;
}

} // namespace detail

/// Vertex-enumeration LP oracle for small box-bounded problems: tries every
/// choice of n active constraints among rows, lower and upper bounds, keeps
/// feasible intersection points, returns the best objective. nullopt means
/// infeasible.
inline std::optional<double> enumerate_lp_optimum(const LpProblem& lp, double tol = 1e-7) {
    int n = lp.num_structural;
    int m = lp.num_rows();
    // Constraint list as a'x = b candidates: rows, then x_j = lb_j, x_j = ub_j.
    std::vector<std::vector<double>> normals;
    std::vector<double> rhs;
    for (int i = 0; i < m; ++i) {
        std::vector<double> a(n, 0.0);
        for (const auto& [j, v] : lp.rows[i].coefs) a[j] += v;
        normals.push_back(std::move(a));
        rhs.push_back(lp.rows[i].rhs);
    }
    for (int j = 0; j < n; ++j) {
        std::vector<double> a(n, 0.0);
        a[j] = 1.0;
        normals.push_back(a);
        rhs.push_back(lp.lower[j]);
        normals.push_back(std::move(a));
        rhs.push_back(lp.upper[j]);
    }
    int total = static_cast<int>(normals.size());

    std::optional<double> best;
    std::vector<int> pick(n);
    auto feasible = [&](const std::vector<double>& x) {
        for (int j = 0; j < n; ++j)
            if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
        for (int i = 0; i < m; ++i) {
            double lhs = 0.0;
            for (const auto& [j, v] : lp.rows[i].coefs) lhs += v * x[j];
            if (lhs > lp.rows[i].rhs + tol) return false;
        }
        return true;
    };
    // Iterative combination enumeration over `total` choose n.
    std::vector<int> idx(n);
    for (int k = 0; k < n; ++k) idx[k] = k;
    if (total < n) return best;
    for (;;) {
        std::vector<std::vector<double>> M(n);
        std::vector<double> r(n);
        for (int k = 0; k < n; ++k) {
            M[k] = normals[idx[k]];
            r[k] = rhs[idx[k]];
        }
        std::vector<double> x;
        if (detail::solve_square(std::move(M), std::move(r), x) && feasible(x)) {
            double z = 0.0;
            for (int j = 0; j < n; ++j) z += lp.objective[j] * x[j];
            if (!best || z < *best) best = z;
        }
        int k = n - 1;
        while (k >= 0 && idx[k] == total - n + k) --k;
        if (k < 0) break;
        ++idx[k];
        for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return best;
}

/// Random pure-integer MIP with small finite bounds, enumerable exactly.
inline MipInstance random_mip(Rng& rng, int max_vars = 12) {
    MipInstance inst;
    inst.name = "random_mip";
    int n = rng.uniform_int(2, max_vars);
    int m = rng.uniform_int(1, 6);
    inst.num_vars = n;
    inst.num_cons = m;
    inst.objective.resize(n);
    inst.lower.assign(n, 0.0);
    inst.upper.resize(n);
    for (int j = 0; j < n; ++j) {
        inst.objective[j] = static_cast<double>(rng.uniform_int(-5, 5));
        inst.upper[j] = static_cast<double>(rng.uniform_int(1, 2));
        inst.integer_set.push_back(j);
    }
    for (int i = 0; i < m; ++i) {
        SparseRow row;
        double pos_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (rng.uniform() < 0.6) {
                double v = static_cast<double>(rng.uniform_int(-3, 3));
                if (v != 0.0) {
                    row.coefs.emplace_back(j, v);
                    if (v > 0.0) pos_sum += v * inst.upper[j];
                }
            }
        }
        if (row.coefs.empty()) row.coefs.emplace_back(rng.uniform_int(0, n - 1), 1.0);
        // rhs below the row maximum so the constraint usually binds, but
        // x = lb stays feasible often enough to avoid trivial infeasibility.
        row.rhs = std::floor(rng.uniform(0.0, std::max(1.0, pos_sum)));
        inst.rows.push_back(std::move(row));
    }
    inst.validate();
    return inst;
}

struct MipOracle {
    bool feasible = false;
    double objective = 0.0;
    std::vector<double> x;
};

/// Full lattice enumeration over the (finite, integer) box.
inline MipOracle enumerate_mip_optimum(const MipInstance& inst) {
    MipOracle out;
    int n = inst.num_vars;
    std::vector<int> x(n);
    for (int j = 0; j < n; ++j) x[j] = static_cast<int>(inst.lower[j]);
    for (;;) {
        bool ok = true;
        for (const auto& row : inst.rows) {
            double lhs = 0.0;
            for (const auto& [j, v] : row.coefs) lhs += v * x[j];
            if (lhs > row.rhs + 1e-9) {
                ok = false;
                break;
            }
        }
        if (ok) {
            double z = 0.0;
            for (int j = 0; j < n; ++j) z += inst.objective[j] * x[j];
            if (!out.feasible || z < out.objective) {
                out.feasible = true;
                out.objective = z;
                out.x.assign(x.begin(), x.end());
            }
        }
        int k = 0;
        while (k < n) {
            if (x[k] < static_cast<int>(inst.upper[k])) {
                ++x[k];
                break;
            }
            x[k] = static_cast<int>(inst.lower[k]);
            ++k;
        }
        if (k == n) break;
    }
    return out;
}

/// Enumerates every integer point and checks that no generated cut removes
/// a feasible one. Returns the number of violated (point, cut) pairs.
inline int count_cut_violations(const MipInstance& inst,
                                const std::vector<CutCandidate>& cuts, double tol = 1e-7) {
    int bad = 0;
    int n = inst.num_vars;
    std::vector<int> x(n);
    for (int j = 0; j < n; ++j) x[j] = static_cast<int>(inst.lower[j]);
    for (;;) {
        bool ok = true;
        for (const auto& row : inst.rows) {
            double lhs = 0.0;
            for (const auto& [j, v] : row.coefs) lhs += v * x[j];
            if (lhs > row.rhs + 1e-9) {
                ok = false;
                break;
            }
        }
        if (ok) {
            for (const auto& cut : cuts) {
                double lhs = 0.0;
                for (const auto& [j, v] : cut.coefs) lhs += v * x[j];
                if (lhs > cut.rhs + tol) ++bad;
            }
        }
        int k = 0;
        while (k < n) {
            if (x[k] < static_cast<int>(inst.upper[k])) {
                ++x[k];
                break;
            }
            x[k] = static_cast<int>(inst.lower[k]);
            ++k;
        }
        if (k == n) break;
    }
    return bad;
}

/// Small instance whose root LP is fractional, for graph and policy tests.
inline MipInstance fractional_fixture() {
    MipInstance inst;
    inst.name = "fixture";
    inst.num_vars = 3;
    inst.num_cons = 2;
    inst.objective = {-2.0, -3.0, -1.0};
    inst.lower = {0.0, 0.0, 0.0};
    inst.upper = {1.0, 1.0, 1.0};
    inst.integer_set = {0, 1, 2};
    inst.rows.push_back({{{0, 2.0}, {1, 3.0}, {2, 1.0}}, 4.0});
    inst.rows.push_back({{{0, 1.0}, {1, 1.0}}, 1.5});
    inst.num_cons = 2;
    inst.validate();
    return inst;
}

/// Root LP + one separation round on the fixture; yields a graph with
/// candidates for forward-pass tests.
struct GraphFixture {
    MipInstance inst;
    std::vector<CutCandidate> candidates;
    StateGraph graph;
    std::vector<double> x_lp;
};

inline GraphFixture make_graph_fixture(std::uint64_t seed = 0, int max_vars = 8) {
    Rng rng(seed);
    for (int attempt = 0; attempt < 64; ++attempt) {
        MipInstance inst = seed == 0 && attempt == 0 ? fractional_fixture()
                                                     : random_mip(rng, max_vars);
        LpProblem lp = LpProblem::from_instance(inst);
        LpSolver solver(lp);
        LpSolution sol = solver.solve();
        if (sol.status != LpStatus::Optimal) continue;
        auto cands = separate_gomory(solver, sol, inst, 8);
        if (cands.empty()) continue;
        GraphFixture fx{inst, cands, build_graph(inst, {}, cands, 0), sol.x};
        return fx;
    }
    throw std::runtime_error("make_graph_fixture: no fractional instance found");
}

} // namespace treecut::testing

#endif
