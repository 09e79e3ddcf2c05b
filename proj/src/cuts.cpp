#include "treecut/cuts.hpp"

#include <algorithm>
#include <cmath>

#include "treecut/errors.hpp"

namespace treecut {

namespace {

bool near_integer(double v, double tol = 1e-9) { return std::fabs(v - std::round(v)) <= tol; }

/// A slack takes integer values at integer-feasible points iff its row has
/// integral data and an all-integer support.
bool row_is_integral(const SparseRow& row, const MipInstance& inst) {
    if (!near_integer(row.rhs)) return false;
    for (const auto& [j, v] : row.coefs) {
        if (!near_integer(v)) return false;
        if (!inst.is_integer(j)) return false;
    }
    return true;
}

} // namespace

double cut_activity(const CutCandidate& cut, const std::vector<double>& x) {
    double act = 0.0;
    for (const auto& [j, v] : cut.coefs) act += v * x[j];
    return act;
}

CutFeatures compute_features(const CutCandidate& cut, const std::vector<double>& x_lp,
                             const MipInstance& inst) {
    CutFeatures f;
    double norm = 0.0;
    for (const auto& [j, v] : cut.coefs) norm += v * v;
    norm = std::sqrt(norm);
    if (norm <= 0.0) return f;

    double viol = cut_activity(cut, x_lp) - cut.rhs;
    f.efficacy = viol / norm;

    double cdot = 0.0, cnorm = 0.0;
    for (double c : inst.objective) cnorm += c * c;
    cnorm = std::sqrt(cnorm);
    for (const auto& [j, v] : cut.coefs) cdot += inst.objective[j] * v;
    f.parallelism = cnorm > 0.0 ? std::fabs(cdot) / (cnorm * norm) : 0.0;

    int nnz = static_cast<int>(cut.coefs.size());
    f.support = inst.num_vars > 0 ? static_cast<double>(nnz) / inst.num_vars : 0.0;
    int int_nnz = 0;
    for (const auto& [j, v] : cut.coefs)
        if (inst.is_integer(j)) ++int_nnz;
    f.integral_support = nnz > 0 ? static_cast<double>(int_nnz) / nnz : 0.0;

    // Denominator floored at 1 so near-zero rhs cannot blow the feature up;
    // cuts are unit-norm, which keeps the violation itself O(1).
    f.normalized_violation = std::max(0.0, viol / std::max(std::fabs(cut.rhs), 1.0));
    return f;
}

double directed_cutoff(const CutCandidate& cut, const std::vector<double>& x_lp,
                       const std::optional<std::vector<double>>& incumbent) {
    if (!incumbent) return 0.0;
    double dist = 0.0;
    std::vector<double> dir(x_lp.size());
    for (std::size_t j = 0; j < x_lp.size(); ++j) {
        dir[j] = (*incumbent)[j] - x_lp[j];
        dist += dir[j] * dir[j];
    }
    dist = std::sqrt(dist);
    if (dist <= 1e-12) return 0.0;
    double ad = 0.0;
    for (const auto& [j, v] : cut.coefs) ad += v * dir[j] / dist;
    // Activity must decrease along the ray for it to reach the hyperplane.
    if (ad >= -1e-9) return 0.0;
    double viol = cut_activity(cut, x_lp) - cut.rhs;
    return viol / std::max(-ad, 1e-9);
}

std::vector<CutCandidate> separate_gomory(const LpSolver& solver, const LpSolution& solution,
                                          const MipInstance& inst, int max_cuts,
                                          int node_id, int round_index) {
    std::vector<CutCandidate> out;
    if (solution.status != LpStatus::Optimal) throw SolveError("separate_gomory: LP not optimal");
    const LpProblem& prob = solver.problem();
    const int n = prob.num_structural;

    // Source rows: basic integer structural variables, most fractional first.
    struct Source {
        int var;
        double frac;
    };
    std::vector<Source> sources;
    for (int j : inst.integer_set) {
        if (solver.col_status(j) != ColStatus::Basic) continue;
        double v = solver.col_value(j);
        double f = v - std::floor(v);
        double dist = std::min(f, 1.0 - f);
        if (dist > kTolIntegrality) sources.push_back({j, dist});
    }
    std::sort(sources.begin(), sources.end(), [](const Source& a, const Source& b) {
        if (a.frac != b.frac) return a.frac > b.frac;
        return a.var < b.var;
    });

    std::vector<char> row_integral(prob.rows.size());
    for (std::size_t k = 0; k < prob.rows.size(); ++k)
        row_integral[k] = row_is_integral(prob.rows[k], inst);

    for (const Source& src : sources) {
        if (static_cast<int>(out.size()) >= max_cuts) break;
        auto row = solver.tableau_row(src.var);
        double d0 = solver.col_value(src.var);
        double f0 = d0 - std::floor(d0);
        if (f0 <= kTolIntegrality || f0 >= 1.0 - kTolIntegrality) continue;

        // Mixed-integer Gomory cut in the shifted space t_j >= 0 where
        // nonbasics sit at their active bound: sum_j g_j t_j >= f0.
        std::vector<double> coef(n + prob.num_rows(), 0.0);  // over x (structural + slacks)
        double rhs = f0;
        bool ok = true;
        for (std::size_t idx = 0; idx < row.nonbasic.size(); ++idx) {
            int j = row.nonbasic[idx];
            double a = row.coef[idx];
            if (std::fabs(a) < 1e-11) continue;
            bool at_lower = solver.col_status(j) == ColStatus::AtLower;
            double bound = at_lower ? solver.col_lower(j) : solver.col_upper(j);
            if (!std::isfinite(bound)) {
                ok = false;  // free column; cannot shift
                break;
            }
            double abar = at_lower ? a : -a;
            bool integral;
            if (j < n) {
                integral = inst.is_integer(j) && near_integer(bound);
            } else {
                integral = row_integral[j - n] != 0;  // slack lb 0 / no finite ub reached
            }
            double g;
            if (integral) {
                double fj = abar - std::floor(abar);
                g = (fj <= f0 + 1e-9) ? fj : f0 * (1.0 - fj) / (1.0 - f0);
            } else {
                g = (abar >= 0.0) ? abar : f0 * (-abar) / (1.0 - f0);
            }
            if (g == 0.0) continue;
            // Substitute t back: t = x - lb or t = ub - x.
            if (at_lower) {
                coef[j] += g;
                rhs += g * bound;
            } else {
                coef[j] -= g;
                rhs -= g * bound;
            }
        }
        if (!ok) continue;

        // Substitute slacks out: s_k = b_k - a_k' x.
        std::vector<double> w(n, 0.0);
        double q = rhs;
        for (int j = 0; j < n; ++j) w[j] = coef[j];
        for (int k = 0; k < prob.num_rows(); ++k) {
            double p = coef[n + k];
            if (p == 0.0) continue;
            q -= p * prob.rows[k].rhs;
            for (const auto& [r, v] : prob.rows[k].coefs) w[r] -= p * v;
        }

        // w'x >= q  ->  (-w)'x <= -q, normalized to a unit normal.
        double norm = 0.0;
        for (double v : w) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-9) continue;

        CutCandidate cut;
        for (int j = 0; j < n; ++j) {
            double v = -w[j] / norm;
            if (std::fabs(v) > 1e-12) cut.coefs.emplace_back(j, v);
        }
        if (cut.coefs.empty()) continue;
        cut.rhs = -q / norm;
        cut.origin = {node_id, round_index, "gomory"};

        double viol = cut_activity(cut, solution.x) - cut.rhs;
        if (viol < 1e-7) continue;
        cut.features = compute_features(cut, solution.x, inst);
        out.push_back(std::move(cut));
    }
    return out;
}

} // namespace treecut
