#include "treecut/simplex.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "treecut/errors.hpp"

namespace treecut {

LpProblem LpProblem::from_instance(const MipInstance& inst) {
    LpProblem p;
    p.num_structural = inst.num_vars;
    p.objective = inst.objective;
    p.rows = inst.rows;
    p.lower = inst.lower;
    p.upper = inst.upper;
    return p;
}

LpSolver::LpSolver(const LpProblem& problem, const SimplexOptions& opts)
    : prob_(problem), opts_(opts) {
    n_ = prob_.num_structural;
    m_ = prob_.num_rows();
    nreal_ = n_ + m_;
}

void LpSolver::build_tableau() {
    ncols_ = nreal_;
    tab_.assign(m_, std::vector<double>(ncols_, 0.0));
    rhs_.resize(m_);
    for (int i = 0; i < m_; ++i) {
        for (const auto& [j, v] : prob_.rows[i].coefs) tab_[i][j] = v;
        tab_[i][n_ + i] = 1.0;  // slack
        rhs_[i] = prob_.rows[i].rhs;
    }
    lb_.assign(ncols_, 0.0);
    ub_.assign(ncols_, kInf);
    for (int j = 0; j < n_; ++j) {
        lb_[j] = prob_.lower[j];
        ub_[j] = prob_.upper[j];
    }
    basic_.resize(m_);
    for (int i = 0; i < m_; ++i) basic_[i] = n_ + i;
    status_.assign(ncols_, ColStatus::AtLower);
    for (int i = 0; i < m_; ++i) status_[n_ + i] = ColStatus::Basic;
    xval_.assign(ncols_, 0.0);
    pivots_ = 0;
    degenerate_run_ = 0;
}

bool LpSolver::install_basis(const std::vector<int>& basis) {
    if (static_cast<int>(basis.size()) != m_) return false;
    std::vector<char> seen(nreal_, 0);
    for (int j : basis) {
        if (j < 0 || j >= nreal_ || seen[j]) return false;
        seen[j] = 1;
    }
    // Gauss-Jordan: bring the requested basis columns to identity.
    for (int k = 0; k < m_; ++k) {
        int col = basis[k];
        int best = -1;
        double best_abs = 1e-9;
        for (int r = k; r < m_; ++r) {
            double a = std::fabs(tab_[r][col]);
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (best < 0) return false;  // singular
        std::swap(tab_[k], tab_[best]);
        std::swap(rhs_[k], rhs_[best]);
        double piv = tab_[k][col];
        for (int j = 0; j < ncols_; ++j) tab_[k][j] /= piv;
        rhs_[k] /= piv;
        for (int r = 0; r < m_; ++r) {
            if (r == k) continue;
            double f = tab_[r][col];
            if (f == 0.0) continue;
            for (int j = 0; j < ncols_; ++j) tab_[r][j] -= f * tab_[k][j];
            rhs_[r] -= f * rhs_[k];
        }
    }
    std::fill(status_.begin(), status_.end(), ColStatus::AtLower);
    for (int k = 0; k < m_; ++k) {
        basic_[k] = basis[k];
        status_[basis[k]] = ColStatus::Basic;
    }
    return true;
}

void LpSolver::set_nonbasic_defaults() {
    for (int j = 0; j < ncols_; ++j) {
        if (status_[j] == ColStatus::Basic) continue;
        if (std::isfinite(lb_[j])) {
            status_[j] = ColStatus::AtLower;
            xval_[j] = lb_[j];
        } else if (std::isfinite(ub_[j])) {
            status_[j] = ColStatus::AtUpper;
            xval_[j] = ub_[j];
        } else {
            status_[j] = ColStatus::AtLower;
            xval_[j] = 0.0;
        }
    }
}

void LpSolver::compute_basic_values() {
    for (int i = 0; i < m_; ++i) {
        double v = rhs_[i];
        const auto& row = tab_[i];
        for (int j = 0; j < ncols_; ++j) {
            if (status_[j] == ColStatus::Basic) continue;
            double xj = xval_[j];
            if (xj != 0.0) v -= row[j] * xj;
        }
        xval_[basic_[i]] = v;
    }
}

double LpSolver::objective_value(const std::vector<double>& costs) const {
    double z = 0.0;
    for (int j = 0; j < ncols_ && j < static_cast<int>(costs.size()); ++j)
        z += costs[j] * xval_[j];
    return z;
}

int LpSolver::price(const std::vector<double>& costs, bool bland) const {
    std::vector<double> cb(m_);
    for (int i = 0; i < m_; ++i)
        cb[i] = basic_[i] < static_cast<int>(costs.size()) ? costs[basic_[i]] : 0.0;
    int best = -1;
    double best_score = opts_.tol_feas;
    for (int j = 0; j < ncols_; ++j) {
        if (status_[j] == ColStatus::Basic) continue;
        if (ub_[j] - lb_[j] <= 0.0) continue;  // fixed column
        double d = (j < static_cast<int>(costs.size()) ? costs[j] : 0.0);
        for (int i = 0; i < m_; ++i) {
            if (cb[i] != 0.0) d -= cb[i] * tab_[i][j];
        }
        double score = 0.0;
        if (status_[j] == ColStatus::AtLower && d < -opts_.tol_feas) score = -d;
        else if (status_[j] == ColStatus::AtUpper && d > opts_.tol_feas) score = d;
        else continue;
        if (bland) return j;  // lowest eligible index
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

LpStatus LpSolver::run_phase(const std::vector<double>& costs, bool phase_one) {
    for (;;) {
        if (pivots_ >= opts_.pivot_limit) return LpStatus::IterLimit;
        bool bland = degenerate_run_ >= opts_.bland_threshold;
        int enter = price(costs, bland);
        if (enter < 0) return LpStatus::Optimal;

        double dir = (status_[enter] == ColStatus::AtLower) ? 1.0 : -1.0;
        double theta_bound = ub_[enter] - lb_[enter];  // may be +inf
        double theta = theta_bound;
        int leave_row = -1;
        bool leave_to_lower = true;
        for (int i = 0; i < m_; ++i) {
            double alpha = tab_[i][enter];
            double rate = alpha * dir;
            int b = basic_[i];
            double t;
            bool to_lower;
            if (rate > opts_.tol_pivot) {
                if (!std::isfinite(lb_[b])) continue;
                t = (xval_[b] - lb_[b]) / rate;
                to_lower = true;
            } else if (rate < -opts_.tol_pivot) {
                if (!std::isfinite(ub_[b])) continue;
                t = (ub_[b] - xval_[b]) / (-rate);
                to_lower = false;
            } else {
                continue;
            }
            if (t < 0.0) t = 0.0;
            if (t < theta - 1e-12 ||
                (leave_row >= 0 && t < theta + 1e-12 && basic_[i] < basic_[leave_row])) {
                theta = t;
                leave_row = i;
                leave_to_lower = to_lower;
            }
        }
        if (!std::isfinite(theta)) {
            return phase_one ? LpStatus::Infeasible : LpStatus::Unbounded;
        }
        ++pivots_;
        if (theta <= opts_.tol_pivot) ++degenerate_run_;
        else degenerate_run_ = 0;

        if (leave_row < 0 || theta >= theta_bound - 1e-12) {
            // Bound flip: entering variable runs to its opposite bound.
            if (status_[enter] == ColStatus::AtLower) {
                status_[enter] = ColStatus::AtUpper;
                xval_[enter] = ub_[enter];
            } else {
                status_[enter] = ColStatus::AtLower;
                xval_[enter] = lb_[enter];
            }
            compute_basic_values();
            continue;
        }

        int leave = basic_[leave_row];
        pivot(leave_row, enter);
        status_[leave] = leave_to_lower ? ColStatus::AtLower : ColStatus::AtUpper;
        xval_[leave] = leave_to_lower ? lb_[leave] : ub_[leave];
        compute_basic_values();
    }
}

void LpSolver::pivot(int row, int col) {
    double piv = tab_[row][col];
    for (int j = 0; j < ncols_; ++j) tab_[row][j] /= piv;
    rhs_[row] /= piv;
    for (int r = 0; r < m_; ++r) {
        if (r == row) continue;
        double f = tab_[r][col];
        if (f == 0.0) continue;
        for (int j = 0; j < ncols_; ++j) tab_[r][j] -= f * tab_[row][j];
        rhs_[r] -= f * rhs_[row];
    }
    status_[col] = ColStatus::Basic;
    basic_[row] = col;
}

bool LpSolver::add_artificials() {
    bool any = false;
    for (int i = 0; i < m_; ++i) {
        int b = basic_[i];
        double v = xval_[b];
        ColStatus parked;
        if (v < lb_[b] - opts_.tol_feas) {
            parked = ColStatus::AtLower;
            // Flip the row so the artificial's basic column is +1.
            for (double& a : tab_[i]) a = -a;
            rhs_[i] = -rhs_[i];
        } else if (v > ub_[b] + opts_.tol_feas) {
            parked = ColStatus::AtUpper;
        } else {
            continue;
        }
        int art = ncols_++;
        for (int r = 0; r < m_; ++r) tab_[r].push_back(r == i ? 1.0 : 0.0);
        lb_.push_back(0.0);
        ub_.push_back(kInf);
        xval_.push_back(0.0);
        status_.push_back(ColStatus::Basic);
        // Park the old basic variable at the bound it violated.
        status_[b] = parked;
        xval_[b] = (parked == ColStatus::AtLower) ? lb_[b] : ub_[b];
        basic_[i] = art;
        any = true;
    }
    if (any) compute_basic_values();
    return any;
}

void LpSolver::drop_artificials() {
    // Pivot lingering basic artificials onto a real column when possible;
    // a row with no real nonbasic support is redundant and keeps its
    // artificial fixed at zero.
    for (int i = 0; i < m_; ++i) {
        if (basic_[i] < nreal_) continue;
        int target = -1;
        double best = 1e-7;
        for (int j = 0; j < nreal_; ++j) {
            if (status_[j] == ColStatus::Basic) continue;
            double a = std::fabs(tab_[i][j]);
            if (a > best) {
                best = a;
                target = j;
            }
        }
        if (target >= 0) {
            int art = basic_[i];
            pivot(i, target);
            status_[art] = ColStatus::AtLower;
            xval_[art] = 0.0;
        }
    }
    for (int j = nreal_; j < ncols_; ++j) {
        lb_[j] = 0.0;
        ub_[j] = 0.0;  // fixed; pricing skips fixed columns
        if (status_[j] != ColStatus::Basic) xval_[j] = 0.0;
    }
    compute_basic_values();
}

LpSolution LpSolver::solve(const std::vector<int>* warm_basis,
                           const std::vector<int>* warm_at_upper) {
    build_tableau();
    bool warm_ok = warm_basis != nullptr;
    if (warm_basis && !install_basis(*warm_basis)) {
        build_tableau();  // fall back to the slack basis
        warm_ok = false;
    }
    set_nonbasic_defaults();
    if (warm_ok && warm_at_upper) {
        // Restore the parent's nonbasic-at-upper statuses; without them the
        // warm point degrades to all-at-lower and phase 1 starts over.
        for (int j : *warm_at_upper) {
            if (j < 0 || j >= ncols_ || status_[j] == ColStatus::Basic) continue;
            if (!std::isfinite(ub_[j])) continue;
            status_[j] = ColStatus::AtUpper;
            xval_[j] = ub_[j];
        }
    }
    compute_basic_values();

    LpSolution out;
    out.basis.clear();

    bool need_phase1 = false;
    for (int i = 0; i < m_; ++i) {
        int b = basic_[i];
        if (xval_[b] < lb_[b] - opts_.tol_feas || xval_[b] > ub_[b] + opts_.tol_feas) {
            need_phase1 = true;
            break;
        }
    }
    if (need_phase1) {
        add_artificials();
        std::vector<double> phase1_costs(ncols_, 0.0);
        for (int j = nreal_; j < ncols_; ++j) phase1_costs[j] = 1.0;
        LpStatus st = run_phase(phase1_costs, true);
        if (st == LpStatus::IterLimit) {
            out.status = LpStatus::IterLimit;
            out.pivot_count = pivots_;
            return out;
        }
        double infeas = objective_value(phase1_costs);
        if (infeas > 1e-7) {
            out.status = LpStatus::Infeasible;
            out.pivot_count = pivots_;
            solved_ = true;
            return out;
        }
        drop_artificials();
        degenerate_run_ = 0;
    }

    std::vector<double> costs(ncols_, 0.0);
    for (int j = 0; j < n_; ++j) costs[j] = prob_.objective[j];
    LpStatus st = run_phase(costs, false);
    out.status = st;
    out.pivot_count = pivots_;
    solved_ = true;
    if (st != LpStatus::Optimal) return out;

    out.x.assign(xval_.begin(), xval_.begin() + n_);
    out.objective = objective_value(costs);
    out.basis.resize(m_);
    for (int i = 0; i < m_; ++i)
        out.basis[i] = basic_[i] < nreal_ ? basic_[i] : n_ + i;  // redundant row -> its slack
    for (int j = 0; j < nreal_; ++j)
        if (status_[j] == ColStatus::AtUpper) out.at_upper.push_back(j);
    return out;
}

LpSolver::TableauRow LpSolver::tableau_row(int basic_var) const {
    if (!solved_) throw SolveError("tableau_row: solve() has not run");
    if (basic_var < 0 || basic_var >= nreal_ || status_[basic_var] != ColStatus::Basic)
        throw SolveError("tableau_row: variable " + std::to_string(basic_var) + " is not basic");
    int row = -1;
    for (int i = 0; i < m_; ++i)
        if (basic_[i] == basic_var) {
            row = i;
            break;
        }
    assert(row >= 0);
    TableauRow out;
    out.rhs = rhs_[row];
    for (int j = 0; j < nreal_; ++j) {
        if (status_[j] == ColStatus::Basic) continue;
        out.nonbasic.push_back(j);
        out.coef.push_back(tab_[row][j]);
    }
    return out;
}

LpSolution solve_lp(const LpProblem& problem, const std::vector<int>* warm_basis,
                    const SimplexOptions& opts) {
    LpSolver solver(problem, opts);
    return solver.solve(warm_basis);
}

LpSolution solve_lp(const LpProblem& problem, const std::vector<int>& warm_basis,
                    const std::vector<int>& warm_at_upper, const SimplexOptions& opts) {
    LpSolver solver(problem, opts);
    return solver.solve(&warm_basis, &warm_at_upper);
}

} // namespace treecut
