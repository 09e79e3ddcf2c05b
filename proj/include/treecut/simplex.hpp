#ifndef TREECUT_SIMPLEX_HPP
#define TREECUT_SIMPLEX_HPP

#include <optional>
#include <vector>

#include "treecut/instance.hpp"

namespace treecut {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;        // structural variables only
    double objective = 0.0;
    std::vector<int> basis;       // basic variable index per row
    std::vector<int> at_upper;    // nonbasic columns parked at their upper bound
    long pivot_count = 0;
};

/// LP relaxation data: the instance rows plus any appended cut rows, all in
/// Ax <= b form, with (possibly node-tightened) variable bounds. Column
/// space seen by the solver is [structurals | one slack per row].
struct LpProblem {
    int num_structural = 0;
    std::vector<double> objective;   // structural only
    std::vector<SparseRow> rows;     // original rows first, cut rows appended
    std::vector<double> lower;       // structural bounds
    std::vector<double> upper;

    static LpProblem from_instance(const MipInstance& inst);
    void add_row(SparseRow row) { rows.push_back(std::move(row)); }
    int num_rows() const { return static_cast<int>(rows.size()); }
    int num_cols() const { return num_structural + num_rows(); }
};

struct SimplexOptions {
    long pivot_limit = 50000;
    double tol_feas = 1e-7;
    double tol_pivot = 1e-9;
    int bland_threshold = 1000;  // consecutive degenerate pivots before Bland's rule
};

enum class ColStatus : signed char { Basic, AtLower, AtUpper };

/// Bounded-variable primal simplex on a dense tableau. Deterministic:
/// Dantzig pricing with lowest-index tie-breaks, Bland's rule after a run
/// of degenerate pivots. A solver instance is single-threaded.
class LpSolver {
public:
    explicit LpSolver(const LpProblem& problem, const SimplexOptions& opts = {});

    /// Solves the LP; `warm_basis` (basic variable index per row) seeds the
    /// starting basis when it is well-formed and nonsingular. A bounded
    /// basis is only a full description together with the nonbasic columns
    /// at their upper bounds, so a warm start without `warm_at_upper`
    /// reconstructs a different point and mostly re-runs phase 1.
    LpSolution solve(const std::vector<int>* warm_basis = nullptr,
                     const std::vector<int>* warm_at_upper = nullptr);

    struct TableauRow {
        std::vector<int> nonbasic;       // nonbasic column indices
        std::vector<double> coef;        // aligned with `nonbasic`
        double rhs = 0.0;                // (B^-1 b) entry for the row
    };

    /// Row of the optimal tableau for a basic variable:
    ///   x_basic = rhs - sum_j coef[j] * x_{nonbasic[j]}.
    TableauRow tableau_row(int basic_var) const;

    const LpProblem& problem() const { return prob_; }
    int num_cols() const { return ncols_; }
    ColStatus col_status(int j) const { return status_[j]; }
    double col_value(int j) const { return xval_[j]; }
    double col_lower(int j) const { return lb_[j]; }
    double col_upper(int j) const { return ub_[j]; }
    long pivots() const { return pivots_; }

private:
    void build_tableau();
    bool install_basis(const std::vector<int>& basis);
    void set_nonbasic_defaults();
    void compute_basic_values();
    double objective_value(const std::vector<double>& costs) const;
    int price(const std::vector<double>& costs, bool bland) const;
    LpStatus run_phase(const std::vector<double>& costs, bool phase_one);
    bool add_artificials();
    void drop_artificials();
    void pivot(int row, int col);

    LpProblem prob_;
    SimplexOptions opts_;
    int n_ = 0;           // structural count
    int m_ = 0;           // row count
    int ncols_ = 0;       // n + m (+ artificials during phase 1)
    int nreal_ = 0;       // n + m
    std::vector<std::vector<double>> tab_;  // m x ncols, equals B^-1 [A I]
    std::vector<double> rhs_;               // B^-1 b
    std::vector<double> lb_, ub_;
    std::vector<int> basic_;                // row -> column
    std::vector<ColStatus> status_;
    std::vector<double> xval_;
    long pivots_ = 0;
    int degenerate_run_ = 0;
    bool solved_ = false;
};

/// Convenience wrapper matching the one-shot call shape used by the engine.
LpSolution solve_lp(const LpProblem& problem, const std::vector<int>& warm_basis,
                    const std::vector<int>& warm_at_upper, const SimplexOptions& opts = {});
LpSolution solve_lp(const LpProblem& problem, const std::vector<int>* warm_basis = nullptr,
                    const SimplexOptions& opts = {});

} // namespace treecut

#endif
