#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "treecut/simplex.hpp"

using namespace treecut;
using namespace treecut::testing;

namespace {

LpProblem small_lp(int n, std::vector<double> c, std::vector<SparseRow> rows,
                   std::vector<double> lb, std::vector<double> ub) {
    LpProblem lp;
    lp.num_structural = n;
    lp.objective = std::move(c);
    lp.rows = std::move(rows);
    lp.lower = std::move(lb);
    lp.upper = std::move(ub);
    return lp;
}

} // namespace

TEST_CASE("textbook 2d lp solves to the known vertex") {
    // min -3x - 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0.
    auto lp = small_lp(2, {-3.0, -5.0},
                       {{{{0, 1.0}}, 4.0}, {{{1, 2.0}}, 12.0}, {{{0, 3.0}, {1, 2.0}}, 18.0}},
                       {0.0, 0.0}, {kInf, kInf});
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-36.0).epsilon(1e-9));
    CHECK(sol.x[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sol.x[1] == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("negative rhs rows force phase one") {
    // min x s.t. -x <= -1, 0 <= x <= 5: optimum x = 1.
    auto lp = small_lp(1, {1.0}, {{{{0, -1.0}}, -1.0}}, {0.0}, {5.0});
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("infeasible system is detected") {
    // x <= 1 and -x <= -3 cannot both hold.
    auto lp = small_lp(1, {1.0}, {{{{0, 1.0}}, 1.0}, {{{0, -1.0}}, -3.0}}, {0.0}, {10.0});
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded direction is detected") {
    auto lp = small_lp(1, {-1.0}, {}, {0.0}, {kInf});
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("optimum lands on upper bounds via bound flips") {
    // min -x - y, x,y in [0,2], no rows.
    auto lp = small_lp(2, {-1.0, -1.0}, {}, {0.0, 0.0}, {2.0, 2.0});
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-4.0));
}

TEST_CASE("negative lower bounds are honored") {
    // min x + y, x,y in [-2, 3], x + y >= -3 (stored negated).
    auto lp = small_lp(2, {1.0, 1.0}, {{{{0, -1.0}, {1, -1.0}}, 3.0}}, {-2.0, -2.0},
                       {3.0, 3.0});
    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-3.0));
}

TEST_CASE("solution satisfies all constraints and bounds") {
    Rng rng(99);
    for (int t = 0; t < 50; ++t) {
        LpProblem lp = random_lp(rng);
        LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::Optimal) continue;
        for (int j = 0; j < lp.num_structural; ++j) {
            CHECK(sol.x[j] >= lp.lower[j] - 1e-6);
            CHECK(sol.x[j] <= lp.upper[j] + 1e-6);
        }
        for (const auto& row : lp.rows) {
            double lhs = 0.0;
            for (const auto& [j, v] : row.coefs) lhs += v * sol.x[j];
            CHECK(lhs <= row.rhs + 1e-6);
        }
    }
}

TEST_CASE("vertex enumeration oracle agrees on 200 random lps") {
    Rng rng(2024);
    int optimal = 0;
    for (int t = 0; t < 200; ++t) {
        LpProblem lp = random_lp(rng);
        LpSolution sol = solve_lp(lp);
        auto oracle = enumerate_lp_optimum(lp);
        if (oracle) {
            REQUIRE_MESSAGE(sol.status == LpStatus::Optimal, "case ", t);
            CHECK_MESSAGE(std::fabs(sol.objective - *oracle) <= 1e-7 * std::max(1.0, std::fabs(*oracle)),
                          "case ", t, ": simplex ", sol.objective, " oracle ", *oracle);
            ++optimal;
        } else {
            CHECK_MESSAGE(sol.status == LpStatus::Infeasible, "case ", t);
        }
    }
    CHECK(optimal > 50);  // the generator must exercise the optimal path
}

TEST_CASE("warm basis reproduces the cold-start optimum") {
    Rng rng(7);
    for (int t = 0; t < 30; ++t) {
        LpProblem lp = random_lp(rng);
        LpSolution cold = solve_lp(lp);
        if (cold.status != LpStatus::Optimal) continue;
        LpSolution warm = solve_lp(lp, &cold.basis);
        REQUIRE(warm.status == LpStatus::Optimal);
        CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
        CHECK(warm.pivot_count <= cold.pivot_count);
    }
}

TEST_CASE("garbage warm basis falls back to a clean solve") {
    auto lp = small_lp(2, {-1.0, -1.0}, {{{{0, 1.0}, {1, 1.0}}, 3.0}}, {0.0, 0.0},
                       {2.0, 2.0});
    std::vector<int> bogus = {17};          // wrong size
    LpSolution sol = solve_lp(lp, &bogus);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-3.0));
    std::vector<int> dup = {0};
    LpSolution sol2 = solve_lp(lp, &dup);   // fine: {0} is a valid 1-row basis
    CHECK(sol2.status == LpStatus::Optimal);
}

TEST_CASE("pivot cap reports iteration limit") {
    Rng rng(5);
    SimplexOptions opts;
    opts.pivot_limit = 1;
    bool saw_limit = false;
    for (int t = 0; t < 20 && !saw_limit; ++t) {
        LpProblem lp = random_lp(rng);
        LpSolution sol = solve_lp(lp, nullptr, opts);
        saw_limit = sol.status == LpStatus::IterLimit;
    }
    CHECK(saw_limit);
}

TEST_CASE("tableau row reconstructs the basic variable value") {
    auto lp = small_lp(2, {-3.0, -5.0},
                       {{{{0, 1.0}}, 4.0}, {{{1, 2.0}}, 12.0}, {{{0, 3.0}, {1, 2.0}}, 18.0}},
                       {0.0, 0.0}, {kInf, kInf});
    LpSolver solver(lp);
    LpSolution sol = solver.solve();
    REQUIRE(sol.status == LpStatus::Optimal);
    for (int b : sol.basis) {
        auto row = solver.tableau_row(b);
        double v = row.rhs;
        for (std::size_t k = 0; k < row.nonbasic.size(); ++k)
            v -= row.coef[k] * solver.col_value(row.nonbasic[k]);
        CHECK(v == doctest::Approx(solver.col_value(b)).epsilon(1e-9));
    }
    CHECK_THROWS(solver.tableau_row(-1));
}

TEST_CASE("determinism: identical inputs give identical pivot sequences") {
    Rng rng(13);
    for (int t = 0; t < 10; ++t) {
        LpProblem lp = random_lp(rng);
        LpSolution a = solve_lp(lp);
        LpSolution b = solve_lp(lp);
        CHECK(a.status == b.status);
        CHECK(a.pivot_count == b.pivot_count);
        CHECK(a.basis == b.basis);
        CHECK(a.x == b.x);
    }
}
