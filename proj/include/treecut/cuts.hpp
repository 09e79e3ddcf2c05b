#ifndef TREECUT_CUTS_HPP
#define TREECUT_CUTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "treecut/instance.hpp"
#include "treecut/simplex.hpp"

namespace treecut {

inline constexpr double kTolIntegrality = 1e-6;

struct CutFeatures {
    double parallelism = 0.0;         // |c'a| / (||c|| ||a||)
    double efficacy = 0.0;            // (a'x* - b) / ||a||
    double support = 0.0;             // nnz(a) / n
    double integral_support = 0.0;    // integer-indexed nnz / nnz
    double normalized_violation = 0.0;
};

struct CutOrigin {
    int node_id = 0;
    int round_index = 0;
    std::string generator = "gomory";
};

/// A separated inequality a'x <= b over structural variables, normalized to
/// ||a||_2 = 1 at creation, violated by the LP solution it was derived from.
struct CutCandidate {
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
    CutFeatures features;
    CutOrigin origin;
};

/// Gomory cut separation from the optimal tableau. Rows are taken from the
/// most-fractional basic integer variables (descending fractionality, ties
/// by variable index); slack columns are substituted out so that cuts are
/// expressed over structural variables only. Returns an empty list when the
/// LP optimum is integral.
std::vector<CutCandidate> separate_gomory(const LpSolver& solver, const LpSolution& solution,
                                          const MipInstance& inst, int max_cuts,
                                          int node_id = 0, int round_index = 0);

/// The five candidate-cut quality features, evaluated at the separating LP
/// solution. The cut must already be normalized.
CutFeatures compute_features(const CutCandidate& cut, const std::vector<double>& x_lp,
                             const MipInstance& inst);

/// Distance to the cut along the ray from the LP optimum to the incumbent;
/// zero without an incumbent or when the ray never reaches the hyperplane.
double directed_cutoff(const CutCandidate& cut, const std::vector<double>& x_lp,
                       const std::optional<std::vector<double>>& incumbent);

double cut_activity(const CutCandidate& cut, const std::vector<double>& x);

} // namespace treecut

#endif
