#ifndef TREECUT_INSTANCE_HPP
#define TREECUT_INSTANCE_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace treecut {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One inequality row: sum_j coefs[j] * x_j <= rhs.
/// Coefficients are (variable index, value) pairs with no zeros and no
/// duplicate indices.
struct SparseRow {
    std::vector<std::pair<int, double>> coefs;
    double rhs = 0.0;
};

/// Minimization MIP in matrix form:
///   min c'x  s.t.  Ax <= b,  lb <= x <= ub,  x_j integer for j in I.
/// Immutable after construction; safe to share across solver workers.
struct MipInstance {
    std::string name;
    int num_vars = 0;
    int num_cons = 0;
    std::vector<double> objective;       // size num_vars
    std::vector<SparseRow> rows;         // size num_cons
    std::vector<double> lower;           // finite
    std::vector<double> upper;           // may be +inf
    std::vector<int> integer_set;        // sorted, strictly increasing

    bool is_integer(int j) const;

    /// Throws InvalidInput if any structural invariant is violated.
    void validate() const;
};

enum class Family { SetCovering, MaxIndependentSet, MultiKnapsack };

struct GeneratorConfig {
    Family family = Family::SetCovering;
    int n = 0;            // variables (set covering, knapsack)
    int m = 0;            // rows (set covering)
    int p = 0;            // vertices (independent set)
    int knapsacks = 3;    // weight rows (knapsack)
    double density = 0.2; // row fill / edge probability
    std::uint64_t seed = 0;
};

/// Synthetic instance generators. Pure function of the config: the same
/// seed always yields a byte-identical instance.
MipInstance generate(const GeneratorConfig& config);

std::string family_name(Family f);
Family family_from_name(const std::string& s);

/// Instance JSON I/O. load(save(x)) reproduces x field-for-field.
void save_instance(const MipInstance& inst, const std::string& path);
MipInstance load_instance(const std::string& path);

std::string instance_to_json(const MipInstance& inst);
MipInstance instance_from_json(const std::string& text, const std::string& context);

} // namespace treecut

#endif
