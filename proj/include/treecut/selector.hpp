#ifndef TREECUT_SELECTOR_HPP
#define TREECUT_SELECTOR_HPP

#include <optional>
#include <string>
#include <vector>

#include "treecut/cuts.hpp"
#include "treecut/state_graph.hpp"

namespace treecut {

/// One cut-selection decision: selection bits y_i, the ordered list of the
/// selected candidate indices (the permutation pi), per-candidate selection
/// probabilities, and the action's log-probability under the policy.
struct CutAction {
    std::vector<char> bits;        // y_i per candidate
    std::vector<int> selected;     // pi: selected indices in add order
    std::vector<double> probs;     // p_i in (0,1)
    double log_prob = 0.0;
};

struct SelectionContext {
    const StateGraph& graph;
    const std::vector<CutCandidate>& candidates;
    const std::vector<double>& x_lp;
    const std::optional<std::vector<double>>& incumbent;
};

/// Cut-selection strategy hook used by the branch-and-cut engine. Given
/// identical state and seed, select() must return an identical action.
class CutSelector {
public:
    virtual ~CutSelector() = default;
    virtual CutAction select(const SelectionContext& ctx) = 0;
    virtual std::string tag() const = 0;
};

} // namespace treecut

#endif
