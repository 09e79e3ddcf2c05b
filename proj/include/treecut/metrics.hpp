#ifndef TREECUT_METRICS_HPP
#define TREECUT_METRICS_HPP

#include <vector>

namespace treecut {

/// Relative improvement of a method over a reference cost:
/// (reference - method) / reference. Positive means the method is cheaper.
double improvement(double reference_cost, double method_cost);

/// Relative node reduction, same shape as improvement.
double node_reduction(double reference_nodes, double method_nodes);

double mean(const std::vector<double>& values);
double median(std::vector<double> values);

} // namespace treecut

#endif
