#include "treecut/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "treecut/errors.hpp"

namespace treecut {

double improvement(double reference_cost, double method_cost) {
    if (reference_cost == 0.0) throw InvalidInput("improvement: zero reference cost");
    return (reference_cost - method_cost) / reference_cost;
}

double node_reduction(double reference_nodes, double method_nodes) {
    if (reference_nodes == 0.0) throw InvalidInput("node_reduction: zero reference count");
    return (reference_nodes - method_nodes) / reference_nodes;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw InvalidInput("mean: empty input");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double median(std::vector<double> values) {
    if (values.empty()) throw InvalidInput("median: empty input");
    std::sort(values.begin(), values.end());
    std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace treecut
