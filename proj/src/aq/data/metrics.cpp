#include "aq/data/metrics.hpp"

#include <cmath>
#include <string>

#include "aq/errors.hpp"

namespace aq::data {

double rmse(const std::vector<double>& observed, const std::vector<double>& predicted) {
    if (observed.empty() || observed.size() != predicted.size()) {
        throw ShapeError("rmse: length mismatch: " + std::to_string(observed.size()) + " vs " +
                         std::to_string(predicted.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d = observed[i] - predicted[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(observed.size()));
}

}  // namespace aq::data
