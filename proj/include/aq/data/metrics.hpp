#pragma once

#include <vector>

namespace aq::data {

// Root mean squared difference of two equal-length vectors.
double rmse(const std::vector<double>& observed, const std::vector<double>& predicted);

}  // namespace aq::data
