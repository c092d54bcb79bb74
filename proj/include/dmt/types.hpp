#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace dmt {

/// Dense row-major matrix. Feature rows, weight matrices (logit rows x
/// features + intercept) and probability tables all use it.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Labels = std::vector<int>;

/// Backend for the batch kernels. Both produce bit-identical results.
enum class Execution { serial, parallel };

/// Floor applied to probabilities before taking logarithms.
inline constexpr double kProbabilityFloor = 1e-15;

}  // namespace dmt
