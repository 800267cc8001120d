#pragma once

#include <Eigen/Dense>

namespace fedglm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

} // namespace fedglm
