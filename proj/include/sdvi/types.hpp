// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>

namespace sdvi {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace sdvi
