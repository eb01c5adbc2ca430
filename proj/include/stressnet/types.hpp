#pragma once

#include <Eigen/Dense>

namespace stressnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using AdjMat = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

} // namespace stressnet
