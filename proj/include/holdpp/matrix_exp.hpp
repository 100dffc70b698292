#pragma once

#include <Eigen/Dense>

#include "holdpp/block_matrix.hpp"

namespace holdpp {

// exp(A*t) by scaling-and-squaring with a [13/13] Pade approximant.
// Relative accuracy is far below 1e-10 for the small factors used here.
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a, double t = 1.0);

BlockScalarMatrix matrix_exp(const BlockScalarMatrix& a, double t = 1.0);

}  // namespace holdpp
