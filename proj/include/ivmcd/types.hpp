#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace ivmcd {

using Index = Eigen::Index;

/// Dense row-major matrix used for every data and covariance matrix.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Binary membership vector over observations (1 = active).
using Mask = std::vector<unsigned char>;

}  // namespace ivmcd
