#pragma once

#include <Eigen/Core>

namespace roadsafe {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vector = Eigen::Vector<T, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

}  // namespace roadsafe
