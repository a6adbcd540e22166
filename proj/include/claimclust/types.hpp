#pragma once

#include <Eigen/Core>

namespace claimclust {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixF = RowMatrix<float>;
using MatrixD = RowMatrix<double>;
using VectorF = Vector<float>;
using VectorD = Vector<double>;

}  // namespace claimclust
