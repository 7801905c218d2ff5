#pragma once

#include <Eigen/Dense>

namespace cwlssvm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Orthonormal basis (N x N-1) of the complement of the all-ones vector.
Matrix sum_zero_basis(Index n);

/// True when every coefficient is finite.
template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.allFinite();
}

} // namespace cwlssvm
