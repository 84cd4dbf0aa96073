#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace aedet {

// Default scalar for the pipeline. The numeric kernels are templated on the
// scalar type; everything that touches files or reports is instantiated with
// Real.
using Real = double;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;

using Index = Eigen::Index;

}  // namespace aedet
