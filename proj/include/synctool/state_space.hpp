#pragma once

#include <Eigen/Dense>

namespace synctool {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Continuous-time realization  x' = A x + B u,  y = C x + D u.
struct StateSpace {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;

  StateSpace() = default;
  StateSpace(Matrix a, Matrix b, Matrix c, Matrix d);
  // D defaults to zeros of the implied shape.
  StateSpace(Matrix a, Matrix b, Matrix c);

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return B.cols(); }
  Eigen::Index outputs() const { return C.rows(); }

  // Throws a dimension error when the four blocks are inconsistent.
  void validate() const;

  static StateSpace static_gain(const Matrix& d);
};

}  // namespace synctool
