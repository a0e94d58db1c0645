#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <string>

namespace gossipfield {

using ColSparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct SolveOptions {
  std::size_t dense_limit = 2000;       ///< dense LU up to this many unknowns
  double tolerance = 1e-12;             ///< relative residual ||Ax - b|| / ||b||
  std::size_t max_sweeps = 1'000'000;   ///< Gauss-Seidel fallback budget
};

struct SolveReport {
  std::string method;  ///< "dense-lu", "bicgstab-ilut" or "gauss-seidel"
  double relative_residual = 0.0;
  std::size_t iterations = 0;
};

/// Solves A X = B for a square sparse A with non-zero diagonal, one column of
/// B at a time. Systems here are (I - P_AA)-type M-matrices, for which both
/// the Krylov path and the Gauss-Seidel fallback converge. Throws
/// kMomentsNotConverged when the residual target is missed.
Eigen::MatrixXd solve_linear(const ColSparseMatrix& a, const Eigen::MatrixXd& b, const SolveOptions& options = {},
                             SolveReport* report = nullptr);

}  // namespace gossipfield
