#include "gossipfield/linear_solve.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gossipfield/error.hpp"

namespace gossipfield {

namespace {

double relative_residual(const ColSparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a * x - b).norm() / scale;
}

double residual_of(const Eigen::MatrixXd& dense, const Eigen::MatrixXd& x, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double scale = std::max(b.col(j).norm(), 1e-300);
    const double r = (dense * x.col(j) - b.col(j)).norm() / scale;
    if (!(r <= worst)) worst = r;  // keeps NaN
  }
  return worst;
}

// Plain forward sweeps on the row-major copy; residual checked every 16 sweeps.
std::size_t gauss_seidel(const Eigen::SparseMatrix<double, Eigen::RowMajor>& a, const ColSparseMatrix& a_col,
                         const Eigen::VectorXd& b, Eigen::VectorXd& x, const SolveOptions& options, double& residual) {
  const Eigen::Index n = a.rows();
  Eigen::VectorXd diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    diag(i) = a.coeff(i, i);
    if (diag(i) == 0.0) throw Error(ErrorCode::kMomentsNotConverged, "zero diagonal in Gauss-Seidel system");
  }
  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double acc = b(i);
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a, i); it; ++it) {
        if (it.col() != i) acc -= it.value() * x(it.col());
      }
      x(i) = acc / diag(i);
    }
    if (sweep % 16 == 0 || sweep == options.max_sweeps) {
      residual = relative_residual(a_col, x, b);
      if (residual <= options.tolerance) return sweep;
    }
  }
  return options.max_sweeps;
}

}  // namespace

Eigen::MatrixXd solve_linear(const ColSparseMatrix& a, const Eigen::MatrixXd& b, const SolveOptions& options,
                             SolveReport* report) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw Error(ErrorCode::kInvalidArgument, "solve_linear: dimension mismatch");
  }
  const auto n = static_cast<std::size_t>(a.rows());
  SolveReport local;
  if (n == 0) {
    if (report) *report = local;
    return Eigen::MatrixXd(0, b.cols());
  }

  if (n <= options.dense_limit) {
    const Eigen::MatrixXd dense(a);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    Eigen::MatrixXd x = lu.solve(b);
    local.method = "dense-lu";
    local.relative_residual = residual_of(dense, x, b);
    if (!(local.relative_residual <= options.tolerance)) {
      const Eigen::MatrixXd refined = x + lu.solve(b - dense * x);
      const double refined_residual = residual_of(dense, refined, b);
      if (refined_residual < local.relative_residual) {
        x = refined;
        local.relative_residual = refined_residual;
      }
    }
    // LU is backward stable, so a large residual means a singular system.
    if (!(local.relative_residual <= 1e-8)) {
      throw Error(ErrorCode::kMomentsNotConverged,
                  "dense solve residual " + std::to_string(local.relative_residual) + " (singular system?)");
    }
    if (report) *report = local;
    return x;
  }

  Eigen::MatrixXd x(b.rows(), b.cols());
  Eigen::BiCGSTAB<ColSparseMatrix, Eigen::IncompleteLUT<double>> krylov;
  krylov.setTolerance(options.tolerance * 0.1);
  krylov.setMaxIterations(static_cast<Eigen::Index>(std::min<std::size_t>(options.max_sweeps, 20000)));
  krylov.compute(a);
  const bool factorized = krylov.info() == Eigen::Success;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> a_row(a);
  local.method = "bicgstab-ilut";
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const Eigen::VectorXd rhs = b.col(j);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(b.rows());
    double residual = std::numeric_limits<double>::infinity();
    if (factorized) {
      col = krylov.solve(rhs);
      local.iterations = std::max<std::size_t>(local.iterations, static_cast<std::size_t>(krylov.iterations()));
      if (col.allFinite()) {
        residual = relative_residual(a, col, rhs);
      } else {
        col.setZero();
      }
    }
    if (!(residual <= options.tolerance)) {
      local.method = "gauss-seidel";
      const std::size_t sweeps = gauss_seidel(a_row, a, rhs, col, options, residual);
      local.iterations = std::max(local.iterations, sweeps);
      if (!(residual <= options.tolerance)) {
        throw Error(ErrorCode::kMomentsNotConverged, "iterative solve stopped at relative residual " +
                                                         std::to_string(residual) + " after " +
                                                         std::to_string(sweeps) + " Gauss-Seidel sweeps");
      }
    }
    local.relative_residual = std::max(local.relative_residual, residual);
    x.col(j) = col;
  }
  if (report) *report = local;
  return x;
}

}  // namespace gossipfield
