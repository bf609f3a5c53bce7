#pragma once

#include "lobimpact/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace lobimpact {

struct SolveInfo {
  double lambda = 0;  // regularization actually used
  double rcond = 0;   // reciprocal condition estimate (direct solves only)
  double residual = 0;      // ||A x - b|| / ||b||
  double residual_abs = 0;  // ||A x - b||
};

// Default ridge strength: 1e-4 * ||A||_F^2 / n.
template <class Derived>
typename Derived::Scalar default_ridge(const Eigen::MatrixBase<Derived>& A) {
  return typename Derived::Scalar(1e-4) * A.squaredNorm() / typename Derived::Scalar(A.cols());
}

// Solves min ||A x - b||^2 + lambda ||x||^2. lambda < 0 picks default_ridge(A);
// lambda == 0 solves A x = b directly and throws SingularSystem when the
// reciprocal condition estimate falls below rcond_min.
template <class DerivedA, class DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> ridge_solve(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& b, typename DerivedA::Scalar lambda,
    SolveInfo* info = nullptr, double rcond_min = 1e-13) {
  using Scalar = typename DerivedA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != b.rows()) throw Error(ErrorKind::DimensionMismatch, "system and right-hand side disagree");
  if (lambda < 0) lambda = default_ridge(A);
  Mat x;
  SolveInfo si;
  si.lambda = static_cast<double>(lambda);
  if (lambda == Scalar(0)) {
    if (A.rows() != A.cols()) throw Error(ErrorKind::DimensionMismatch, "direct solve needs a square system");
    Eigen::PartialPivLU<Mat> lu(A);
    si.rcond = static_cast<double>(lu.rcond());
    if (!(si.rcond >= rcond_min))
      throw Error(ErrorKind::SingularSystem,
                  "reciprocal condition " + std::to_string(si.rcond) + " below threshold; use a positive lambda");
    x = lu.solve(b);
  } else {
    Mat normal = Mat::Zero(A.cols(), A.cols());
    normal.template selfadjointView<Eigen::Lower>().rankUpdate(A.adjoint());
    normal.diagonal().array() += lambda;
    Eigen::LLT<Mat> llt;
    llt.compute(normal.template selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularSystem, "normal equations not positive definite");
    x = llt.solve(A.adjoint() * b);
  }
  const Mat r = A * x - b;
  si.residual_abs = static_cast<double>(r.norm());
  const Scalar bn = b.norm();
  si.residual = bn > 0 ? static_cast<double>(r.norm() / bn) : static_cast<double>(r.norm());
  if (info) *info = si;
  return x;
}

// Solves (M + lambda I) x = b for a symmetric positive semi-definite Gram
// matrix M. lambda < 0 picks 1e-4 * trace(M) / n.
template <class DerivedM, class DerivedB>
Eigen::Matrix<typename DerivedM::Scalar, Eigen::Dynamic, Eigen::Dynamic> gram_solve(
    const Eigen::MatrixBase<DerivedM>& M, const Eigen::MatrixBase<DerivedB>& b, typename DerivedM::Scalar lambda,
    SolveInfo* info = nullptr) {
  using Scalar = typename DerivedM::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M.rows() != M.cols() || M.rows() != b.rows())
    throw Error(ErrorKind::DimensionMismatch, "Gram system dimensions disagree");
  if (lambda < 0) lambda = Scalar(1e-4) * M.trace() / Scalar(M.rows());
  Mat reg = M;
  reg.diagonal().array() += lambda;
  Eigen::LLT<Mat> llt(reg);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SingularSystem, "Gram matrix not positive definite; raise lambda");
  Mat x = llt.solve(b);
  if (info) {
    info->lambda = static_cast<double>(lambda);
    const Mat r = M * x - b;
    info->residual_abs = static_cast<double>(r.norm());
    info->residual = b.norm() > 0 ? static_cast<double>(r.norm() / b.norm()) : info->residual_abs;
  }
  return x;
}

struct LineFit {
  double slope = 0, intercept = 0, r2 = 0;
};

// Least-squares line through (x, y).
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LineFit f;
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

// Slope of log|y| against log(lag) over lags [lo, hi], skipping non-positive values.
template <class Derived>
LineFit loglog_fit(const Eigen::DenseBase<Derived>& y, int lo, int hi) {
  std::vector<double> lx, ly;
  for (int l = lo; l <= hi && l < y.size(); ++l) {
    const double v = static_cast<double>(y(l));
    if (v > 0) {
      lx.push_back(std::log(static_cast<double>(l)));
      ly.push_back(std::log(v));
    }
  }
  if (lx.size() < 2) return {};
  return fit_line(lx, ly);
}

}  // namespace lobimpact
