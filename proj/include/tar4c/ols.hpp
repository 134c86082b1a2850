#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tar4c/errors.hpp"

namespace tar4c {

/// Ordinary least squares solved by column-pivoted Householder QR.
/// Columns that do not survive the rank-revealing decomposition are dropped:
/// their coefficients are reported as exact zeros.
struct OlsFit {
  Eigen::VectorXd beta;       // full design width, zeros on dropped columns
  Eigen::VectorXd residuals;  // y - X * beta
  double ssr = 0.0;           // residuals.squaredNorm()
  int rank = 0;
  std::vector<int> dropped;   // indices of dropped columns, ascending
};

inline OlsFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    throw numeric_error(ErrorCode::DimensionMismatch, "ols_fit: row count mismatch");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  OlsFit fit;
  fit.rank = static_cast<int>(qr.rank());
  if (fit.rank == 0)
    throw numeric_error(ErrorCode::AllColumnsDropped, "ols_fit: design has rank zero");

  fit.beta = qr.solve(y);
  // Pivoted QR zeroes the trailing permuted coordinates; record which
  // original columns those are and force exact zeros against roundoff.
  const auto& perm = qr.colsPermutation().indices();
  for (int k = fit.rank; k < X.cols(); ++k) {
    const int col = perm(k);
    fit.beta(col) = 0.0;
    fit.dropped.push_back(col);
  }
  std::sort(fit.dropped.begin(), fit.dropped.end());

  fit.residuals = y - X * fit.beta;
  fit.ssr = fit.residuals.squaredNorm();
  return fit;
}

}  // namespace tar4c
