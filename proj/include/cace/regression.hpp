#pragma once

#include "cace/population.hpp"

namespace cace {

enum class RobustVariant { EHW, HC2, HC3 };

struct OlsFit {
  Vector coefs;        // length p
  Vector residuals;    // length n
  Vector hat_diag;     // leverages, sum equals p
  Matrix xtx_inverse;  // p x p
};

// Subtract each column's mean.
Matrix center_columns(const Matrix& x);

// Least squares via column-pivoted QR; rank checked against
// 1e-10 x largest pivot.  Throws RankDeficient.
OlsFit ols_fit(const Matrix& design, const Vector& y);

// Sandwich covariance of the coefficients:
//   (X'X)^{-1} X' diag(w_i e_i^2) X (X'X)^{-1}
// with w_i = 1 (EHW), (1-h_i)^{-1} (HC2), (1-h_i)^{-2} (HC3).
Matrix robust_cov(const OlsFit& fit, const Matrix& design, RobustVariant variant);

}  // namespace cace
