#include "cace/regression.hpp"

#include <cmath>

namespace cace {

Matrix center_columns(const Matrix& x) {
  if (x.rows() == 0) return x;
  return x.rowwise() - x.colwise().mean();
}

OlsFit ols_fit(const Matrix& design, const Vector& y) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (n < p) throw RankDeficient("ols_fit: fewer rows than columns");

  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  const Matrix& r = qr.matrixR();
  const double max_pivot = std::fabs(r(0, 0));
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::fabs(r(j, j)) <= 1e-10 * max_pivot)
      throw RankDeficient("ols_fit: design matrix is rank deficient");
  }

  OlsFit fit;
  fit.coefs = qr.solve(y);
  fit.residuals = y - design * fit.coefs;
  fit.xtx_inverse = (design.transpose() * design).ldlt().solve(Matrix::Identity(p, p));
  fit.hat_diag.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    fit.hat_diag[i] = design.row(i) * fit.xtx_inverse * design.row(i).transpose();
  return fit;
}

Matrix robust_cov(const OlsFit& fit, const Matrix& design, RobustVariant variant) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  Matrix meat = Matrix::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    double w = 1.0;
    if (variant != RobustVariant::EHW) {
      const double one_minus_h = 1.0 - fit.hat_diag[i];
      if (one_minus_h <= 1e-12)
        throw LeverageOne("robust_cov: unit with leverage 1 under HC2/HC3");
      w = (variant == RobustVariant::HC2) ? 1.0 / one_minus_h
                                          : 1.0 / (one_minus_h * one_minus_h);
    }
    const double e2 = fit.residuals[i] * fit.residuals[i];
    meat.noalias() += (w * e2) * (design.row(i).transpose() * design.row(i));
  }
  return fit.xtx_inverse * meat * fit.xtx_inverse;
}

}  // namespace cace
