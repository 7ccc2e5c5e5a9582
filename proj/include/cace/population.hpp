#pragma once

#include <Eigen/Dense>

#include "cace/errors.hpp"

namespace cace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

// Latent compliance type under monotonicity: (W(0), W(1)) with no defiers.
enum class LatentGroup { AlwaysTaker, Complier, NeverTaker };

// The fixed science table: covariates, both potential treatment-received
// indicators and both potential outcomes for every unit.  Only Z is random.
struct FinitePopulation {
  Matrix x;      // n x k
  IntVector w0;  // potential treatment received if assigned control
  IntVector w1;  // potential treatment received if assigned treatment
  Vector y0;     // potential outcome if receiving control
  Vector y1;     // potential outcome if receiving treatment

  Eigen::Index n() const { return y0.size(); }
  Eigen::Index k() const { return x.cols(); }
};

struct Assignment {
  IntVector z;
  int n1 = 0;
};

// What the analyst observes after assignment.
struct ObservedDataset {
  Matrix x;
  IntVector z;
  IntVector w_obs;
  Vector y_obs;

  Eigen::Index n() const { return y_obs.size(); }
  Eigen::Index k() const { return x.cols(); }
};

LatentGroup latent_group(int w0, int w1);

// Throws DefierPresent / LengthMismatch when the science table is invalid.
void validate(const FinitePopulation& pop);

ObservedDataset reveal(const FinitePopulation& pop, const Assignment& a);

// tau_CACE^samp: average of y1 - y0 over compliers.  Throws NoCompliers.
double sample_cace(const FinitePopulation& pop);

double true_itt_w(const FinitePopulation& pop);  // = p_co^samp
double true_itt_y(const FinitePopulation& pop);

}  // namespace cace
