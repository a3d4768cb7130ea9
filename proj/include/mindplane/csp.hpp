#pragma once

#include "mindplane/linalg.hpp"
#include "mindplane/signal_core.hpp"

#include <span>
#include <vector>

namespace mindplane::csp {

// Trace-normalized, symmetric PSD channel covariance.
struct CovarianceMatrix {
  Matrix m;
};

// One spatial filter per class. w_T maximizes the concentration share of
// variance, w_R the relaxation share. Both unit norm, largest-magnitude
// component positive.
struct SpatialFilterPair {
  std::vector<double> w_T;
  std::vector<double> w_R;
  // Generalized eigenvalues behind w_T and w_R, in [0, 1].
  double lambda_T = 0.5;
  double lambda_R = 0.5;

  // False when both classes share one covariance (all eigenvalues equal) and
  // the filters carry no class information.
  bool discriminative() const { return lambda_T - lambda_R > 1e-9; }
  std::size_t channels() const { return w_T.size(); }
};

// Concatenation [w_T X | w_R X], length 2T.
struct CspFeature {
  std::vector<double> v;
};

// Mean over windows of X X^T / trace(X X^T), renormalized to unit trace.
CovarianceMatrix class_covariance(std::span<const Window> windows);

// Solves cov_T w = lambda (cov_T + cov_R) w by whitening the composite
// covariance; w_T is the eigenvector of the largest lambda, w_R of the
// smallest.
SpatialFilterPair compute_filters(const CovarianceMatrix& cov_T, const CovarianceMatrix& cov_R);

// Sign-aligns every pair to the first, averages, and renormalizes.
SpatialFilterPair average_filters(std::span<const SpatialFilterPair> pairs);

CspFeature apply_filters(const SpatialFilterPair& p, const Window& w);

// Flips v in place so its largest-magnitude component is positive.
void fix_sign(std::vector<double>& v);

} // namespace mindplane::csp
