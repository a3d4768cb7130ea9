#pragma once

#include "mindplane/linalg.hpp"
#include "mindplane/signal_core.hpp"

#include <span>
#include <vector>

namespace mindplane::ahp {

// Positive reciprocal pairwise-comparison matrix: a[i][i] == 1,
// a[i][j] == 1 / a[j][i].
class ComparisonMatrix {
public:
  explicit ComparisonMatrix(Matrix a);

  // Builds the 3x3 matrix from its upper triangle (a12, a13, a23).
  static ComparisonMatrix from_upper(double a12, double a13, double a23);

  const Matrix& matrix() const { return a_; }
  std::size_t size() const { return a_.rows(); }

private:
  Matrix a_;
};

// Throws ValidationError unless m is square, positive, unit-diagonal and reciprocal.
void validate_comparison(const Matrix& m);

struct PriorityVector {
  std::vector<double> w;  // sums to 1
};

struct PrincipalEigen {
  PriorityVector priorities;
  double lambda_max = 0.0;
  int iterations = 0;
};

inline constexpr double kPowerTolerance = 1e-12;
inline constexpr int kPowerMaxIterations = 10000;
// Saaty's random consistency index for n = 3.
inline constexpr double kRandomIndex3 = 0.58;
inline constexpr double kConsistencyThreshold = 0.1;

// Power iteration from the uniform vector, sum-normalized each step.
PrincipalEigen principal_eigenvector(const ComparisonMatrix& a);

// ((lambda_max - n) / (n - 1)) / RI(3). Only n == 3 is supported.
double consistency_ratio(const ComparisonMatrix& a);

// One candidate channel choice with its three criteria:
// c1 accuracy, c2 prior knowledge, c3 = 1 / channel count.
struct ChannelOption {
  ChannelSet channels;
  double accuracy = 0.0;
  double preknowledge = 1.0;
  double channel_factor = 1.0;

  // c2 = 0.5 when any alpha channel is used, else 1; c3 = 1/|channels|.
  static ChannelOption make(ChannelSet channels, double accuracy);
};

// Criteria maxima used for standardization (c1, c2, c3).
inline constexpr double kCriterionMax[3] = {1.0, 1.0, 0.5};

// Q = w1*c1/1 + w2*c2/1 + w3*c3/0.5.
double score_option(const PriorityVector& w, const ChannelOption& o);

// Maximal Q; ties go to fewer channels, then to the higher-priority band
// (gamma > beta > alpha).
ChannelOption select_channels(const PriorityVector& w, std::span<const ChannelOption> options);

} // namespace mindplane::ahp
