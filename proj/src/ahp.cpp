#include "mindplane/ahp.hpp"

#include "mindplane/error.hpp"

#include <algorithm>
#include <cmath>

namespace mindplane::ahp {

void validate_comparison(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 0 || m.cols() != n) throw ValidationError("comparison matrix must be square");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = m(i, j);
      if (!(a > 0.0) || !std::isfinite(a))
        throw ValidationError("comparison matrix entries must be positive and finite");
      if (i == j && a != 1.0) throw ValidationError("comparison matrix diagonal must be 1");
      const double reciprocal = 1.0 / m(j, i);
      if (std::abs(a - reciprocal) > 1e-12 * std::max(1.0, std::abs(a)))
        throw ValidationError("comparison matrix is not reciprocal at (" + std::to_string(i) +
                              ", " + std::to_string(j) + ")");
    }
  }
}

ComparisonMatrix::ComparisonMatrix(Matrix a) : a_(std::move(a)) { validate_comparison(a_); }

ComparisonMatrix ComparisonMatrix::from_upper(double a12, double a13, double a23) {
  return ComparisonMatrix(Matrix{{1.0, a12, a13},
                                 {1.0 / a12, 1.0, a23},
                                 {1.0 / a13, 1.0 / a23, 1.0}});
}

PrincipalEigen principal_eigenvector(const ComparisonMatrix& cm) {
  const Matrix& a = cm.matrix();
  const std::size_t n = a.rows();
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);

  for (int it = 1; it <= kPowerMaxIterations; ++it) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = dot(a.row(i), w);
      sum += next[i];
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= sum;
      delta = std::max(delta, std::abs(next[i] - w[i]));
    }
    w.swap(next);
    if (delta < kPowerTolerance) {
      double lambda = 0.0;
      for (std::size_t i = 0; i < n; ++i) lambda += dot(a.row(i), w) / w[i];
      return {{std::move(w)}, lambda / static_cast<double>(n), it};
    }
  }
  throw ConvergenceError("power iteration did not converge in " +
                         std::to_string(kPowerMaxIterations) + " iterations");
}

double consistency_ratio(const ComparisonMatrix& a) {
  const std::size_t n = a.size();
  if (n != 3)
    throw ValidationError("consistency_ratio supports 3x3 matrices only, got n = " +
                          std::to_string(n));
  const double lambda = principal_eigenvector(a).lambda_max;
  const double ci = (lambda - static_cast<double>(n)) / static_cast<double>(n - 1);
  return ci / kRandomIndex3;
}

ChannelOption ChannelOption::make(ChannelSet channels, double accuracy) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0))
    throw ValidationError("channel option accuracy must lie in [0, 1]");
  const double c2 = channels.contains(Band::alpha) ? 0.5 : 1.0;
  const double c3 = 1.0 / static_cast<double>(channels.size());
  return {std::move(channels), accuracy, c2, c3};
}

double score_option(const PriorityVector& w, const ChannelOption& o) {
  if (w.w.size() != 3) throw ValidationError("score_option expects three criterion weights");
  return w.w[0] * o.accuracy / kCriterionMax[0] + w.w[1] * o.preknowledge / kCriterionMax[1] +
         w.w[2] * o.channel_factor / kCriterionMax[2];
}

namespace {

// Ascending band priorities of the set's channels; lexicographically smaller wins.
std::vector<int> band_key(const ChannelSet& set) {
  std::vector<int> key;
  for (const auto& c : set) key.push_back(static_cast<int>(c.band));
  std::sort(key.begin(), key.end());
  return key;
}

} // namespace

ChannelOption select_channels(const PriorityVector& w, std::span<const ChannelOption> options) {
  if (options.empty()) throw ValidationError("select_channels: no options");
  std::size_t best = 0;
  double best_q = score_option(w, options[0]);
  for (std::size_t i = 1; i < options.size(); ++i) {
    const double q = score_option(w, options[i]);
    const auto& cur = options[i];
    const auto& inc = options[best];
    bool better = q > best_q;
    if (q == best_q) {
      if (cur.channels.size() != inc.channels.size())
        better = cur.channels.size() < inc.channels.size();
      else
        better = band_key(cur.channels) < band_key(inc.channels);
    }
    if (better) {
      best = i;
      best_q = q;
    }
  }
  return options[best];
}

} // namespace mindplane::ahp
