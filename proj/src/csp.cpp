#include "mindplane/csp.hpp"

#include "mindplane/error.hpp"

#include <cmath>
#include <sstream>

namespace mindplane::csp {

CovarianceMatrix class_covariance(std::span<const Window> windows) {
  if (windows.empty()) throw ValidationError("class_covariance: no windows");
  const std::size_t c = windows.front().channels();
  const std::size_t t = windows.front().length();

  Matrix sum(c, c);
  for (const auto& w : windows) {
    if (w.channels() != c || w.length() != t)
      throw ValidationError("class_covariance: windows differ in shape");
    Matrix xxt = w.data * w.data.transposed();
    const double tr = xxt.trace();
    if (!(tr > 0.0)) throw DegenerateError("class_covariance: window with zero trace");
    sum = sum + (1.0 / tr) * xxt;
  }
  const double tr = sum.trace();
  return {(1.0 / tr) * sum};
}

void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (!v.empty() && v[best] < 0.0)
    for (auto& x : v) x = -x;
}

namespace {

std::vector<double> normalized(std::vector<double> v) {
  const double n = norm2(v);
  for (auto& x : v) x /= n;
  fix_sign(v);
  return v;
}

} // namespace

SpatialFilterPair compute_filters(const CovarianceMatrix& cov_T, const CovarianceMatrix& cov_R) {
  const std::size_t c = cov_T.m.rows();
  if (c == 0 || cov_T.m.cols() != c || cov_R.m.rows() != c || cov_R.m.cols() != c)
    throw ValidationError("compute_filters: covariance shapes differ");

  const Matrix composite = cov_T.m + cov_R.m;
  const SymmetricEigen comp = symmetric_eigen(composite);
  if (!(comp.values.front() > 1e-10)) {
    std::ostringstream msg;
    msg << "compute_filters: composite covariance is singular (eigenvalue "
        << comp.values.front() << ")";
    throw DegenerateError(msg.str());
  }

  // Whitening P = Lambda^{-1/2} U^T, so P (cov_T + cov_R) P^T = I.
  Matrix whiten(c, c);
  for (std::size_t k = 0; k < c; ++k) {
    const double s = 1.0 / std::sqrt(comp.values[k]);
    for (std::size_t j = 0; j < c; ++j) whiten(k, j) = s * comp.vectors(j, k);
  }
  const Matrix s_T = whiten * cov_T.m * whiten.transposed();
  const SymmetricEigen rot = symmetric_eigen(s_T);

  // Filter for eigenvector column k: w = v_k^T P.
  auto filter = [&](std::size_t k) {
    std::vector<double> v(c);
    for (std::size_t j = 0; j < c; ++j) v[j] = rot.vectors(j, k);
    return normalized(row_times(v, whiten));
  };

  SpatialFilterPair out;
  out.w_T = filter(c - 1);
  out.w_R = filter(0);
  out.lambda_T = rot.values.back();
  out.lambda_R = rot.values.front();
  return out;
}

SpatialFilterPair average_filters(std::span<const SpatialFilterPair> pairs) {
  if (pairs.empty()) throw ValidationError("average_filters: no filter pairs");
  const std::size_t c = pairs.front().channels();
  std::vector<double> sum_T(c, 0.0), sum_R(c, 0.0);
  double lambda_T = 0.0, lambda_R = 0.0;

  auto accumulate = [](std::vector<double>& sum, const std::vector<double>& v,
                       const std::vector<double>& ref) {
    const double sign = dot(v, ref) < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < v.size(); ++i) sum[i] += sign * v[i];
  };
  for (const auto& p : pairs) {
    if (p.w_T.size() != c || p.w_R.size() != c)
      throw ValidationError("average_filters: channel counts differ");
    accumulate(sum_T, p.w_T, pairs.front().w_T);
    accumulate(sum_R, p.w_R, pairs.front().w_R);
    lambda_T += p.lambda_T;
    lambda_R += p.lambda_R;
  }
  if (norm2(sum_T) < 1e-9 || norm2(sum_R) < 1e-9)
    throw DegenerateError("average_filters: averaged filter cancelled to zero norm");

  // Renormalize without re-applying the sign rule so the result stays aligned
  // with the first pair.
  auto unit = [](std::vector<double> v) {
    const double n = norm2(v);
    for (auto& x : v) x /= n;
    return v;
  };
  SpatialFilterPair out;
  out.w_T = unit(std::move(sum_T));
  out.w_R = unit(std::move(sum_R));
  const auto n = static_cast<double>(pairs.size());
  out.lambda_T = lambda_T / n;
  out.lambda_R = lambda_R / n;
  return out;
}

CspFeature apply_filters(const SpatialFilterPair& p, const Window& w) {
  if (p.w_T.size() != w.channels() || p.w_R.size() != w.channels())
    throw ValidationError("apply_filters: filter has " + std::to_string(p.w_T.size()) +
                          " channels, window has " + std::to_string(w.channels()));
  CspFeature f;
  const auto h_T = row_times(p.w_T, w.data);
  const auto h_R = row_times(p.w_R, w.data);
  f.v.reserve(h_T.size() + h_R.size());
  f.v.insert(f.v.end(), h_T.begin(), h_T.end());
  f.v.insert(f.v.end(), h_R.begin(), h_R.end());
  return f;
}

} // namespace mindplane::csp
