#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

namespace s2plume {

template <typename Derived>
std::vector<double> to_vector(const Eigen::DenseBase<Derived>& x) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) out.push_back(static_cast<double>(x(r, c)));
  return out;
}

// Median of the values; the two middle order statistics are averaged for even n.
inline double median_inplace(std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto mid = static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double med = v[static_cast<std::size_t>(mid)];
  if (v.size() % 2 == 0) med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + mid));
  return med;
}

struct RobustStats {
  double median = 0.0;
  double mad = 0.0;
  double robust_std = 0.0;  // 1.4826 * MAD
};

template <typename Derived>
RobustStats robust_stats(const Eigen::DenseBase<Derived>& x) {
  std::vector<double> v = to_vector(x);
  RobustStats s;
  s.median = median_inplace(v);
  for (double& d : v) d = std::abs(d - s.median);
  s.mad = median_inplace(v);
  s.robust_std = 1.4826 * s.mad;
  return s;
}

// Population mean and standard deviation, accumulated row-major in double.
template <typename Derived>
std::pair<double, double> mean_std(const Eigen::DenseBase<Derived>& x) {
  const auto n = static_cast<double>(x.size());
  double sum = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) sum += static_cast<double>(x(r, c));
  const double mean = sum / n;
  double ss = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double d = static_cast<double>(x(r, c)) - mean;
      ss += d * d;
    }
  return {mean, std::sqrt(ss / n)};
}

}  // namespace s2plume
