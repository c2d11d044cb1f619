#include <algorithm>
#include <cmath>

#include "ebcs/pce.hpp"

namespace ebcs::pce {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::Empty, "percentile of an empty vector");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Stats surrogate_stats(const Eigen::VectorXd& values, int bins) {
  if (values.size() == 0) throw Error(ErrorCode::Empty, "statistics of an empty vector");
  if (bins < 1) throw Error(ErrorCode::Validation, "histogram needs at least one bin");
  Stats s;
  const auto n = values.size();
  s.count = static_cast<long>(n);
  s.mean = compensated_sum(values) / static_cast<double>(n);
  s.std = n > 1 ? std::sqrt(compensated_sum((values.array() - s.mean).square().matrix()) / static_cast<double>(n - 1))
                : 0.0;
  s.min = values.minCoeff();
  s.max = values.maxCoeff();
  std::vector<double> v(values.data(), values.data() + n);
  std::sort(v.begin(), v.end());
  s.p5 = percentile(v, 5.0);
  s.p95 = percentile(v, 95.0);

  auto& h = s.histogram;
  h.lower = s.min;
  h.upper = s.max;
  if (h.upper <= h.lower) {
    h.lower -= 0.5;
    h.upper += 0.5;
  }
  h.counts.assign(bins, 0);
  const double width = (h.upper - h.lower) / bins;
  for (double x : v) {
    auto b = static_cast<long>(std::floor((x - h.lower) / width));
    h.counts[std::clamp<long>(b, 0, bins - 1)]++;
  }
  return s;
}

}  // namespace ebcs::pce
