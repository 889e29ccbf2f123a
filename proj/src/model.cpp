#include "difflan/model.hpp"

#include <algorithm>
#include <cmath>

namespace difflan {

InvariantDensity::InvariantDensity(const DriftSpec& drift, const Grid& grid)
    : drift_(drift), grid_(grid) {
  const std::size_t n = grid_.size();
  values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    values_[i] = std::exp(drift_.antiderivative(grid_.node(i)));
  }
  normalizer_ = grid_.integrate(values_);
  for (double& v : values_) v /= normalizer_;
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_value_ = *lo;
  max_value_ = *hi;
}

double InvariantDensity::log_value_at(double x) const {
  return drift_.antiderivative(x) - std::log(normalizer_);
}

}  // namespace difflan
