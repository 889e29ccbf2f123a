#include "difflan/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace difflan {

namespace {
bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }
}  // namespace

Grid::Grid(std::size_t n_cells) : n_(n_cells) {
  if (n_cells < 16 || !is_power_of_two(n_cells)) {
    throw std::invalid_argument("Grid: cell count must be a power of two >= 16");
  }
  nodes_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) nodes_[i] = node(i);
}

double Grid::integrate(std::span<const double> f) const {
  double s = 0.0;
  for (double v : f) s += v;
  return s / static_cast<double>(n_);
}

double Grid::inner(std::span<const double> f, std::span<const double> g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += f[i] * g[i];
  return s / static_cast<double>(n_);
}

double Grid::inner(std::span<const double> f, std::span<const double> g,
                   std::span<const double> weight) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += f[i] * g[i] * weight[i];
  return s / static_cast<double>(n_);
}

double Grid::norm(std::span<const double> f) const {
  return std::sqrt(inner(f, f));
}

double Grid::norm(std::span<const double> f, std::span<const double> weight) const {
  return std::sqrt(inner(f, f, weight));
}

std::vector<double> Grid::derivative(std::span<const double> f) const {
  const double invh = static_cast<double>(n_);
  std::vector<double> d(n_);
  for (std::size_t i = 1; i + 1 < n_; ++i) {
    d[i] = 0.5 * invh * (f[i + 1] - f[i - 1]);
  }
  d[0] = 0.5 * invh * (-3.0 * f[0] + 4.0 * f[1] - f[2]);
  d[n_ - 1] = 0.5 * invh * (3.0 * f[n_ - 1] - 4.0 * f[n_ - 2] + f[n_ - 3]);
  return d;
}

Grid::Locator Grid::locate(double x) const {
  const double t = x * static_cast<double>(n_) - 0.5;
  if (t <= 0.0) return {0, 0.0};
  const auto last = static_cast<double>(n_ - 1);
  if (t >= last) return {n_ - 2, 1.0};
  const auto cell = static_cast<std::size_t>(t);
  return {std::min(cell, n_ - 2), t - static_cast<double>(cell)};
}

double Grid::interpolate(std::span<const double> f, double x) const {
  const Locator loc = locate(x);
  return f[loc.cell] * (1.0 - loc.frac) + f[loc.cell + 1] * loc.frac;
}

}  // namespace difflan
