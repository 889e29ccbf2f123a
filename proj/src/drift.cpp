#include "difflan/drift.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "difflan/errors.hpp"

namespace difflan {

namespace {
constexpr double kPi = std::numbers::pi;

void check_domain(double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("DriftSpec: argument outside [0,1]");
  }
}
}  // namespace

DriftSpec DriftSpec::sine(std::vector<double> coefficients) {
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw std::invalid_argument("DriftSpec: non-finite coefficient");
  }
  while (!coefficients.empty() && coefficients.back() == 0.0) coefficients.pop_back();
  return DriftSpec(Kind::Sine, std::move(coefficients), 0.0);
}

DriftSpec DriftSpec::constant(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("DriftSpec: non-finite constant");
  return DriftSpec(Kind::Constant, {}, value);
}

bool DriftSpec::is_zero() const {
  if (kind_ == Kind::Constant) return constant_ == 0.0;
  return coefficients_.empty();
}

double DriftSpec::operator()(double x) const {
  check_domain(x);
  if (kind_ == Kind::Constant) return constant_;
  double v = 0.0;
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    v += coefficients_[k] * std::sin(static_cast<double>(k + 1) * kPi * x);
  }
  return v;
}

double DriftSpec::antiderivative(double x) const {
  check_domain(x);
  if (kind_ == Kind::Constant) return constant_ * x;
  double v = 0.0;
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    const double kpi = static_cast<double>(k + 1) * kPi;
    v += coefficients_[k] * (1.0 - std::cos(kpi * x)) / kpi;
  }
  return v;
}

double DriftSpec::c1_bound() const {
  if (kind_ == Kind::Constant) return std::abs(constant_);
  double v = 0.0;
  for (std::size_t k = 0; k < coefficients_.size(); ++k) {
    v += std::abs(coefficients_[k]) * (1.0 + static_cast<double>(k + 1) * kPi);
  }
  return v;
}

DriftSpec DriftSpec::scaled(double factor) const {
  if (kind_ == Kind::Constant) return constant(factor * constant_);
  std::vector<double> c = coefficients_;
  for (double& v : c) v *= factor;
  return sine(std::move(c));
}

DriftSpec DriftSpec::plus(const DriftSpec& other, double factor) const {
  if (kind_ != Kind::Sine || other.kind_ != Kind::Sine) {
    throw ConfigError("DriftSpec::plus: both drifts must be sine series");
  }
  std::vector<double> c(std::max(coefficients_.size(), other.coefficients_.size()), 0.0);
  for (std::size_t k = 0; k < coefficients_.size(); ++k) c[k] += coefficients_[k];
  for (std::size_t k = 0; k < other.coefficients_.size(); ++k) {
    c[k] += factor * other.coefficients_[k];
  }
  return sine(std::move(c));
}

DriftSpec DriftSpec::from_json(const nlohmann::json& j) {
  if (j.contains("sine")) {
    return sine(j.at("sine").get<std::vector<double>>());
  }
  if (j.contains("constant")) {
    return constant(j.at("constant").get<double>());
  }
  throw ConfigError("DriftSpec: expected {\"sine\": [...]} or {\"constant\": c}");
}

nlohmann::json DriftSpec::to_json() const {
  if (kind_ == Kind::Constant) return {{"constant", constant_}};
  return {{"sine", coefficients_}};
}

}  // namespace difflan
