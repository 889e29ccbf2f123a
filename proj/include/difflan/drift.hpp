#pragma once

#include <span>
#include <vector>

#include <json.hpp>

namespace difflan {

/// Drift function on [0,1]. Two variants:
///   - sine series b(x) = sum_k c_k sin(k pi x), which vanishes at both
///     endpoints by construction and has a closed-form antiderivative;
///   - a constant drift, admitted for closed-form oracle tests only
///     (it does not vanish at the boundary).
/// Tabulated drifts are deliberately not representable.
class DriftSpec {
 public:
  static DriftSpec sine(std::vector<double> coefficients);
  static DriftSpec constant(double value);
  static DriftSpec zero() { return sine({}); }

  bool is_sine() const { return kind_ == Kind::Sine; }
  bool is_constant() const { return kind_ == Kind::Constant; }
  bool is_zero() const;

  /// b(x). Throws std::domain_error outside [0,1].
  double operator()(double x) const;

  /// Exact antiderivative B(x) = int_0^x b, B(0) = 0.
  double antiderivative(double x) const;

  /// sum_k |c_k| (1 + k pi), an upper bound for ||b||_inf + ||b'||_inf.
  /// Callers compare it against the configured admissible-ball radius.
  double c1_bound() const;

  std::span<const double> coefficients() const { return coefficients_; }
  double constant_value() const { return constant_; }

  DriftSpec scaled(double factor) const;

  /// this + factor * other; both sides must be sine series.
  DriftSpec plus(const DriftSpec& other, double factor = 1.0) const;

  /// {"sine": [c_1, ..., c_K]} or {"constant": c}.
  static DriftSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool operator==(const DriftSpec& other) const = default;

 private:
  enum class Kind { Sine, Constant };
  DriftSpec(Kind kind, std::vector<double> coefficients, double constant)
      : kind_(kind), coefficients_(std::move(coefficients)), constant_(constant) {}

  Kind kind_;
  std::vector<double> coefficients_;
  double constant_ = 0.0;
};

}  // namespace difflan
