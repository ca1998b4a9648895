#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qacal {

// Below this slope magnitude the b = -d/a conversion is numerically unstable
// and difficulty is reported as such.
inline constexpr double kSlopeEps = 1e-6;

// b = -d/a, or nullopt when |a| < kSlopeEps.
std::optional<double> slope_intercept_to_difficulty(double a, double d);

// 2PL item: P(correct) = logistic(a * (theta - b)) = logistic(a * theta + d).
// d is the primary encoding; b is derived and absent when the slope is
// too flat to divide by.
struct Dichotomous2PL {
  double a = 1.0;
  double d = 0.0;
  std::optional<double> b;

  static Dichotomous2PL from_ab(double a, double b);
  static Dichotomous2PL from_ad(double a, double d);
};

// Graded-response item with ordered thresholds on the theta scale.
// category_map sends each declared category 1..K_declared to a modeled
// category 1..K_modeled (collapsing categories nobody picked).
struct GradedParams {
  double a = 1.0;
  std::vector<double> thresholds;  // strictly increasing, size = K_modeled - 1
  std::vector<int> category_map;   // index c-1 holds the modeled category for declared c

  int n_modeled() const { return static_cast<int>(thresholds.size()) + 1; }
  int n_declared() const { return static_cast<int>(category_map.size()); }
  int remap(int declared_category) const { return category_map[declared_category - 1]; }

  // Identity map for K declared categories.
  static std::vector<int> identity_map(int k);

  // Throws InvalidInputError when thresholds are not strictly increasing or
  // the map is not surjective onto 1..K_modeled.
  void validate() const;
};

struct ItemParams {
  std::string id;
  std::variant<Dichotomous2PL, GradedParams> params;

  bool is_dichotomous() const { return std::holds_alternative<Dichotomous2PL>(params); }
  const Dichotomous2PL& dich() const { return std::get<Dichotomous2PL>(params); }
  Dichotomous2PL& dich() { return std::get<Dichotomous2PL>(params); }
  const GradedParams& graded() const { return std::get<GradedParams>(params); }
  GradedParams& graded() { return std::get<GradedParams>(params); }
  double discrimination() const;
};

}  // namespace qacal
