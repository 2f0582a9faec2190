#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dgame {

using Vec = std::vector<double>;

// Axis-aligned box [lower, upper] in R^d.
struct Box {
  Vec lower;
  Vec upper;

  std::size_t dim() const { return lower.size(); }
  bool bounded() const;
  bool contains(std::span<const double> x, double slack = 0.0) const;
  // Componentwise projection; returns true if any coordinate moved.
  bool clamp(std::span<double> x) const;
  Vec midpoint() const;

  friend bool operator==(const Box&, const Box&) = default;
};

// Throws InvalidInput unless lower/upper have the same size and lower <= upper.
void validate_box(const Box& box, const std::string& what);

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
  for (double c : v)
    if (!std::isfinite(c)) return false;
  return true;
}

}  // namespace dgame
