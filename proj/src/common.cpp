#include "dgame/common.hpp"

#include <algorithm>

#include "dgame/errors.hpp"

namespace dgame {

bool Box::bounded() const {
  for (std::size_t k = 0; k < dim(); ++k)
    if (!std::isfinite(lower[k]) || !std::isfinite(upper[k])) return false;
  return true;
}

bool Box::contains(std::span<const double> x, double slack) const {
  if (x.size() != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k)
    if (x[k] < lower[k] - slack || x[k] > upper[k] + slack) return false;
  return true;
}

bool Box::clamp(std::span<double> x) const {
  bool moved = false;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double c = std::clamp(x[k], lower[k], upper[k]);
    if (c != x[k]) {
      x[k] = c;
      moved = true;
    }
  }
  return moved;
}

Vec Box::midpoint() const {
  Vec m(dim());
  for (std::size_t k = 0; k < dim(); ++k) m[k] = 0.5 * (lower[k] + upper[k]);
  return m;
}

void validate_box(const Box& box, const std::string& what) {
  if (box.lower.size() != box.upper.size())
    throw InvalidInput(what + ": lower and upper have different dimensions");
  if (box.lower.empty()) throw InvalidInput(what + ": zero-dimensional box");
  for (std::size_t k = 0; k < box.dim(); ++k) {
    if (std::isnan(box.lower[k]) || std::isnan(box.upper[k]) || box.lower[k] > box.upper[k])
      throw InvalidInput(what + ": lower > upper in coordinate " + std::to_string(k));
  }
}

}  // namespace dgame
