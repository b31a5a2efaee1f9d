#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "geoxray/errors.hpp"

namespace geoxray {

struct PowerIterationResult {
  double value = 0.0;
  std::vector<double> rayleigh;
};

/// Power iteration for a symmetric positive semidefinite operator in the
/// inner product `dot`. `apply` maps a vector to a vector of the same type.
/// Rayleigh quotients of such an operator are nondecreasing.
template <typename Vec, typename Apply, typename Dot>
PowerIterationResult power_iteration(Apply&& apply, Dot&& dot, Vec x, int iters) {
  PowerIterationResult out;
  double nx = std::sqrt(dot(x, x));
  if (!(nx > 0.0)) return out;
  for (int it = 0; it < iters; ++it) {
    for (auto& v : x.raw()) v /= nx;
    Vec ax = apply(x);
    const double q = dot(ax, x);
    const double nax = std::sqrt(dot(ax, ax));
    if (!std::isfinite(q) || !std::isfinite(nax))
      throw NumericalError("power iteration produced a non-finite value at step " +
                           std::to_string(it));
    out.rayleigh.push_back(q);
    out.value = q;
    if (nax == 0.0) break;
    x = std::move(ax);
    nx = nax;
  }
  return out;
}

}  // namespace geoxray
