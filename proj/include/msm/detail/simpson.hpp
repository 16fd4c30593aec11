#pragma once

#include <cmath>
#include <vector>

namespace msm {

template <class F>
double adaptive_simpson(F&& f, double lo, double hi, double tol, int max_levels) {
  if (hi <= lo) return 0.0;
  int n = 16;
  const double h0 = (hi - lo) / n;
  // Sums of odd and even interior nodes are reused across levels.
  double ends = f(lo) + f(hi);
  double evens = 0.0, odds = 0.0;
  for (int i = 1; i < n; ++i) (i % 2 ? odds : evens) += f(lo + i * h0);
  double h = h0;
  double prev = h / 3.0 * (ends + 4.0 * odds + 2.0 * evens);
  for (int level = 0; level < max_levels; ++level) {
    evens += odds;
    odds = 0.0;
    h *= 0.5;
    n *= 2;
    for (int i = 1; i < n; i += 2) odds += f(lo + i * h);
    const double cur = h / 3.0 * (ends + 4.0 * odds + 2.0 * evens);
    if (std::abs(cur - prev) < tol) return cur;
    prev = cur;
  }
  throw QuadratureError("Simpson refinement did not reach tolerance");
}

}  // namespace msm
