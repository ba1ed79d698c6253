#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace arsim::opt {

struct Maximum {
  double x = 0.0;
  double value = -std::numeric_limits<double>::infinity();
};

/// Golden-section search for the maximum of a unimodal function on [lo, hi].
template <class F>
Maximum golden_section_maximize(F&& f, double lo, double hi, double tol = 1e-12, int max_iter = 200) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (hi - lo) > tol; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double x = 0.5 * (lo + hi);
  return {x, f(x)};
}

/// Coarse uniform grid to bracket the best point, then golden-section inside the
/// bracket. Endpoints are kept as candidates so boundary maxima are found.
template <class F>
Maximum maximize_on_interval(F&& f, double lo, double hi, int coarse_points = 64, double tol = 1e-12) {
  if (!(hi > lo)) return {lo, f(lo)};
  const int n = coarse_points < 2 ? 2 : coarse_points;
  const double step = (hi - lo) / (n - 1);
  Maximum best;
  int best_k = 0;
  for (int k = 0; k < n; ++k) {
    const double x = (k == n - 1) ? hi : lo + step * k;
    const double v = f(x);
    if (v > best.value) {
      best = {x, v};
      best_k = k;
    }
  }
  const double a = best_k == 0 ? lo : lo + step * (best_k - 1);
  const double b = best_k == n - 1 ? hi : lo + step * (best_k + 1);
  Maximum refined = golden_section_maximize(f, a, b, tol);
  return refined.value > best.value ? refined : best;
}

/// k-th point of the uniform grid {0, h, 2h, ..., upper} with `resolution` intervals.
inline double grid_point(double upper, int resolution, int k) {
  return k == resolution ? upper : upper * static_cast<double>(k) / resolution;
}

}  // namespace arsim::opt
