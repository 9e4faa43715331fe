#pragma once

#include <cmath>
#include <functional>

namespace riplab {

/// One-dimensional maximization on [lo, hi] for unimodal (quasiconcave)
/// objectives. A coarse grid pre-scan brackets the best cell first, which
/// protects against the flat segments that show up when an objective
/// saturates, then golden-section tightens the bracket to absolute
/// tolerance tol on the argument.
struct Search1d {
  double argmax = 0.0;
  double value = 0.0;
};

inline Search1d golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                   double tol = 1e-10, int grid_points = 64) {
  Search1d out;
  if (!(hi > lo)) {
    out.argmax = lo;
    out.value = f(lo);
    return out;
  }

  // Pre-scan: locate the best grid node, then search its neighborhood.
  int best_i = 0;
  double best_v = f(lo);
  const double step = (hi - lo) / grid_points;
  for (int i = 1; i <= grid_points; ++i) {
    const double v = f(lo + step * i);
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  double a = lo + step * (best_i > 0 ? best_i - 1 : 0);
  double b = lo + step * (best_i < grid_points ? best_i + 1 : grid_points);

  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  out.argmax = 0.5 * (a + b);
  out.value = f(out.argmax);
  // The midpoint evaluation can land epsilon below a probed point on a
  // flat-topped objective; keep the best value seen.
  if (f1 > out.value) {
    out.argmax = x1;
    out.value = f1;
  }
  if (f2 > out.value) {
    out.argmax = x2;
    out.value = f2;
  }
  if (best_v > out.value) {
    out.argmax = lo + step * best_i;
    out.value = best_v;
  }
  return out;
}

inline Search1d golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                   double tol = 1e-10, int grid_points = 64) {
  Search1d flipped = golden_section_max([&f](double x) { return -f(x); }, lo, hi, tol, grid_points);
  flipped.value = -flipped.value;
  return flipped;
}

}  // namespace riplab
