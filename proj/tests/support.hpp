#ifndef TDPWM_TESTS_SUPPORT_HPP
#define TDPWM_TESTS_SUPPORT_HPP

// Test-only reference computations. None of these reuse the closed-form
// machinery they are compared against.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "tdpwm/params.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/response.hpp"
#include "tdpwm/svpwm.hpp"

namespace tdpwm::ref {

/// Adaptive Gauss-Kronrod (7/15) quadrature of a smooth integrand.
inline double integrate_gk(const std::function<double(double)>& f, double a,
                           double b, double tol = 1e-14, int depth = 0) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k15 = wk[7] * f(c), g7 = wg[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double f1 = f(c - h * xk[i]), f2 = f(c + h * xk[i]);
    k15 += wk[i] * (f1 + f2);
    if (i % 2 == 1) g7 += wg[i / 2] * (f1 + f2);
  }
  k15 *= h;
  g7 *= h;
  if (std::abs(k15 - g7) <= tol * std::max(1.0, std::abs(k15)) || depth > 40) {
    return k15;
  }
  return integrate_gk(f, a, c, tol, depth + 1) + integrate_gk(f, c, b, tol, depth + 1);
}

/// Integral over [a, b] split at the given breakpoints (unsorted is fine).
inline double integrate_piecewise(const std::function<double(double)>& f, double a,
                                  double b, std::vector<double> breaks,
                                  double tol = 1e-14) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = std::max(a, breaks[k]), hi = std::min(b, breaks[k + 1]);
    if (hi - lo > 1e-15) acc += integrate_gk(f, lo, hi, tol);
  }
  return acc;
}

/// Every point in [0, 1) where some line voltage of the pattern switches.
inline std::vector<double> all_switching_points(const SwitchingPattern& sp) {
  std::vector<double> pts;
  for (double b : sp.instants()) {
    for (double h : {0.0, 0.5}) {
      for (double s : {0.0, 1.0 / 3.0, 2.0 / 3.0}) {
        double x = b + h + s;
        x -= std::floor(x);
        pts.push_back(x);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  return pts;
}

/// B_1..B_{2N+1} from the textbook formula with raw exponentials; only safe
/// for moderate alpha.
inline std::vector<double> direct_b(const std::vector<double>& beta, double alpha,
                                    double v0) {
  const std::size_t n2 = beta.size();
  double sum = 0.0;
  for (std::size_t j = 1; j <= n2; ++j) {
    sum += ((j % 2 == 0) ? 1.0 : -1.0) * std::exp(alpha * beta[j - 1]);
  }
  const double b_last = v0 * sum / (1.0 + std::exp(-alpha / 2.0));
  std::vector<double> b(n2 + 1);
  b[0] = -b_last * std::exp(-alpha / 2.0);
  for (std::size_t j = 1; j <= n2; ++j) {
    b[j] = b[j - 1] + v0 * ((j % 2 == 0) ? 1.0 : -1.0) * std::exp(alpha * beta[j - 1]);
  }
  return b;
}

/// v_R,ab on (0, 1/2) straight from the B coefficients.
inline double direct_vrab(const std::vector<double>& b, const std::vector<double>& beta,
                          double alpha, double v0, double x) {
  std::size_t seg = 0;
  while (seg < beta.size() && x >= beta[seg]) ++seg;
  const double level = (seg % 2 == 1) ? v0 : 0.0;
  return b[seg] * std::exp(-alpha * x) + level;
}

/// Parameters at the given alpha and depth with V0 = 300 V, R = 27 ohm, f = 60 Hz.
inline InverterParams scaled_params(double alpha, double depth, int pulses) {
  return derive_scaled_params(alpha, depth, 300.0, 27.0, 60.0, pulses);
}

/// A generic valid pattern: SVPWM at a random depth, every free instant
/// jittered by up to 40 % of the smallest gap.
template <class Rng>
FreePattern random_pattern(int pulses, double alpha, Rng& rng,
                           double depth_lo = 0.3, double depth_hi = 0.95) {
  std::uniform_real_distribution<double> depth(depth_lo, depth_hi);
  const InverterParams p = scaled_params(alpha, depth(rng), pulses);
  return jittered_svpwm(p, rng, 0.4);
}

/// Central difference of f along coordinate k.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x, std::size_t k, double h) {
  x[k] += h;
  const double fp = f(x);
  x[k] -= 2.0 * h;
  const double fm = f(x);
  return (fp - fm) / (2.0 * h);
}

}  // namespace tdpwm::ref

#endif  // TDPWM_TESTS_SUPPORT_HPP
