#pragma once

// Test-only numerical references: fixed-step RK4 for the linear pendulum and
// plain bisection on scalar functions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace safenav::testing {

struct AxisState {
  double p = 0.0;
  double v = 0.0;
};

// Integrates p'' = omega^2 (p - p_foot) with RK4.
inline AxisState rk4_axis(AxisState s, double p_foot, double omega, double t,
                          double h = 1e-5) {
  const double w2 = omega * omega;
  auto acc = [&](double p) { return w2 * (p - p_foot); };
  double done = 0.0;
  while (done < t) {
    const double step = std::min(h, t - done);
    const double k1p = s.v, k1v = acc(s.p);
    const double k2p = s.v + 0.5 * step * k1v, k2v = acc(s.p + 0.5 * step * k1p);
    const double k3p = s.v + 0.5 * step * k2v, k3v = acc(s.p + 0.5 * step * k2p);
    const double k4p = s.v + step * k3v, k4v = acc(s.p + step * k3p);
    s.p += step / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
    s.v += step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    done += step;
  }
  return s;
}

// Integrates until `stop(state)` turns true or t_max elapses. Returns the
// elapsed time, or a negative value when the condition never fired.
inline double rk4_until(AxisState& s, double p_foot, double omega,
                        const std::function<bool(const AxisState&)>& stop,
                        double t_max, double h = 1e-5) {
  double t = 0.0;
  while (t < t_max) {
    if (stop(s)) return t;
    s = rk4_axis(s, p_foot, omega, h, h);
    t += h;
  }
  return stop(s) ? t : -1.0;
}

inline double bisect(const std::function<double(double)>& f, double lo,
                     double hi, double tol = 1e-13) {
  double flo = f(lo);
  if (flo * f(hi) > 0.0) throw std::invalid_argument("bisect: no sign change");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace safenav::testing
