#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dmp/tape.hpp"

namespace dmp {

// Compares the tape gradient of f at x against central finite differences.
//
// f must be callable both as f(const std::vector<Value>&) -> Value and as
// f(const std::vector<double>&) -> double (a generic lambda with the
// `using std::sin;` ADL idiom). Returns the max over coordinates of
//   |analytic - fd| / max(1, |analytic|, |fd|).
template <class F>
double grad_check(F&& f, std::span<const double> x, double eps = 1e-5) {
  Tape tape;
  std::vector<Value> vx;
  vx.reserve(x.size());
  for (double xi : x) {
    vx.push_back(tape.lift(xi));
  }
  const Value y = f(vx);
  Tape::check_finite(y.v, "grad_check");
  const std::vector<double> grad = tape.backward(y);

  std::vector<double> probe(x.begin(), x.end());
  double max_rel = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double xi = probe[i];
    probe[i] = xi + eps;
    const double fp = f(probe);
    probe[i] = xi - eps;
    const double fm = f(probe);
    probe[i] = xi;
    Tape::check_finite(fp, "grad_check");
    Tape::check_finite(fm, "grad_check");
    const double fd = (fp - fm) / (2.0 * eps);
    const double analytic = grad[static_cast<std::size_t>(vx[i].id)];
    const double scale = std::max({1.0, std::abs(analytic), std::abs(fd)});
    max_rel = std::max(max_rel, std::abs(analytic - fd) / scale);
  }
  return max_rel;
}

}  // namespace dmp
