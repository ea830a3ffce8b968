#include "ggpfr/optim.hpp"

#include <cmath>
#include <deque>

#include "ggpfr/errors.hpp"

namespace ggpfr {

namespace {

bool failed(double v) { return !std::isfinite(v) || v <= kPenaltyValue; }

struct Pair {
  Vector s;
  Vector y;
  double rho;
};

// Two-loop recursion for the minimization of -f; g is the gradient of -f.
Vector descent_direction(const std::deque<Pair>& mem, const Vector& g) {
  Vector q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t k = mem.size(); k-- > 0;) {
    alpha[k] = mem[k].rho * mem[k].s.dot(q);
    q -= alpha[k] * mem[k].y;
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < mem.size(); ++k) {
    const double beta = mem[k].rho * mem[k].y.dot(q);
    q += (alpha[k] - beta) * mem[k].s;
  }
  return -q;
}

}  // namespace

Vector fd_gradient(const ScalarObjective& f, const Vector& x, double f_x, double h, int* evals) {
  Vector g(x.size());
  Vector xp = x;
  int count = 0;
  for (Index k = 0; k < x.size(); ++k) {
    xp(k) = x(k) + h;
    const double fp = f(xp);
    xp(k) = x(k) - h;
    const double fm = f(xp);
    xp(k) = x(k);
    count += 2;
    const bool bad_p = failed(fp), bad_m = failed(fm);
    if (!bad_p && !bad_m)
      g(k) = (fp - fm) / (2 * h);
    else if (!bad_p && !failed(f_x))
      g(k) = (fp - f_x) / h;
    else if (!bad_m && !failed(f_x))
      g(k) = (f_x - fm) / h;
    else
      g(k) = 0.0;
  }
  if (evals) *evals += count;
  return g;
}

OptimResult lbfgs_maximize(const ScalarObjective& f, const Vector& x0, const OptimizerSettings& settings) {
  if (!(settings.tol > 0) || !(settings.fd_step > 0) || settings.history < 1)
    fail(ErrorClass::invalid_argument, "optimizer settings must be positive");
  OptimResult res;
  res.x = x0;
  res.value = f(x0);
  res.evaluations = 1;
  res.trace.push_back(res.value);
  if (failed(res.value)) return res;

  // Work with phi = -f.
  auto grad = [&](const Vector& x, double fx) {
    return Vector(-fd_gradient(f, x, fx, settings.fd_step, &res.evaluations));
  };
  Vector g = grad(res.x, res.value);
  std::deque<Pair> mem;

  while (res.iterations < settings.max_iterations && res.evaluations < settings.max_evals) {
    ++res.iterations;
    Vector d = descent_direction(mem, g);
    double slope = g.dot(d);
    if (!(slope < 0)) {
      mem.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    if (slope == 0.0) {
      res.converged = true;
      break;
    }
    // First steps are capped at unit length in parameter space.
    double step = mem.empty() ? std::min(1.0, 1.0 / d.norm()) : 1.0;
    Vector x_new;
    double f_new = kPenaltyValue;
    bool accepted = false;
    for (int bt = 0; bt < 40 && res.evaluations < settings.max_evals; ++bt) {
      x_new = res.x + step * d;
      f_new = f(x_new);
      ++res.evaluations;
      if (!failed(f_new) && -f_new <= -res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      res.converged = true;  // no ascent direction resolvable at this step size
      break;
    }
    const double change = std::abs(f_new - res.value) / std::max(1.0, std::abs(res.value));
    const Vector g_new = grad(x_new, f_new);
    Pair p{x_new - res.x, g_new - g, 0.0};
    const double sy = p.s.dot(p.y);
    if (sy > 1e-12 * p.s.norm() * p.y.norm()) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > settings.history) mem.pop_front();
    }
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    res.trace.push_back(res.value);
    if (change < settings.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace ggpfr
