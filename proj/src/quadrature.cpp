#include "ggpfr/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "ggpfr/errors.hpp"

namespace ggpfr {

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1) fail(ErrorClass::invalid_argument, "Gauss-Hermite rule needs at least one node");
  static std::map<int, GaussHermiteRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  // Probabilists' Hermite recurrence: off-diagonal sqrt(k).
  Matrix jacobi = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = eig.eigenvectors().row(0).transpose().array().square().matrix();
  rule.weights /= rule.weights.sum();
  return cache.emplace(n, std::move(rule)).first->second;
}

double normal_expectation(const std::function<double(double)>& f, double mean, double var, int nodes) {
  if (!(var >= 0)) fail(ErrorClass::invalid_argument, "normal_expectation: negative variance");
  if (var == 0.0) return f(mean);
  const auto& rule = gauss_hermite(nodes);
  const double sd = std::sqrt(var);
  double acc = 0.0;
  for (Index i = 0; i < rule.nodes.size(); ++i) acc += rule.weights(i) * f(mean + sd * rule.nodes(i));
  return acc;
}

}  // namespace ggpfr
