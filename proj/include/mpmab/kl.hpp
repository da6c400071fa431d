#pragma once

#include <cstdint>
#include <limits>

namespace mpmab {

// Bisection parameters for the KL-UCB index inversion.
struct KlSolverConfig {
  double tolerance = 1e-9;     // absolute, on q
  int max_iterations = 100;

  void validate() const;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Bernoulli Kullback-Leibler divergence d(mu, lambda).
///
/// Uses 0 log 0 = 0. Returns kInfinity when lambda sits on the boundary
/// {0, 1} and differs from mu. Throws std::domain_error when either
/// argument lies outside [0, 1].
double bernoulli_kl(double mu, double lambda);

/// Exploration rate log t + c log log t, clamped below at zero.
double exploration_rate(double t, double c = 0.0);

/// Largest q in [0, 1] with n * d(mu_hat, q) <= f_t.
///
/// An unvisited arm (n == 0) and mu_hat == 1 both give exactly 1. Otherwise
/// the result is found by bisection on [mu_hat, 1] and lies within
/// cfg.tolerance of the true root.
double klucb_index(double mu_hat, std::uint64_t n, double f_t,
                   const KlSolverConfig& cfg = {});

}  // namespace mpmab
