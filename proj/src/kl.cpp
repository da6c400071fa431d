#include "mpmab/kl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mpmab/errors.hpp"

namespace mpmab {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error(std::string(what) + " must lie in [0, 1], got " +
                            std::to_string(p));
  }
}

// x log(x / y) with 0 log 0 = 0; y > 0 assumed when x > 0.
double xlogx_over_y(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

// d(mu, lambda) for lambda strictly inside (0, 1); no argument checks.
double kl_interior(double mu, double lambda) {
  return xlogx_over_y(mu, lambda) + xlogx_over_y(1.0 - mu, 1.0 - lambda);
}

}  // namespace

void KlSolverConfig::validate() const {
  if (!(tolerance > 0.0) || !std::isfinite(tolerance)) {
    throw ConfigError("tolerance must be positive", "solver.tolerance");
  }
  if (max_iterations < 1) {
    throw ConfigError("max_iterations must be >= 1", "solver.max_iterations");
  }
}

double bernoulli_kl(double mu, double lambda) {
  check_probability(mu, "mu");
  check_probability(lambda, "lambda");
  if (mu == lambda) return 0.0;
  if (lambda == 0.0 || lambda == 1.0) return kInfinity;
  const double d = kl_interior(mu, lambda);
  // Rounding can leave a tiny negative value when mu and lambda are adjacent.
  return std::max(d, 0.0);
}

double exploration_rate(double t, double c) {
  if (!(t >= 1.0)) {
    throw std::domain_error("exploration_rate needs t >= 1, got " + std::to_string(t));
  }
  if (!(c >= 0.0)) {
    throw std::domain_error("exploration_rate needs c >= 0");
  }
  const double log_t = std::log(t);
  double rate = log_t;
  if (c > 0.0 && log_t > 0.0) rate += c * std::log(log_t);
  return std::max(rate, 0.0);
}

double klucb_index(double mu_hat, std::uint64_t n, double f_t, const KlSolverConfig& cfg) {
  cfg.validate();
  check_probability(mu_hat, "mu_hat");
  if (!(f_t >= 0.0)) {
    throw std::domain_error("klucb_index needs f_t >= 0");
  }
  if (n == 0 || mu_hat == 1.0) return 1.0;

  const double budget = f_t / static_cast<double>(n);
  if (budget == 0.0) return mu_hat;

  // Pinsker: d(p, q) >= 2 (q - p)^2, so the root is below p + sqrt(budget / 2).
  double lo = mu_hat;
  double hi = std::min(1.0, mu_hat + std::sqrt(budget / 2.0));
  if (hi < 1.0 && kl_interior(mu_hat, hi) <= budget) return hi;
  for (int it = 0; it < cfg.max_iterations && hi - lo > cfg.tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kl_interior(mu_hat, mid) <= budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace mpmab
