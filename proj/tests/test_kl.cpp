#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>

#include "mpmab/kl.hpp"
#include "mpmab/errors.hpp"

using namespace mpmab;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

// Closed form for mu_hat = 1/2: d(1/2, q) = -log(4 q (1 - q)) / 2.
double half_mean_index(double n, double f) {
  return 0.5 * (1.0 + std::sqrt(1.0 - std::exp(-2.0 * f / n)));
}

}  // namespace

TEST_CASE("bernoulli_kl examples") {
  CHECK(bernoulli_kl(0.5, 0.5) == 0.0);
  CHECK(bernoulli_kl(0.5, 1.0) == kInfinity);
  CHECK(bernoulli_kl(0.5, 0.0) == kInfinity);
  CHECK(bernoulli_kl(0.0, 0.0) == 0.0);
  CHECK(bernoulli_kl(1.0, 1.0) == 0.0);

  const Big expected = Big("0.8") * boost::multiprecision::log(Big(9));
  CHECK(bernoulli_kl(0.9, 0.1) == doctest::Approx(expected.convert_to<double>()).epsilon(1e-14));
  CHECK(bernoulli_kl(0.9, 0.1) == doctest::Approx(1.757780).epsilon(1e-6));
}

TEST_CASE("bernoulli_kl boundary mean against a positive lambda") {
  // 0 log 0 = 0 leaves a single term.
  CHECK(bernoulli_kl(0.0, 0.3) == doctest::Approx(-std::log(0.7)));
  CHECK(bernoulli_kl(1.0, 0.3) == doctest::Approx(-std::log(0.3)));
}

TEST_CASE("bernoulli_kl rejects arguments outside [0, 1]") {
  CHECK_THROWS_AS(bernoulli_kl(-0.1, 0.5), std::domain_error);
  CHECK_THROWS_AS(bernoulli_kl(0.5, 1.5), std::domain_error);
  CHECK_THROWS_AS(bernoulli_kl(std::nan(""), 0.5), std::domain_error);
}

TEST_CASE("exploration_rate") {
  CHECK(exploration_rate(1.0) == 0.0);
  CHECK(exploration_rate(std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-15));
  const Big log100 = boost::multiprecision::log(Big(100));
  CHECK(exploration_rate(100.0) == doctest::Approx(log100.convert_to<double>()).epsilon(1e-15));
  CHECK(exploration_rate(100.0) == doctest::Approx(4.605170).epsilon(1e-6));
  // log log t < 0 for t < e; the clamp keeps the rate nonnegative.
  CHECK(exploration_rate(1.0, 3.0) == 0.0);
  CHECK(exploration_rate(2.0, 3.0) >= 0.0);
  CHECK(exploration_rate(100.0, 3.0) ==
        doctest::Approx(std::log(100.0) + 3.0 * std::log(std::log(100.0))));
  CHECK_THROWS_AS(exploration_rate(0.5), std::domain_error);
}

TEST_CASE("klucb_index examples") {
  CHECK(klucb_index(0.7, 0, 123.0) == 1.0);
  CHECK(klucb_index(1.0, 50, 2.0) == 1.0);
  CHECK(klucb_index(0.3, 10, 0.0) == 0.3);
  const double q = klucb_index(0.5, 10, 4.605170);
  CHECK(q == doctest::Approx(half_mean_index(10, 4.605170)).epsilon(1e-8));
  // The quoted reference value is rounded in its fifth digit; the closed form above is authoritative.
  CHECK(q == doctest::Approx(0.887928).epsilon(5e-5));
}

TEST_CASE("klucb_index validates its inputs") {
  CHECK_THROWS_AS(klucb_index(0.5, 3, 1.0, KlSolverConfig{0.0, 100}), ConfigError);
  CHECK_THROWS_AS(klucb_index(0.5, 3, 1.0, KlSolverConfig{1e-9, 0}), ConfigError);
  CHECK_THROWS_AS(klucb_index(1.5, 3, 1.0), std::domain_error);
  CHECK_THROWS_AS(klucb_index(0.5, 3, -1.0), std::domain_error);
}

TEST_CASE("klucb_index honours max_iterations") {
  // One bisection step on the Pinsker bracket leaves the midpoint or the lower end.
  const double coarse = klucb_index(0.5, 10, 4.6, KlSolverConfig{1e-9, 1});
  const double fine = klucb_index(0.5, 10, 4.6);
  CHECK(coarse <= fine);
  CHECK(coarse >= 0.5);
}

TEST_CASE("klucb_index matches the closed form at mu_hat = 1/2") {
  const KlSolverConfig cfg;
  for (int n : {1, 2, 5, 10, 30, 100, 1000, 10000, 100000, 1000000}) {
    for (double f : {0.01, 0.1, 0.5, 1.0, 2.0, 4.6, 7.0, 10.0, 14.0, 20.0}) {
      CAPTURE(n);
      CAPTURE(f);
      CHECK(std::abs(klucb_index(0.5, n, f, cfg) - half_mean_index(n, f)) <= 10 * cfg.tolerance);
    }
  }
}

TEST_CASE("divergence invariants on a dense grid") {
  const int steps = 200;
  for (int i = 0; i <= steps; ++i) {
    const double p = static_cast<double>(i) / steps;
    CHECK(bernoulli_kl(p, p) == 0.0);
    double prev = 0.0;
    for (int j = 0; j <= steps; ++j) {
      const double q = static_cast<double>(j) / steps;
      const double d = bernoulli_kl(p, q);
      if (d < 2 * (p - q) * (p - q) - 1e-15) FAIL("Pinsker violated at p=" << p << " q=" << q);
      if (p != q && q > 0.0 && q < 1.0 && !(d > 0.0)) FAIL("not positive at p=" << p << " q=" << q);
      if (q >= p) {
        if (d < prev) FAIL("not nondecreasing at p=" << p << " q=" << q);
        prev = d;
      }
    }
  }
}

TEST_CASE("klucb_index monotonicity and range") {
  for (double mu : {0.0, 0.05, 0.3, 0.5, 0.77, 0.99, 1.0}) {
    double prev_f = -1.0;
    for (double f = 0.0; f <= 15.0; f += 0.5) {
      const double q = klucb_index(mu, 20, f);
      CHECK(q >= mu);
      CHECK(q <= 1.0);
      CHECK(q >= prev_f);
      prev_f = q;
    }
    double prev_n = 2.0;
    for (std::uint64_t n = 1; n < 5000; n = n * 3 / 2 + 1) {
      const double q = klucb_index(mu, n, 6.0);
      CHECK(q <= prev_n);
      prev_n = q;
    }
  }
}

TEST_CASE("klucb_index result is feasible and tight") {
  const KlSolverConfig cfg;
  for (double mu : {0.0, 0.01, 0.2, 0.5, 0.9, 0.999}) {
    for (std::uint64_t n : {1u, 7u, 100u, 100000u}) {
      for (double f : {0.3, 3.0, 12.0}) {
        const double q = klucb_index(mu, n, f, cfg);
        CHECK(static_cast<double>(n) * bernoulli_kl(mu, q) <= f);
        const double above = std::min(1.0, q + 2 * cfg.tolerance);
        if (above < 1.0) CHECK(static_cast<double>(n) * bernoulli_kl(mu, above) > f);
        CHECK(q < 1.0);
      }
    }
  }
}
