#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "barma/dual.hpp"
#include "barma/math.hpp"

namespace {

TEST(LogGamma, MatchesStdLgamma) {
  for (double x : {1e-3, 0.04, 0.3, 0.5, 1.0, 1.5, 2.0, 5.0, 12.34, 100.0, 2500.0, 4e8}) {
    EXPECT_NEAR(barma::log_gamma(x), std::lgamma(x), 1e-12 * std::max(1.0, std::abs(std::lgamma(x))))
        << "x = " << x;
  }
}

TEST(LogGamma, KnownValues) {
  EXPECT_NEAR(barma::log_gamma(0.5), std::log(std::sqrt(std::numbers::pi)), 1e-14);
  EXPECT_NEAR(barma::log_gamma(1.0), 0.0, 1e-13);
  EXPECT_NEAR(barma::log_gamma(2.0), 0.0, 1e-13);
  EXPECT_NEAR(barma::log_gamma(5.0), std::log(24.0), 1e-13);
}

TEST(LogGamma, Recurrence) {
  for (double x = 0.05; x < 50.0; x += 0.763) {
    EXPECT_NEAR(barma::log_gamma(x + 1.0), barma::log_gamma(x) + std::log(x),
                1e-12 * std::max(1.0, std::abs(barma::log_gamma(x))));
  }
}

TEST(Digamma, Recurrence) {
  // psi(x+1) = psi(x) + 1/x within 1e-12 on [0.01, 100]
  for (double x = 0.01; x <= 100.0; x *= 1.17) {
    const double lhs = barma::digamma(x + 1.0);
    const double rhs = barma::digamma(x) + 1.0 / x;
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs))) << "x = " << x;
  }
}

TEST(Digamma, KnownValues) {
  constexpr double kEulerGamma = 0.57721566490153286;
  EXPECT_NEAR(barma::digamma(1.0), -kEulerGamma, 1e-12);
  EXPECT_NEAR(barma::digamma(0.5), -kEulerGamma - 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(barma::digamma(2.0), 1.0 - kEulerGamma, 1e-12);
}

TEST(LogSumExp, Basics) {
  std::vector<double> v{0.0, 0.0};
  EXPECT_NEAR(barma::log_sum_exp(v), std::log(2.0), 1e-15);
  std::vector<double> big{1000.0, 1000.0};
  EXPECT_NEAR(barma::log_sum_exp(big), 1000.0 + std::log(2.0), 1e-12);
  std::vector<double> inf{barma::kNegInf, 1.0};
  EXPECT_NEAR(barma::log_sum_exp(inf), 1.0, 1e-15);
}

TEST(Dual, ChainRule) {
  using barma::Dual;
  // f(x) = exp(log_gamma(x) - x*x); f'(x) = f-adjacent composite of rules
  const double x0 = 2.7;
  Dual x(x0, 1.0);
  Dual y = barma::exp(barma::log_gamma(x) - x * x);
  const double fv = std::exp(std::lgamma(x0) - x0 * x0);
  const double fd = fv * (barma::digamma(x0) - 2.0 * x0);
  EXPECT_NEAR(y.v, fv, 1e-14);
  EXPECT_NEAR(y.d, fd, 1e-13);
}

TEST(Dual, DivisionAndLog) {
  using barma::Dual;
  const double x0 = 0.37;
  Dual x(x0, 1.0);
  Dual y = barma::log(x / (1.0 - x));  // logit; derivative 1/(x(1-x))
  EXPECT_NEAR(y.v, std::log(x0 / (1.0 - x0)), 1e-15);
  EXPECT_NEAR(y.d, 1.0 / (x0 * (1.0 - x0)), 1e-12);
}

}  // namespace
