#include <doctest.h>

#include <cmath>

#include "kcontract/errors.hpp"
#include "kcontract/series.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace kcontract;

namespace {

Rational q(long long n, long long d = 1) { return Rational(n, d); }

void check_exact_sequence(const std::vector<Rational>& got, const std::vector<oracle::Fraction>& want) {
  REQUIRE(got.size() >= want.size());
  for (std::size_t n = 0; n < want.size(); ++n) CHECK(got[n] == q(want[n].num, want[n].den));
}

}  // namespace

TEST_CASE("drury-arveson reciprocal is 1 - t") {
  const KernelSpec k = drury_arveson_kernel(6);
  REQUIRE(k.exact());
  const std::vector<Rational> want{q(1), q(-1), q(0), q(0), q(0), q(0), q(0)};
  CHECK(*k.c_exact == want);
  CHECK(k.reciprocal_degree() == 1);
}

TEST_CASE("K_2 reciprocal is (1 - t)^2") {
  const KernelSpec k = build_kernel(std::function<Rational(int)>([](int n) { return q(n + 1); }), 4);
  const std::vector<Rational> want{q(1), q(-2), q(1), q(0), q(0)};
  CHECK(*k.c_exact == want);
}

TEST_CASE("dirichlet reciprocal matches the long-division oracle") {
  std::vector<oracle::Fraction> a;
  for (int n = 0; n <= 8; ++n) a.emplace_back(1, n + 1);
  const auto c = oracle::reciprocal(a);
  // frozen from the oracle
  CHECK(c[1] == oracle::Fraction(-1, 2));
  CHECK(c[2] == oracle::Fraction(-1, 12));
  CHECK(c[3] == oracle::Fraction(-1, 24));
  CHECK(c[4] == oracle::Fraction(-19, 720));
  CHECK(c[5] == oracle::Fraction(-3, 160));

  const KernelSpec k2 = dirichlet_kernel(2);
  const std::vector<Rational> want{q(1), q(-1, 2), q(-1, 12)};
  CHECK(*k2.c_exact == want);
  check_exact_sequence(*dirichlet_kernel(8).c_exact, c);
}

TEST_CASE("power family coefficients") {
  CHECK(*power_kernel(q(2), 3).a_exact == std::vector<Rational>{q(1), q(2), q(3), q(4)});
  CHECK(*power_kernel(q(1), 3).a_exact == std::vector<Rational>{q(1), q(1), q(1), q(1)});
  const auto half = oracle::binomial_series(1, 2, 2);
  CHECK(half[2] == oracle::Fraction(3, 8));
  check_exact_sequence(*power_kernel(q(1, 2), 2).a_exact, half);
  check_exact_sequence(*builtin_kernel("power", 12, std::string("7/3")).a_exact, oracle::binomial_series(7, 3, 12));
}

TEST_CASE("power(1) coincides with drury-arveson") {
  const KernelSpec p1 = power_kernel(q(1), 20);
  const KernelSpec da = drury_arveson_kernel(20);
  CHECK(*p1.a_exact == *da.a_exact);
  CHECK(*p1.c_exact == *da.c_exact);
  const KernelSpec pf = power_kernel(1.0, 20);
  CHECK(pf.exact());
  CHECK(*pf.a_exact == *da.a_exact);
}

TEST_CASE("integer powers are binomial coefficients") {
  for (int m = 1; m <= 5; ++m) {
    const KernelSpec k = power_kernel(q(m), 15);
    for (int n = 0; n <= 15; ++n) {
      Rational binom(1);
      for (int j = 1; j <= n; ++j) binom = binom * (m - 1 + j) / j;
      CHECK((*k.a_exact)[static_cast<std::size_t>(n)] == binom);
    }
  }
}

TEST_CASE("irrational exponent uses float mode with a 1e-12 convolution identity") {
  const KernelSpec k = power_kernel(std::sqrt(2.0), 32);
  CHECK_FALSE(k.exact());
  for (double r : reciprocal_residuals(k)) CHECK(r <= 1e-12);
}

TEST_CASE("decimal exponents are read exactly") {
  CHECK(parse_rational("0.75") == q(3, 4));
  CHECK(parse_rational("-2/6") == q(-1, 3));
  CHECK(parse_rational("12") == q(12));
  CHECK(parse_rational("012") == q(12));
  CHECK(parse_rational("-0.05") == q(-1, 20));
  CHECK(parse_rational("-1.25") == q(-5, 4));
  CHECK(parse_rational(".5") == q(1, 2));
  CHECK_THROWS_AS(parse_rational("1e3"), Error);
  CHECK_THROWS_AS(parse_rational("abc"), Error);
  CHECK(builtin_kernel("power", 4, std::string("0.5")).a_exact == power_kernel(q(1, 2), 4).a_exact);
}

TEST_CASE("build_kernel rejects bad coefficients") {
  auto kind_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::SchemaError;
  };
  CHECK(kind_of([] { build_kernel(std::vector<Rational>{q(1), q(1), q(0)}, 2); }) == ErrorKind::NonpositiveCoefficient);
  CHECK(kind_of([] { build_kernel(std::vector<Rational>{q(1), q(1), q(1), q(-1)}, 3); }) ==
        ErrorKind::NonpositiveCoefficient);
  CHECK(kind_of([] { build_kernel(std::vector<double>{2.0, 1.0}, 1); }) == ErrorKind::BadNormalization);
  CHECK(kind_of([] { power_kernel(q(0), 4); }) == ErrorKind::BadParameter);
  CHECK(kind_of([] { power_kernel(-0.5, 4); }) == ErrorKind::BadParameter);
  CHECK(kind_of([] { build_kernel(std::vector<Rational>{q(1), q(1)}, 3); }) == ErrorKind::BadParameter);
}

TEST_CASE("ratio diagnostics and r estimate") {
  const KernelSpec k2 = power_kernel(q(2), 10);
  CHECK(k2.ratio_inf == doctest::Approx(1.0 / 2.0));
  CHECK(k2.ratio_sup == doctest::Approx(10.0 / 11.0));
  CHECK(k2.r_estimate == doctest::Approx(10.0 / 11.0));
  const KernelSpec dir = dirichlet_kernel(10);
  CHECK(dir.ratio_sup == doctest::Approx(2.0));
  CHECK(dir.ratio_inf == doctest::Approx(11.0 / 10.0));
  const KernelSpec da = drury_arveson_kernel(10);
  CHECK(da.ratio_inf == 1.0);
  CHECK(da.ratio_sup == 1.0);
}

TEST_CASE("sign pattern of the reciprocal tail") {
  const SignReport da = nevanlinna_sign_check(drury_arveson_kernel(10));
  CHECK(da.eventually_nonpos);
  CHECK(da.nonpos_pivot == 1);
  const SignReport k2 = nevanlinna_sign_check(power_kernel(q(2), 10));
  CHECK(k2.eventually_nonneg);
  CHECK(k2.nonneg_pivot == 2);
  CHECK(k2.eventually_nonpos);
  CHECK(k2.nonpos_pivot == 3);
  const SignReport dir = nevanlinna_sign_check(dirichlet_kernel(8));
  CHECK(dir.eventually_nonpos);
  CHECK(dir.nonpos_pivot == 1);
  CHECK(dir.pivot_index == 1);
  CHECK(dir.horizon == 8);
}

TEST_CASE("essential normality diagnostic") {
  for (double v : essential_normality_diagnostic(drury_arveson_kernel(12))) CHECK(v == 0.0);
  const auto dir = essential_normality_diagnostic(dirichlet_kernel(12));
  CHECK(dir[0] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(std::abs(dir.back()) < std::abs(dir.front()));
  const auto k2 = essential_normality_diagnostic(power_kernel(q(2), 12));
  CHECK(k2[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  // closed form for K_2: (n+1)/(n+2) - n/(n+1)
  for (std::size_t i = 0; i < k2.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    CHECK(k2[i] == doctest::Approx((n + 1) / (n + 2) - n / (n + 1)).epsilon(1e-13));
  }
}

TEST_CASE("k evaluation agrees with the truncated series inside the disc") {
  for (const KernelSpec& k : {drury_arveson_kernel(80), power_kernel(q(2), 80), power_kernel(q(1, 2), 80),
                              dirichlet_kernel(80)}) {
    for (cplx t : {cplx(0.0), cplx(0.3, 0.1), cplx(-0.4, 0.0), cplx(0.0, 0.5)}) {
      CHECK(std::abs(k.k(t) - k.k_series(t)) < 1e-12);
    }
  }
}

TEST_CASE("property: the Cauchy product of a and c is the delta sequence") {
  Rng rng(20261016);
  for (int trial = 0; trial < 40; ++trial) {
    const int n_max = 3 + static_cast<int>(rng() % 10);
    const auto a = gen::rational_coefficients(n_max, rng);
    const KernelSpec k = build_kernel(a, n_max);
    INFO("trial " << trial);
    CHECK(reciprocal_identity_exact(k));
    for (int n = 0; n <= n_max; ++n) {
      Rational s(0);
      for (int j = 0; j <= n; ++j) s += a[static_cast<std::size_t>(j)] * (*k.c_exact)[static_cast<std::size_t>(n - j)];
      CHECK(s == (n == 0 ? Rational(1) : Rational(0)));
    }
    CHECK(k.ratio_inf > 0.0);
    CHECK(k.ratio_inf <= k.ratio_sup);
  }
}

TEST_CASE("property: F coefficients are the shifted a sequence, t F(t) + 1 = k(t)") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = gen::rational_coefficients(12, rng);
    const KernelSpec k = build_kernel(a, 12);
    for (int n = 0; n < 12; ++n) CHECK(k.f_coefficient(n) == k.a[static_cast<std::size_t>(n) + 1]);
    const cplx t(0.2, -0.1);
    cplx f = 0.0, tn = 1.0;
    for (int n = 0; n < 12; ++n, tn *= t) f += k.f_coefficient(n) * tn;
    CHECK(std::abs(t * f + 1.0 - k.k_series(t)) < 1e-13);
  }
}
