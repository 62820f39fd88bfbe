#pragma once

// Scalar coefficient calculus of the kernel k(t) = sum_n a_n t^n: the reciprocal
// coefficients c_n of 1/k, ratio diagnostics and finite-horizon admissibility checks.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "kcontract/linalg.hpp"

namespace kcontract {

using Rational = boost::multiprecision::cpp_rational;

enum class KernelFamily { DruryArveson, Power, Dirichlet, Explicit };

std::string_view to_string(KernelFamily family);

/// Truncated coefficient data of a unitarily invariant kernel K(z,w) = k(<z,w>).
///
/// All stored sequences have length max_degree + 1. When the generator was rational
/// the exact sequences are kept and `a`, `c` are their double images.
struct KernelSpec {
  std::string name;
  KernelFamily family = KernelFamily::Explicit;
  std::optional<Rational> nu_exact;  // power family exponent, when rational
  double nu = 0.0;                   // power family exponent

  int max_degree = 0;
  std::vector<double> a;
  std::vector<double> c;
  std::optional<std::vector<Rational>> a_exact;
  std::optional<std::vector<Rational>> c_exact;

  // inf/sup of a_n / a_{n+1} over 0 <= n < max_degree (horizon-limited)
  double ratio_inf = 0.0;
  double ratio_sup = 0.0;
  // a_{N-1} / a_N at the horizon
  double r_estimate = 0.0;

  bool exact() const { return a_exact.has_value(); }

  /// Degree of 1/k when the stored c_n vanish exactly over a tail of at least five
  /// terms ending at the horizon (rational mode only).
  std::optional<int> reciprocal_degree() const;

  /// k(t), by closed form for the builtin families and by the truncated series otherwise.
  cplx k(cplx t) const;
  cplx k_series(cplx t) const;

  /// Coefficients of F(t) = (k(t) - 1) / t, i.e. F_n = a_{n+1}, for n < max_degree.
  double f_coefficient(int n) const { return a.at(static_cast<std::size_t>(n) + 1); }
};

KernelSpec build_kernel(const std::vector<Rational>& a, int max_degree, std::string name = "explicit");
KernelSpec build_kernel(const std::vector<double>& a, int max_degree, std::string name = "explicit");
KernelSpec build_kernel(const std::function<Rational(int)>& rule, int max_degree, std::string name = "explicit");
KernelSpec build_kernel(const std::function<double(int)>& rule, int max_degree, std::string name = "explicit");

KernelSpec drury_arveson_kernel(int max_degree);
/// (1 - t)^{-nu}: a_n = (nu)_n / n!.
KernelSpec power_kernel(const Rational& nu, int max_degree);
/// Float exponent; kept exact only when nu is an integer.
KernelSpec power_kernel(double nu, int max_degree);
/// -log(1 - t) / t: a_n = 1 / (n + 1).
KernelSpec dirichlet_kernel(int max_degree);

/// Family by name: "drury_arveson", "power" (needs `nu`, e.g. "1/2" or "0.75"), "dirichlet".
KernelSpec builtin_kernel(std::string_view family, int max_degree, const std::optional<std::string>& nu = {});

/// Parses "p/q", an integer, or a decimal literal. Decimals are converted exactly.
Rational parse_rational(const std::string& text);
std::string rational_to_string(const Rational& q);

/// |sum_{k<=n} a_k c_{n-k} - delta_{n0}| / sum_k |a_k c_{n-k}| for n = 0..max_degree.
std::vector<double> reciprocal_residuals(const KernelSpec& spec);
/// Exact Cauchy-product check; false when the spec has no exact data.
bool reciprocal_identity_exact(const KernelSpec& spec);

struct SignReport {
  bool eventually_nonneg = false;
  bool eventually_nonpos = false;
  std::optional<int> nonneg_pivot;
  std::optional<int> nonpos_pivot;
  std::optional<int> pivot_index;  // smallest of the two pivots
  int horizon = 0;
};

/// Finite-horizon sign-pattern diagnostic on the stored c_n.
SignReport nevanlinna_sign_check(const KernelSpec& spec);

/// d_n = a_n/a_{n+1} - a_{n-1}/a_n for 1 <= n < max_degree (element 0 is d_1).
std::vector<double> essential_normality_diagnostic(const KernelSpec& spec);

}  // namespace kcontract
