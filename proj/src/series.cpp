#include "kcontract/series.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace kcontract {

namespace {

constexpr int kTailRun = 5;

void require_horizon(int max_degree) {
  if (max_degree < 1) throw Error(ErrorKind::BadParameter, "max_degree must be >= 1");
}

template <typename T>
void validate_coefficients(const std::vector<T>& a, int max_degree) {
  if (static_cast<int>(a.size()) < max_degree + 1)
    throw Error(ErrorKind::BadParameter, "coefficient list shorter than max_degree + 1");
  if (a[0] != T(1)) throw Error(ErrorKind::BadNormalization, "a_0 must equal 1");
  for (int n = 0; n <= max_degree; ++n) {
    if (!(a[static_cast<std::size_t>(n)] > T(0))) {
      std::ostringstream os;
      os << "a_" << n << " is not positive";
      throw Error(ErrorKind::NonpositiveCoefficient, os.str());
    }
  }
}

template <typename T>
std::vector<T> reciprocal(const std::vector<T>& a, int max_degree) {
  std::vector<T> c(static_cast<std::size_t>(max_degree) + 1);
  c[0] = T(1);
  for (int n = 1; n <= max_degree; ++n) {
    T s(0);
    for (int k = 1; k <= n; ++k) s += a[static_cast<std::size_t>(k)] * c[static_cast<std::size_t>(n - k)];
    c[static_cast<std::size_t>(n)] = -s;
  }
  return c;
}

void fill_ratios(KernelSpec& spec) {
  const int N = spec.max_degree;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int n = 0; n < N; ++n) {
    double r;
    if (spec.exact()) {
      const auto& ae = *spec.a_exact;
      r = static_cast<double>(Rational(ae[n] / ae[n + 1]));
    } else {
      r = spec.a[n] / spec.a[n + 1];
    }
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    if (n == N - 1) spec.r_estimate = r;
  }
  spec.ratio_inf = lo;
  spec.ratio_sup = hi;
}

KernelSpec finish_exact(std::vector<Rational> a, int max_degree, std::string name) {
  require_horizon(max_degree);
  validate_coefficients(a, max_degree);
  a.resize(static_cast<std::size_t>(max_degree) + 1);
  KernelSpec spec;
  spec.name = std::move(name);
  spec.max_degree = max_degree;
  auto c = reciprocal(a, max_degree);
  spec.a.reserve(a.size());
  spec.c.reserve(c.size());
  for (const auto& q : a) spec.a.push_back(static_cast<double>(q));
  for (const auto& q : c) spec.c.push_back(static_cast<double>(q));
  spec.a_exact = std::move(a);
  spec.c_exact = std::move(c);
  fill_ratios(spec);
  return spec;
}

KernelSpec finish_float(std::vector<double> a, int max_degree, std::string name) {
  require_horizon(max_degree);
  for (double v : a)
    if (!std::isfinite(v)) throw Error(ErrorKind::BadParameter, "non-finite coefficient");
  validate_coefficients(a, max_degree);
  a.resize(static_cast<std::size_t>(max_degree) + 1);
  KernelSpec spec;
  spec.name = std::move(name);
  spec.max_degree = max_degree;
  spec.c = reciprocal(a, max_degree);
  spec.a = std::move(a);
  fill_ratios(spec);
  return spec;
}

std::string format_nu(const KernelSpec& s) {
  if (s.nu_exact) return rational_to_string(*s.nu_exact);
  std::ostringstream os;
  os.precision(17);
  os << s.nu;
  return os.str();
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::DruryArveson: return "drury_arveson";
    case KernelFamily::Power: return "power";
    case KernelFamily::Dirichlet: return "dirichlet";
    case KernelFamily::Explicit: return "explicit";
  }
  return "explicit";
}

std::optional<int> KernelSpec::reciprocal_degree() const {
  if (!c_exact) return std::nullopt;
  const auto& ce = *c_exact;
  int last = max_degree;
  while (last > 0 && ce[static_cast<std::size_t>(last)] == 0) --last;
  if (max_degree - last < kTailRun) return std::nullopt;
  return last;
}

cplx KernelSpec::k_series(cplx t) const {
  cplx s = 0.0;
  for (int n = max_degree; n >= 0; --n) s = s * t + a[static_cast<std::size_t>(n)];
  return s;
}

cplx KernelSpec::k(cplx t) const {
  switch (family) {
    case KernelFamily::DruryArveson:
      return 1.0 / (1.0 - t);
    case KernelFamily::Power:
      return std::exp(-nu * std::log(1.0 - t));
    case KernelFamily::Dirichlet:
      if (std::abs(t) < 1e-4) return 1.0 + t / 2.0 + t * t / 3.0 + t * t * t / 4.0;
      return -std::log(1.0 - t) / t;
    case KernelFamily::Explicit:
      break;
  }
  return k_series(t);
}

KernelSpec build_kernel(const std::vector<Rational>& a, int max_degree, std::string name) {
  return finish_exact(a, max_degree, std::move(name));
}

KernelSpec build_kernel(const std::vector<double>& a, int max_degree, std::string name) {
  return finish_float(a, max_degree, std::move(name));
}

KernelSpec build_kernel(const std::function<Rational(int)>& rule, int max_degree, std::string name) {
  require_horizon(max_degree);
  std::vector<Rational> a;
  for (int n = 0; n <= max_degree; ++n) a.push_back(rule(n));
  return finish_exact(std::move(a), max_degree, std::move(name));
}

KernelSpec build_kernel(const std::function<double(int)>& rule, int max_degree, std::string name) {
  require_horizon(max_degree);
  std::vector<double> a;
  for (int n = 0; n <= max_degree; ++n) a.push_back(rule(n));
  return finish_float(std::move(a), max_degree, std::move(name));
}

KernelSpec drury_arveson_kernel(int max_degree) {
  auto spec = build_kernel(std::function<Rational(int)>([](int) { return Rational(1); }), max_degree,
                           "drury-arveson");
  spec.family = KernelFamily::DruryArveson;
  spec.nu_exact = Rational(1);
  spec.nu = 1.0;
  return spec;
}

KernelSpec power_kernel(const Rational& nu, int max_degree) {
  if (nu <= 0) throw Error(ErrorKind::BadParameter, "power kernel exponent must be positive");
  require_horizon(max_degree);
  std::vector<Rational> a(static_cast<std::size_t>(max_degree) + 1);
  a[0] = 1;
  for (int n = 1; n <= max_degree; ++n) a[n] = a[n - 1] * (nu + (n - 1)) / n;
  auto spec = finish_exact(std::move(a), max_degree, "K_nu(" + rational_to_string(nu) + ")");
  spec.family = KernelFamily::Power;
  spec.nu_exact = nu;
  spec.nu = static_cast<double>(nu);
  return spec;
}

KernelSpec power_kernel(double nu, int max_degree) {
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw Error(ErrorKind::BadParameter, "power kernel exponent must be positive");
  if (nu == std::floor(nu) && nu < 1e6) return power_kernel(Rational(static_cast<long long>(nu)), max_degree);
  require_horizon(max_degree);
  std::vector<double> a(static_cast<std::size_t>(max_degree) + 1);
  a[0] = 1.0;
  for (int n = 1; n <= max_degree; ++n) a[n] = a[n - 1] * (nu + (n - 1)) / n;
  KernelSpec spec = finish_float(std::move(a), max_degree, "");
  spec.family = KernelFamily::Power;
  spec.nu = nu;
  spec.name = "K_nu(" + format_nu(spec) + ")";
  return spec;
}

KernelSpec dirichlet_kernel(int max_degree) {
  auto spec = build_kernel(std::function<Rational(int)>([](int n) { return Rational(1, n + 1); }), max_degree,
                           "dirichlet");
  spec.family = KernelFamily::Dirichlet;
  return spec;
}

KernelSpec builtin_kernel(std::string_view family, int max_degree, const std::optional<std::string>& nu) {
  if (family == "drury_arveson" || family == "drury-arveson") return drury_arveson_kernel(max_degree);
  if (family == "dirichlet") return dirichlet_kernel(max_degree);
  if (family == "power") {
    if (!nu) throw Error(ErrorKind::BadParameter, "power family requires nu");
    return power_kernel(parse_rational(*nu), max_degree);
  }
  throw Error(ErrorKind::BadParameter, "unknown kernel family '" + std::string(family) + "'");
}

namespace {

// Base-10 integer with optional sign; cpp_int's string constructor would read a leading
// zero as octal.
boost::multiprecision::cpp_int parse_decimal_int(std::string s, const std::string& text) {
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char ch) { return std::isdigit(ch); }))
    throw Error(ErrorKind::BadParameter, "malformed rational literal '" + text + "'");
  boost::multiprecision::cpp_int v = 0;
  for (char ch : s) v = v * 10 + (ch - '0');
  return negative ? boost::multiprecision::cpp_int(-v) : v;
}

}  // namespace

Rational parse_rational(const std::string& text) {
  std::string s = text;
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
  if (s.empty()) throw Error(ErrorKind::BadParameter, "empty rational literal");
  if (s.find_first_of("eE") != std::string::npos)
    throw Error(ErrorKind::BadParameter, "exponent notation not supported in '" + text + "'");
  if (auto slash = s.find('/'); slash != std::string::npos) {
    const auto num = parse_decimal_int(s.substr(0, slash), text);
    const auto den = parse_decimal_int(s.substr(slash + 1), text);
    if (den == 0) throw Error(ErrorKind::BadParameter, "zero denominator in '" + text + "'");
    return Rational(num, den);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    const std::string frac = s.substr(dot + 1);
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    const bool negative = whole[0] == '-';
    const auto w = parse_decimal_int(whole, text);
    const auto f = frac.empty() ? boost::multiprecision::cpp_int(0) : parse_decimal_int(frac, text);
    if (!frac.empty() && (frac[0] == '-' || frac[0] == '+'))
      throw Error(ErrorKind::BadParameter, "malformed rational literal '" + text + "'");
    const boost::multiprecision::cpp_int den =
        boost::multiprecision::pow(boost::multiprecision::cpp_int(10), static_cast<unsigned>(frac.size()));
    const boost::multiprecision::cpp_int mag = (negative ? boost::multiprecision::cpp_int(-w) : w) * den + f;
    return Rational(negative ? boost::multiprecision::cpp_int(-mag) : mag, den);
  }
  return Rational(parse_decimal_int(s, text));
}

std::string rational_to_string(const Rational& q) { return q.str(); }

std::vector<double> reciprocal_residuals(const KernelSpec& spec) {
  std::vector<double> out;
  for (int n = 0; n <= spec.max_degree; ++n) {
    double s = 0.0, mag = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double t = spec.a[k] * spec.c[n - k];
      s += t;
      mag += std::abs(t);
    }
    if (n == 0) s -= 1.0;
    out.push_back(mag > 0 ? std::abs(s) / mag : std::abs(s));
  }
  return out;
}

bool reciprocal_identity_exact(const KernelSpec& spec) {
  if (!spec.exact()) return false;
  const auto& a = *spec.a_exact;
  const auto& c = *spec.c_exact;
  for (int n = 0; n <= spec.max_degree; ++n) {
    Rational s = 0;
    for (int k = 0; k <= n; ++k) s += a[k] * c[n - k];
    if (s != (n == 0 ? Rational(1) : Rational(0))) return false;
  }
  return true;
}

SignReport nevanlinna_sign_check(const KernelSpec& spec) {
  const int N = spec.max_degree;
  // sign(n) in {-1, 0, +1}; float mode treats |c_n| below 1e-14 * max|c| as zero
  std::vector<int> sign(static_cast<std::size_t>(N) + 1);
  double cmax = 0.0;
  for (double v : spec.c) cmax = std::max(cmax, std::abs(v));
  for (int n = 0; n <= N; ++n) {
    if (spec.c_exact) {
      const auto& q = (*spec.c_exact)[n];
      sign[n] = q > 0 ? 1 : (q < 0 ? -1 : 0);
    } else {
      const double v = spec.c[n];
      sign[n] = std::abs(v) <= 1e-14 * cmax ? 0 : (v > 0 ? 1 : -1);
    }
  }
  SignReport rep;
  rep.horizon = N;
  // walk from the top down; the smallest p with a one-signed tail
  int p_nonneg = N + 1, p_nonpos = N + 1;
  for (int n = N; n >= 0 && sign[n] >= 0; --n) p_nonneg = n;
  for (int n = N; n >= 0 && sign[n] <= 0; --n) p_nonpos = n;
  if (p_nonneg <= N) {
    rep.eventually_nonneg = true;
    rep.nonneg_pivot = p_nonneg;
  }
  if (p_nonpos <= N) {
    rep.eventually_nonpos = true;
    rep.nonpos_pivot = p_nonpos;
  }
  if (rep.nonneg_pivot || rep.nonpos_pivot)
    rep.pivot_index = std::min(rep.nonneg_pivot.value_or(N + 1), rep.nonpos_pivot.value_or(N + 1));
  return rep;
}

std::vector<double> essential_normality_diagnostic(const KernelSpec& spec) {
  if (spec.max_degree < 2) throw Error(ErrorKind::HorizonTooShort, "essential normality needs max_degree >= 2");
  std::vector<double> out;
  for (int n = 1; n < spec.max_degree; ++n) {
    if (spec.a_exact) {
      const auto& a = *spec.a_exact;
      out.push_back(static_cast<double>(Rational(a[n] / a[n + 1] - a[n - 1] / a[n])));
    } else {
      out.push_back(spec.a[n] / spec.a[n + 1] - spec.a[n - 1] / spec.a[n]);
    }
  }
  return out;
}

}  // namespace kcontract
