#include "kcontract/contraction.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kcontract {

double commutator_residual(const std::vector<Mat>& T) {
  double worst = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    for (std::size_t j = i + 1; j < T.size(); ++j) {
      const double scale = std::max(1.0, op_norm(T[i]) * op_norm(T[j]));
      worst = std::max(worst, op_norm(T[i] * T[j] - T[j] * T[i]) / scale);
    }
  }
  return worst;
}

OperatorTuple::OperatorTuple(std::vector<Mat> T, double comm_tol) : T_(std::move(T)), comm_tol_(comm_tol) {
  if (T_.empty()) throw Error(ErrorKind::DimensionMismatch, "tuple must contain at least one matrix");
  const auto p = T_[0].rows();
  if (p < 1) throw Error(ErrorKind::DimensionMismatch, "matrices must be at least 1x1");
  for (const Mat& m : T_) {
    if (m.rows() != p || m.cols() != p)
      throw Error(ErrorKind::DimensionMismatch, "tuple matrices must be square and of equal size");
    if (!m.allFinite()) throw Error(ErrorKind::BadParameter, "tuple contains non-finite entries");
  }
  if (!(comm_tol_ > 0.0)) throw Error(ErrorKind::BadParameter, "comm_tol must be positive");
  commutator_residual_ = kcontract::commutator_residual(T_);
  if (commutator_residual_ > comm_tol_) {
    std::ostringstream os;
    os << "normalized commutator " << commutator_residual_ << " exceeds comm_tol " << comm_tol_;
    throw Error(ErrorKind::CommutativityViolation, os.str());
  }
}

Mat OperatorTuple::adjoint_column() const {
  Mat out(d() * p(), p());
  for (int i = 0; i < d(); ++i) out.middleRows(i * p(), p()) = T_[i].adjoint();
  return out;
}

Mat OperatorTuple::row() const {
  Mat out(p(), d() * p());
  for (int i = 0; i < d(); ++i) out.middleCols(i * p(), p()) = T_[i];
  return out;
}

Mat apply_sigma(const OperatorTuple& T, const Mat& X) {
  if (X.rows() != T.p() || X.cols() != T.p())
    throw Error(ErrorKind::DimensionMismatch, "sigma_T needs a p x p argument");
  Mat out = Mat::Zero(T.p(), T.p());
  for (const Mat& t : T.matrices()) out.noalias() += t * X * t.adjoint();
  return out;
}

SeriesSum sigma_series(const OperatorTuple& T, const std::vector<double>& coef, const Mat& X0,
                       const SeriesOptions& opts) {
  SeriesSum out;
  out.value = Mat::Zero(T.p(), T.p());
  Mat power = X0;
  int run = 0;
  for (std::size_t n = 0; n < coef.size(); ++n) {
    if (n > 0) power = apply_sigma(T, power);
    const double term = std::abs(coef[n]) * hermitian_norm(power);
    out.value += coef[n] * power;
    out.term_norms.push_back(term);
    out.terms_used = static_cast<int>(n);
    run = term < opts.series_tol ? run + 1 : 0;
    if (run >= opts.run_length) {
      out.converged = true;
      break;
    }
  }
  // geometric extrapolation from the last two nonzero terms
  const auto& t = out.term_norms;
  double last = 0.0, prev = 0.0;
  for (auto it = t.rbegin(); it != t.rend(); ++it) {
    if (*it == 0.0) continue;
    if (last == 0.0) {
      last = *it;
    } else {
      prev = *it;
      break;
    }
  }
  if (last == 0.0) {
    out.tail_estimate = 0.0;
  } else if (prev > 0.0 && last < prev) {
    const double q = last / prev;
    out.tail_estimate = last * q / (1.0 - q);
  } else {
    out.tail_estimate = last;
  }
  out.value = hermitian_part(out.value);
  return out;
}

double sigma_spectral_radius(const OperatorTuple& T, int iterations) {
  Mat X = Mat::Identity(T.p(), T.p()) / std::sqrt(static_cast<double>(T.p()));
  std::vector<double> log_ratios;
  for (int k = 0; k < iterations; ++k) {
    Mat Y = apply_sigma(T, X);
    const double nrm = Y.norm();
    if (nrm == 0.0) return 0.0;
    log_ratios.push_back(std::log(nrm));
    X = Y / nrm;
  }
  // geometric mean of the growth factors over the second half
  const std::size_t half = log_ratios.size() / 2;
  double s = 0.0;
  for (std::size_t k = half; k < log_ratios.size(); ++k) s += log_ratios[k];
  return std::exp(s / static_cast<double>(log_ratios.size() - half));
}

SafetyReport spectral_safety(const OperatorTuple& T, const KernelSpec& kernel, int samples, double margin,
                             std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::BadParameter, "spectral_safety needs at least one sample");
  SafetyReport rep;
  rep.r_estimate = kernel.r_estimate;
  rep.margin = margin;
  rep.samples = samples;
  rep.seed = seed;
  rep.required = !kernel.reciprocal_degree().has_value();

  auto rho_at = [&](const Vec& z) {
    Mat zt = Mat::Zero(T.p(), T.p());
    for (int i = 0; i < T.d(); ++i) zt += z(i) * T[i].adjoint();
    return spectral_radius(zt);
  };
  for (int i = 0; i < T.d(); ++i) rep.max_rho = std::max(rep.max_rho, rho_at(Vec::Unit(T.d(), i)));
  Rng rng(seed);
  for (int s = 0; s < samples; ++s) rep.max_rho = std::max(rep.max_rho, rho_at(random_sphere_point(T.d(), rng)));
  rep.sigma_radius = sigma_spectral_radius(T);
  const double bound = rep.r_estimate * (1.0 - margin);
  rep.ok = rep.max_rho < bound && std::sqrt(rep.sigma_radius) < bound;
  return rep;
}

DefectResult defect_operator(const OperatorTuple& T, const KernelSpec& kernel, const DefectOptions& opts) {
  DefectResult out;
  out.safety = spectral_safety(T, kernel, opts.safety_samples, opts.safety_margin, opts.seed);
  if (out.safety.required && !out.safety.ok) {
    std::ostringstream os;
    os << "sampled rho(ZT*) = " << out.safety.max_rho << ", sqrt(rho(sigma_T)) = " << std::sqrt(out.safety.sigma_radius)
       << " against r_estimate " << out.safety.r_estimate << " with margin " << out.safety.margin;
    throw Error(ErrorKind::SpectralUnsafe, os.str());
  }

  const SeriesSum s = sigma_series(T, kernel.c, Mat::Identity(T.p(), T.p()), opts.series);
  if (!s.converged) {
    std::ostringstream os;
    os << "defect series not below " << opts.series.series_tol << " for " << opts.series.run_length
       << " consecutive terms by horizon " << kernel.max_degree << " (last term " << s.term_norms.back() << ")";
    throw Error(ErrorKind::SeriesNotConverged, os.str());
  }
  out.defect_op = s.value;
  out.series_terms_used = s.terms_used;
  out.tail_estimate = s.tail_estimate;

  const HermitianEig eig = hermitian_eig(out.defect_op);
  out.eigenvalues = eig.values;
  const double lam_max = eig.values(0);
  out.min_eig = eig.values(eig.values.size() - 1);
  const double scale = std::max(std::abs(lam_max), std::abs(out.min_eig));
  out.pos_tol = std::max(opts.pos_tol_rel * scale, 1e-14);
  out.is_contraction = out.min_eig >= -out.pos_tol;
  if (!out.is_contraction && opts.throw_not_positive) {
    std::ostringstream os;
    os << "min eigenvalue of (1/K)(T) is " << out.min_eig << " < -" << out.pos_tol;
    throw Error(ErrorKind::NotPositive, os.str());
  }

  out.rank_tol = opts.rank_tol_rel * std::max(lam_max, 0.0);
  int r = 0;
  while (r < eig.values.size() && eig.values(r) > out.rank_tol && eig.values(r) > 0.0) ++r;
  out.defect_dim = r;
  out.C = eig.values.head(r).cwiseSqrt().cast<cplx>().asDiagonal() * eig.vectors.leftCols(r).adjoint();
  return out;
}

std::vector<double> pureness_residuals(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op,
                                       int max_terms) {
  if (max_terms > kernel.max_degree) max_terms = kernel.max_degree;
  std::vector<double> out;
  const Mat I = Mat::Identity(T.p(), T.p());
  Mat partial = Mat::Zero(T.p(), T.p());
  Mat power = defect_op;
  for (int n = 0; n <= max_terms; ++n) {
    if (n > 0) power = apply_sigma(T, power);
    partial += kernel.a[static_cast<std::size_t>(n)] * power;
    out.push_back(hermitian_norm(I - partial));
  }
  return out;
}

PurenessVerdict pureness_verdict(const std::vector<double>& residuals, double tau) {
  PurenessVerdict v;
  v.tau = tau;
  if (residuals.empty()) return v;
  v.horizon = static_cast<int>(residuals.size()) - 1;
  v.final_residual = residuals.back();
  v.monotone_tail = true;
  const std::size_t start = residuals.size() > 5 ? residuals.size() - 5 : 0;
  for (std::size_t k = start + 1; k < residuals.size(); ++k)
    if (residuals[k] > residuals[k - 1] * (1.0 + 1e-12) + 1e-15) v.monotone_tail = false;
  v.pure = v.final_residual < tau && v.monotone_tail;
  return v;
}

SeriesSum delta_T_series(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op,
                         const SeriesOptions& opts) {
  std::vector<double> shifted(kernel.a.begin() + 1, kernel.a.end());
  SeriesSum s = sigma_series(T, shifted, defect_op, opts);
  if (!s.converged) {
    std::ostringstream os;
    os << "Delta_T series not converged by horizon " << kernel.max_degree;
    throw Error(ErrorKind::SeriesNotConverged, os.str());
  }
  return s;
}

}  // namespace kcontract
