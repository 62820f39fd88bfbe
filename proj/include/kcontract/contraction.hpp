#pragma once

// Commuting matrix tuples measured against a kernel: the map sigma_T, the defect
// operator (1/K)(T), pureness residuals and the spectral safety check.

#include <cstdint>
#include <optional>
#include <vector>

#include "kcontract/linalg.hpp"
#include "kcontract/series.hpp"

namespace kcontract {

/// d commuting p x p matrices. The constructor rejects non-square, ragged or
/// non-commuting input.
class OperatorTuple {
 public:
  explicit OperatorTuple(std::vector<Mat> T, double comm_tol = 1e-10);

  int d() const { return static_cast<int>(T_.size()); }
  int p() const { return static_cast<int>(T_[0].rows()); }
  const Mat& operator[](int i) const { return T_[static_cast<std::size_t>(i)]; }
  const std::vector<Mat>& matrices() const { return T_; }
  double comm_tol() const { return comm_tol_; }

  /// max_{i<j} ||T_i T_j - T_j T_i|| / max(1, ||T_i|| ||T_j||)
  double commutator_residual() const { return commutator_residual_; }

  /// Column operator T^* : H -> H^d, i.e. the stacked adjoints.
  Mat adjoint_column() const;
  /// Row operator [T_1 ... T_d] : H^d -> H.
  Mat row() const;

 private:
  std::vector<Mat> T_;
  double comm_tol_;
  double commutator_residual_ = 0.0;
};

/// max_{i<j} of the normalized commutator norms for arbitrary square matrices.
double commutator_residual(const std::vector<Mat>& T);

/// sigma_T(X) = sum_i T_i X T_i^*.
Mat apply_sigma(const OperatorTuple& T, const Mat& X);

struct SeriesOptions {
  double series_tol = 1e-14;
  int run_length = 5;
};

struct SeriesSum {
  Mat value;
  int terms_used = 0;      // highest index n included
  double tail_estimate = 0.0;
  bool converged = false;
  std::vector<double> term_norms;  // |coef_n| * ||sigma^n(X0)||
};

/// sum_n coef[n] sigma_T^n(X0), stopped once run_length consecutive terms fall below
/// series_tol, or at the end of `coef`.
SeriesSum sigma_series(const OperatorTuple& T, const std::vector<double>& coef, const Mat& X0,
                       const SeriesOptions& opts = {});

struct SafetyReport {
  double max_rho = 0.0;        // sampled max of rho(Z T^*) over unit z
  double sigma_radius = 0.0;   // rho(sigma_T), power iteration
  double r_estimate = 0.0;
  double margin = 0.05;
  int samples = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  bool required = true;  // false when 1/k is a polynomial and the series is finite
};

/// rho of sigma_T by normalized power iteration from the identity.
double sigma_spectral_radius(const OperatorTuple& T, int iterations = 400);

SafetyReport spectral_safety(const OperatorTuple& T, const KernelSpec& kernel, int samples,
                             double margin = 0.05, std::uint64_t seed = 1);

struct DefectOptions {
  SeriesOptions series;
  double pos_tol_rel = 1e-10;
  double rank_tol_rel = 1e-10;
  int safety_samples = 64;
  double safety_margin = 0.05;
  std::uint64_t seed = 1;
  bool throw_not_positive = true;
};

struct DefectResult {
  Mat defect_op;
  int series_terms_used = 0;
  double tail_estimate = 0.0;
  double min_eig = 0.0;
  double pos_tol = 0.0;
  double rank_tol = 0.0;
  bool is_contraction = false;
  Mat C;  // r x p
  int defect_dim = 0;
  RealVec eigenvalues;  // descending
  SafetyReport safety;
};

/// (1/K)(T) = sum_n c_n sigma_T^n(I) and its square-root factor C.
/// Throws SpectralUnsafe, SeriesNotConverged, and NotPositive (unless disabled).
DefectResult defect_operator(const OperatorTuple& T, const KernelSpec& kernel, const DefectOptions& opts = {});

/// ||I - sum_{n<=N} a_n sigma_T^n(D)|| for N = 0..max_terms.
std::vector<double> pureness_residuals(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op,
                                       int max_terms);

struct PurenessVerdict {
  bool pure = false;
  double final_residual = 0.0;
  bool monotone_tail = false;
  int horizon = 0;
  double tau = 0.0;
};

/// Pure iff the final residual is below tau and the last five residuals do not increase.
PurenessVerdict pureness_verdict(const std::vector<double>& residuals, double tau);

/// Delta_T = sum_n a_{n+1} sigma_T^n(D), the H-side form of j^* Delta j.
SeriesSum delta_T_series(const OperatorTuple& T, const KernelSpec& kernel, const Mat& defect_op,
                         const SeriesOptions& opts = {});

}  // namespace kcontract
