#pragma once

// Conditions (K1)-(K4) on a quadruple (T, B, C, D), the transfer function
// W(z) = D + C F(ZT^*) Z B, K-innerness of operator-valued polynomials and the
// point-sampled contractive multiplier test.

#include <cstdint>
#include <memory>
#include <vector>

#include "kcontract/dilation.hpp"

namespace kcontract {

struct ConditionOptions {
  double tol = 1e-8;
  double mem_tol = 1e-8;
  DefectOptions defect;
  SeriesOptions series;
};

struct ConditionReport {
  double k1 = 0.0;  // ||C^*C - (1/K)(T)||
  double k2 = 0.0;  // ||D^*C + B^*(+)Delta_T T^*||
  double k3 = 0.0;  // ||D^*D + B^*(+)Delta_T B - I||
  double k4 = 0.0;  // max column residual of (+)j_C B outside the range of M_z^* on the band
  bool k1_pass = false, k2_pass = false, k3_pass = false, k4_pass = false;
  double deltaT_mismatch = 0.0;  // ||q.DeltaT - recomputed Delta_T||
  double tol = 0.0;
  double mem_tol = 0.0;
  int band_hi = 0;
  bool pass() const { return k1_pass && k2_pass && k3_pass && k4_pass; }
};

ConditionReport check_conditions(const RealizationQuadruple& q, std::shared_ptr<const KernelSpec> kernel, int N,
                                 const ConditionOptions& opts = {});

/// Coefficients of D + C F(ZT^*) Z B up to total degree N.
InnerFunctionPoly build_W_from_quadruple(const RealizationQuadruple& q, const KernelSpec& kernel, int N);

/// max over sample points (radius `radius`) of ||W_poly(z) - (D + C F(ZT^*) Z B)||.
double pointwise_realization_error(const InnerFunctionPoly& W, const RealizationQuadruple& q,
                                   const KernelSpec& kernel, int points = 20, double radius = 0.5,
                                   std::uint64_t seed = 11);

struct KInnerReport {
  double isometry_residual = 0.0;
  double orthogonality_residual = 0.0;
  int band_lo = 1;
  int band_hi = 0;  // shifts |alpha| in [band_lo, band_hi] were tested
  int degree = 0;
  double tol = 0.0;
  bool verdict = false;
};

/// Gram(W x_i) against I and Gram(W E_*, z^alpha W E_*) for 1 <= |alpha| <= N - deg W.
/// Throws DegreeOverflow if deg W > N.
KInnerReport verify_kinner(const InnerFunctionPoly& W, const KernelSpec& kernel, int N, double kin_tol = 1e-8);

/// ||W x||^2 - ||D x||^2 against <(I - D^*D) x, x> as matrices over E_*.
double isometry_identity_residual(const InnerFunctionPoly& W, const Mat& D, const KernelSpec& kernel);

struct MultiplierOptions {
  double psd_tol = 1e-8;
  double row_tol = 1e-12;
  bool require_row_contraction = true;
};

struct MultiplierReport {
  double min_eig = 0.0;
  double row_norm = 0.0;  // sup_n a_{n-1}/a_n over the kernel horizon
  bool row_contraction = false;
  bool pass = false;
};

/// min eig of [K(z_i,z_j) I - W(z_i) W(z_j)^* / (1 - <z_i,z_j>)].
/// Throws NotRowContraction (unless disabled), KernelSingularity, BadParameter.
MultiplierReport da_multiplier_check(const InnerFunctionPoly& W, const KernelSpec& kernel, const std::vector<Vec>& points,
                                     const MultiplierOptions& opts = {});

/// Columns of j_C x for a factor C: the dilation built from an arbitrary square root.
Mat j_C(const OperatorTuple& T, const Mat& C, std::shared_ptr<const KernelSpec> kernel, int N);

}  // namespace kcontract
