#pragma once

// Canonical K-dilation of a pure K-contraction, the renormed contraction T~ and its
// defects, the wandering subspace W(M) of M = (Im j)^perp, the K-inner function W_T,
// and minimality / uniqueness of dilations.
//
// Metric conventions. H = C^p carries the standard inner product. The renormed space
// H~ = (C^p, <Delta_T x, y>) is handled in orthonormal coordinates x^ = R x with
// R = Delta_T^{1/2}; in those coordinates T~ is the p x dp matrix [T_1 R ... T_d R].
// Vectors of H_K(D) use the flat coordinates of `SpaceSpec` with metric G.

#include <memory>
#include <optional>
#include <vector>

#include "kcontract/contraction.hpp"
#include "kcontract/series.hpp"
#include "kcontract/space.hpp"

namespace kcontract {

struct DilationOptions {
  DefectOptions defect;
  SeriesOptions series;
  double pure_tau = 1e-8;
  double iso_tol = 1e-8;
  // Accept isometry residuals up to 10 * (truncation tail at N) when set.
  bool tail_aware = false;
  double mem_tol = 1e-8;
  double range_rel_tol = 1e-10;
};

/// Operator-valued polynomial z -> sum_alpha W_alpha z^alpha with W_alpha : C^s -> C^r.
struct InnerFunctionPoly {
  std::shared_ptr<const IndexBasis> basis;
  int source_dim = 0;  // s
  int target_dim = 0;  // r
  std::vector<Mat> coeffs;  // per basis position, r x s

  /// Highest total degree carrying a nonzero coefficient (0 for the zero function).
  int degree() const;
  Mat evaluate(const Vec& z) const;
  /// Flat coordinates of x -> W x in a space with the same basis and coeff_dim = r,
  /// one column per standard basis vector of C^s.
  Mat as_columns() const;
};

InnerFunctionPoly inner_function_from_columns(std::shared_ptr<const IndexBasis> basis, int target_dim,
                                              const Mat& columns);

struct DilationPack {
  explicit DilationPack(OperatorTuple t) : T(std::move(t)) {}

  OperatorTuple T;
  std::shared_ptr<const KernelSpec> kernel;
  SpaceSpec space;  // coeff_dim = defect_dim
  int N = 0;

  DefectResult defect;
  Mat C;    // r x p
  Mat V_r;  // p x r, orthonormal basis of the defect space inside H (C = V_r^* D^{1/2})
  std::vector<double> pureness;
  PurenessVerdict pure;

  Mat J;  // dim(H_K(D)) x p
  double isometry_residual = 0.0;
  double iso_tol_effective = 0.0;
  std::vector<double> intertwining_residuals;
  int band_lo = 0;
  int band_hi = 0;  // validated degree band for identities with M_z on the left

  Mat DeltaT;            // converged series sum_n a_{n+1} sigma^n(D)
  int DeltaT_terms = 0;
  Mat DeltaT_truncated;  // J^* G Delta J at degree N
  double DeltaT_truncation_gap = 0.0;
  RealVec DeltaT_eigs;   // descending
  double DeltaT_lower_bound = 0.0;  // 1 / sup_n a_n/a_{n+1}, horizon-limited

  Mat R;      // Delta_T^{1/2}
  Mat R_inv;
  Mat That;   // p x dp, T~ in orthonormal coordinates of H~^d
  std::vector<Mat> Ttilde;  // T_i Delta_T
  Mat DTtilde;       // (I - That^* That)^{1/2}, dp x dp
  Mat DTtilde_star;  // (I - That That^*)^{1/2}, p x p

  Mat defect_range_basis;  // orthonormal basis of the range of DTtilde
  Mat tildeD_basis;        // dp x s, orthonormal basis of the admissible subspace
  RealVec membership_singular_values;  // ascending, over defect_range_basis
  double membership_residual = 0.0;    // largest accepted singular value
};

/// Builds the canonical dilation at truncation degree N.
/// Throws NotPure, IsometryDegraded, MembershipAmbiguous and the errors of defect_operator.
DilationPack canonical_dilation(const OperatorTuple& T, std::shared_ptr<const KernelSpec> kernel, int N,
                                const DilationOptions& opts = {});

/// j^* f = sum_alpha T^alpha C^* f_alpha.
Vec adjoint_dilation_apply(const DilationPack& pack, const Vec& f);

/// Identity checks of the construction, all in the metrics described above.
struct DilationChecks {
  double deltaT_invertibility_gap = 0.0;   // lower_bound - min eig(Delta_T), <= 0 expected
  double ttilde_min_eig = 0.0;             // min eig of I - T~ T~^*
  double ttilde_projection_residual = 0.0; // ||T~T~^* - j^* P j|| (truncated j)
  double unitary_residual = 0.0;           // ||U^* U - I|| for the Julia block
  double defect_star_residual = 0.0;       // ||D_{T~*} - V_r C||
  double ttilde_intertwining = 0.0;        // ||T~ D_{T~} - D_{T~*} T~||
  double adjoint_apply_residual = 0.0;     // j^* via formula vs J^* G
  double cfz_residual = 0.0;               // C F(ZT*) Z x vs (delta M_z (j x))(z)
  double tildeD_defect_leak = 0.0;         // ||(I - V_r V_r^*) T~ y|| over the admissible basis
};

DilationChecks check_dilation(const DilationPack& pack, int samples = 8, std::uint64_t seed = 7);

struct FEvalResult {
  Mat value;
  int terms_used = 0;
  bool converged = false;
};

/// F(ZT^*) = sum_n a_{n+1} (Z T^*)^n. Throws SpectralUnsafe and SeriesNotConverged.
FEvalResult F_eval(const OperatorTuple& T, const KernelSpec& kernel, const Vec& z, const SeriesOptions& opts = {},
                   double margin = 0.05);

struct WanderingOptions {
  double sep_tol = 1e-10;
  double gap_factor = 1e3;
};

struct WanderingResult {
  Mat basis;       // flat coordinates, orthonormal in the metric G
  int dim = 0;
  RealVec ritz_values;  // ascending values of the wandering functional on the trial space
  bool rank_warning = false;  // next value below gap_factor * sep_tol
  double next_value = 0.0;
};

/// W(M) for M = (Im J)^perp, by Rayleigh-Ritz on span{constants, delta M_{z_i} J h}.
WanderingResult wandering_subspace(const DilationPack& pack, const WanderingOptions& opts = {});

/// Same subspace from a dense eigen-decomposition over the whole truncated space.
WanderingResult wandering_subspace_dense(const DilationPack& pack, const WanderingOptions& opts = {});

struct WanderingChecks {
  double decomposition_residual = 0.0;  // max over basis vectors, relative to ||f||
  double defect_equation_residual = 0.0;
  double norm_identity_error = 0.0;     // relative
};

WanderingChecks check_wandering(const DilationPack& pack, const Mat& basis);

/// (T, B, C, D) with Delta_T; the realization W(z) = D + C F(ZT^*) Z B.
struct RealizationQuadruple {
  explicit RealizationQuadruple(OperatorTuple t) : T(std::move(t)) {}
  OperatorTuple T;
  Mat B;  // dp x s
  Mat C;  // r x p
  Mat D;  // r x s
  Mat DeltaT;
  int source_dim() const { return static_cast<int>(D.cols()); }
  int target_dim() const { return static_cast<int>(D.rows()); }
};

struct WTResult {
  InnerFunctionPoly W;
  RealizationQuadruple quadruple;
  Mat columns;  // flat coordinates of W x for the standard basis of C^s
};

/// W_T via the function-space route -T~ y + M_z'(+) j I_T^{-1} D_{T~} y.
WTResult build_WT(const DilationPack& pack);

/// Sines of the principal angles between the column spans of two sets of vectors in
/// the metric G, after orthonormalizing both; empty sets give an empty result.
RealVec weighted_principal_sines(const SpaceSpec& space, const Mat& a, const Mat& b);

struct SupportResult {
  Mat basis;  // orthonormal basis of E_0 inside E
  int dim = 0;
  bool minimal = false;
};

/// Smallest E_0 with Im J inside H_K(E_0).
SupportResult minimal_support(const Mat& J, const SpaceSpec& space, double rel_tol = 1e-10);

struct CompareResult {
  Mat U;       // polar projection of the least-squares solution
  Mat U_ls;
  double unitarity_defect = 0.0;  // ||U_ls^* U_ls - I||
  double residual = 0.0;          // ||(I (x) U) J1 - J2|| in the metric
};

/// Unitary U with J2 = (I (x) U) J1. Throws NotMinimal and IrreconcilableDilations.
CompareResult compare_dilations(const Mat& J1, const SpaceSpec& space1, const Mat& J2, const SpaceSpec& space2,
                                double rec_tol = 1e-8);

/// Dilation matrix of a_|alpha| gamma_alpha C T^{*alpha} for an arbitrary factor C (rows = coeff_dim).
Mat dilation_matrix(const OperatorTuple& T, const Mat& C, const SpaceSpec& space);

/// T^{*alpha} for every basis position.
std::vector<Mat> adjoint_powers(const OperatorTuple& T, const IndexBasis& basis);

}  // namespace kcontract
