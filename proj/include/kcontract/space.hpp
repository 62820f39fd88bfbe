#pragma once

// Degree-truncated H_K(E): graded monomial basis, weights, the shift tuple M_z with its
// adjoint in the weighted metric, and the diagonal operators delta and Delta.
//
// Coordinates of a vector f = sum_alpha f_alpha z^alpha (f_alpha in E = C^m) are flat:
// position k of the basis and coefficient e map to k * m + e. The metric is
// G = diag(1 / w_alpha) with w_alpha = a_|alpha| * gamma_alpha.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kcontract/linalg.hpp"
#include "kcontract/series.hpp"

namespace kcontract {

using MultiIndex = std::vector<int>;

int total_degree(const MultiIndex& alpha);

/// All multi-indices of total degree <= N in graded order. Within one degree the order
/// is lexicographic with z_1 leading, so (1,0) precedes (0,1).
class IndexBasis {
 public:
  IndexBasis(int d, int N);

  int d() const { return d_; }
  int N() const { return N_; }
  int size() const { return static_cast<int>(indices_.size()); }

  const MultiIndex& index(int k) const { return indices_[static_cast<std::size_t>(k)]; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  int degree(int k) const { return degree_[static_cast<std::size_t>(k)]; }
  /// Position of alpha, or -1 when |alpha| > N or the dimension differs.
  int position(const MultiIndex& alpha) const;

  /// Positions [degree_begin(n), degree_end(n)) hold the multi-indices of degree n.
  int degree_begin(int n) const { return offsets_.at(static_cast<std::size_t>(n)); }
  int degree_end(int n) const { return offsets_.at(static_cast<std::size_t>(n) + 1); }

  /// gamma_alpha = |alpha|! / alpha!, exact.
  std::uint64_t gamma(int k) const { return gamma_[static_cast<std::size_t>(k)]; }

  /// Position of alpha + e_i (or -1 past the top degree) and of alpha - e_i (or -1).
  int shift_up(int k, int i) const { return up_[static_cast<std::size_t>(k * d_ + i)]; }
  int shift_down(int k, int i) const { return down_[static_cast<std::size_t>(k * d_ + i)]; }

  /// Identifier recorded in serialized vectors, e.g. "graded-lex/d=2/N=5".
  std::string id() const;

 private:
  int d_;
  int N_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degree_;
  std::vector<int> offsets_;
  std::vector<std::uint64_t> gamma_;
  std::vector<int> up_;
  std::vector<int> down_;
};

/// Number of multi-indices in d variables with total degree <= N, i.e. C(N + d, d).
std::uint64_t basis_count(int d, int N);

struct SpaceSpec {
  std::shared_ptr<const KernelSpec> kernel;
  std::shared_ptr<const IndexBasis> basis;
  int coeff_dim = 1;
  RealVec weight;  // per basis position: a_|alpha| * gamma_alpha

  int d() const { return basis->d(); }
  int N() const { return basis->N(); }
  int dim() const { return basis->size() * coeff_dim; }
  int flat(int k, int e) const { return k * coeff_dim + e; }

  /// Diagonal of G over flat coordinates (1 / w).
  RealVec metric() const;
  /// Diagonal of G^{1/2} over flat coordinates.
  RealVec metric_sqrt() const;

  /// First flat coordinate of degree n, and one past the last.
  int degree_offset(int n) const { return basis->degree_begin(n) * coeff_dim; }
  int degree_limit(int n) const { return basis->degree_end(n) * coeff_dim; }
};

/// Requires kernel->max_degree >= N.
SpaceSpec make_space(std::shared_ptr<const KernelSpec> kernel, int d, int N, int coeff_dim = 1);

/// <f, g> = g^* G f over flat coordinates; f, g may have several columns (Gram g^* G f).
Mat weighted_gram(const SpaceSpec& space, const Mat& f, const Mat& g);
cplx inner(const SpaceSpec& space, const Vec& f, const Vec& g);
double norm(const SpaceSpec& space, const Vec& f);

/// Value of f at z: sum_alpha f_alpha z^alpha in E.
Vec evaluate(const SpaceSpec& space, const Vec& f, const Vec& z);
/// Monomials z^alpha for all basis positions.
Vec monomials(const IndexBasis& basis, const Vec& z);

/// Zeroes all coordinates of degree above max_degree (in place on each column).
void restrict_band(const SpaceSpec& space, Mat& f, int max_degree);

struct SpaceVector {
  std::string basis_id;
  int coeff_dim = 1;
  Vec coeffs;  // flat coordinates
};

SpaceVector to_space_vector(const SpaceSpec& space, const Vec& f);

struct ShiftOperators {
  std::vector<SpMat> shift;    // M_{z_i}
  std::vector<SpMat> adjoint;  // metric adjoint G^{-1} M_{z_i}^* G
};

/// M_{z_i} sends z^alpha e to z^{alpha+e_i} e and annihilates the top degree.
ShiftOperators shift_matrices(const SpaceSpec& space);

/// Row operator [M_1 ... M_d] : H^d -> H, and the column operator of adjoints H -> H^d.
SpMat stack_row(const std::vector<SpMat>& ops);
SpMat stack_column(const std::vector<SpMat>& ops);
/// Block-diagonal I_d (x) a.
Mat block_diag(const Mat& a, int copies);

struct DeltaOps {
  RealVec delta_by_degree;  // a_n / a_{n-1}, degree 0 -> 1
  RealVec Delta_by_degree;  // a_{n+1} / a_n
  std::optional<std::vector<Rational>> delta_exact;
  std::optional<std::vector<Rational>> Delta_exact;
  SpMat delta;  // diagonal over flat coordinates
  SpMat Delta;
};

/// Requires kernel->max_degree >= N + 1.
DeltaOps delta_ops(const SpaceSpec& space);

/// delta M_{z_i} for each i.
std::vector<SpMat> cauchy_dual(const SpaceSpec& space);

/// P = delta * sum_i M_{z_i} M_{z_i}^#: the projection onto the non-constant functions.
SpMat range_projection(const SpaceSpec& space);

/// Q = M^# delta M on H^d: the projection onto the range of the adjoint column operator,
/// faithful on inputs whose components have degree <= N - 1.
SpMat adjoint_range_projection(const SpaceSpec& space);

}  // namespace kcontract
