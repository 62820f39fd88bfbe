#include "kcontract/space.hpp"
#include "kcontract/errors.hpp"

#include <limits>
#include <numeric>
#include <sstream>

namespace kcontract {

namespace {

// Appends all multi-indices of degree n over variables [pos, d) to `out`, z_pos leading.
void enumerate_degree(int d, int pos, int n, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    cur[static_cast<std::size_t>(pos)] = n;
    out.push_back(cur);
    return;
  }
  for (int v = n; v >= 0; --v) {
    cur[static_cast<std::size_t>(pos)] = v;
    enumerate_degree(d, pos + 1, n - v, cur, out);
  }
  cur[static_cast<std::size_t>(pos)] = 0;
}

SpMat diagonal(const RealVec& v) {
  SpMat m(v.size(), v.size());
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) t.emplace_back(k, k, v(k));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

int total_degree(const MultiIndex& alpha) { return std::accumulate(alpha.begin(), alpha.end(), 0); }

std::uint64_t basis_count(int d, int N) {
  // C(N + d, d) built incrementally; each partial product is itself a binomial
  unsigned __int128 c = 1;
  for (int k = 1; k <= d; ++k) {
    c = c * static_cast<unsigned>(N + k) / static_cast<unsigned>(k);
    if (c > std::numeric_limits<std::uint64_t>::max()) throw Error(ErrorKind::BadParameter, "basis too large");
  }
  return static_cast<std::uint64_t>(c);
}

IndexBasis::IndexBasis(int d, int N) : d_(d), N_(N) {
  if (d < 1) throw Error(ErrorKind::BadParameter, "number of variables must be >= 1");
  if (N < 0) throw Error(ErrorKind::BadParameter, "truncation degree must be >= 0");
  if (basis_count(d, N) > 2'000'000) throw Error(ErrorKind::BadParameter, "basis too large");

  MultiIndex cur(static_cast<std::size_t>(d), 0);
  offsets_.push_back(0);
  for (int n = 0; n <= N; ++n) {
    enumerate_degree(d, 0, n, cur, indices_);
    offsets_.push_back(static_cast<int>(indices_.size()));
  }
  const int size = static_cast<int>(indices_.size());
  degree_.resize(static_cast<std::size_t>(size));
  gamma_.resize(static_cast<std::size_t>(size));
  up_.assign(static_cast<std::size_t>(size * d), -1);
  down_.assign(static_cast<std::size_t>(size * d), -1);

  for (int k = 0; k < size; ++k) degree_[k] = total_degree(indices_[k]);

  for (int k = 0; k < size; ++k) {
    for (int i = 0; i < d; ++i) {
      if (indices_[k][i] > 0) {
        MultiIndex beta = indices_[k];
        --beta[i];
        const int j = position(beta);
        down_[static_cast<std::size_t>(k * d + i)] = j;
        up_[static_cast<std::size_t>(j * d + i)] = k;
      }
    }
  }

  // gamma_{alpha+e_i} = gamma_alpha * (|alpha|+1) / (alpha_i+1), walked from any parent
  gamma_[0] = 1;
  for (int k = 1; k < size; ++k) {
    const MultiIndex& alpha = indices_[k];
    int i = 0;
    while (alpha[i] == 0) ++i;
    const int parent = down_[static_cast<std::size_t>(k * d + i)];
    const unsigned __int128 num = static_cast<unsigned __int128>(gamma_[parent]) * static_cast<unsigned>(degree_[k]);
    if (num % static_cast<unsigned>(alpha[i]) != 0)
      throw Error(ErrorKind::BadParameter, "multinomial recurrence lost exactness");
    const unsigned __int128 g = num / static_cast<unsigned>(alpha[i]);
    if (g > std::numeric_limits<std::uint64_t>::max())
      throw Error(ErrorKind::DegreeOverflow, "multinomial coefficient exceeds 64 bits");
    gamma_[k] = static_cast<std::uint64_t>(g);
  }
}

int IndexBasis::position(const MultiIndex& alpha) const {
  if (static_cast<int>(alpha.size()) != d_) return -1;
  for (int v : alpha)
    if (v < 0) return -1;
  const int n = total_degree(alpha);
  if (n > N_) return -1;
  // Rank inside degree n: count the indices preceding alpha in z_1-leading lex order.
  int rank = 0;
  int remaining = n;
  for (int i = 0; i < d_ - 1; ++i) {
    const int vars_left = d_ - i - 1;
    for (int v = remaining; v > alpha[i]; --v)
      rank += static_cast<int>(basis_count(vars_left - 1, remaining - v));
    remaining -= alpha[i];
  }
  return offsets_[static_cast<std::size_t>(n)] + rank;
}

std::string IndexBasis::id() const {
  std::ostringstream os;
  os << "graded-lex/d=" << d_ << "/N=" << N_;
  return os.str();
}

RealVec SpaceSpec::metric() const {
  RealVec g(dim());
  for (int k = 0; k < basis->size(); ++k)
    for (int e = 0; e < coeff_dim; ++e) g(flat(k, e)) = 1.0 / weight(k);
  return g;
}

RealVec SpaceSpec::metric_sqrt() const { return metric().cwiseSqrt(); }

SpaceSpec make_space(std::shared_ptr<const KernelSpec> kernel, int d, int N, int coeff_dim) {
  if (!kernel) throw Error(ErrorKind::BadParameter, "space needs a kernel");
  if (N < 1) throw Error(ErrorKind::BadParameter, "truncation degree must be >= 1");
  if (coeff_dim < 0) throw Error(ErrorKind::BadParameter, "coefficient dimension must be >= 0");
  if (kernel->max_degree < N) {
    std::ostringstream os;
    os << "kernel horizon " << kernel->max_degree << " < truncation degree " << N;
    throw Error(ErrorKind::HorizonTooShort, os.str());
  }
  SpaceSpec s;
  s.kernel = std::move(kernel);
  s.basis = std::make_shared<IndexBasis>(d, N);
  s.coeff_dim = coeff_dim;
  s.weight.resize(s.basis->size());
  for (int k = 0; k < s.basis->size(); ++k)
    s.weight(k) = s.kernel->a[static_cast<std::size_t>(s.basis->degree(k))] * static_cast<double>(s.basis->gamma(k));
  return s;
}

Mat weighted_gram(const SpaceSpec& space, const Mat& f, const Mat& g) {
  if (f.rows() != space.dim() || g.rows() != space.dim())
    throw Error(ErrorKind::DimensionMismatch, "vector length does not match the space");
  return g.adjoint() * (space.metric().cast<cplx>().asDiagonal() * f);
}

cplx inner(const SpaceSpec& space, const Vec& f, const Vec& g) { return weighted_gram(space, f, g)(0, 0); }

double norm(const SpaceSpec& space, const Vec& f) {
  if (f.size() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "vector length does not match the space");
  return (space.metric_sqrt().cast<cplx>().asDiagonal() * f).norm();
}

Vec monomials(const IndexBasis& basis, const Vec& z) {
  if (z.size() != basis.d()) throw Error(ErrorKind::DimensionMismatch, "point dimension mismatch");
  Vec m(basis.size());
  m(0) = 1.0;
  for (int k = 1; k < basis.size(); ++k) {
    const MultiIndex& alpha = basis.index(k);
    int i = 0;
    while (alpha[static_cast<std::size_t>(i)] == 0) ++i;
    m(k) = m(basis.shift_down(k, i)) * z(i);
  }
  return m;
}

Vec evaluate(const SpaceSpec& space, const Vec& f, const Vec& z) {
  if (f.size() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "vector length does not match the space");
  const Vec m = monomials(*space.basis, z);
  Vec out = Vec::Zero(space.coeff_dim);
  for (int k = 0; k < space.basis->size(); ++k)
    out += m(k) * f.segment(space.flat(k, 0), space.coeff_dim);
  return out;
}

void restrict_band(const SpaceSpec& space, Mat& f, int max_degree) {
  if (max_degree >= space.N()) return;
  const int start = space.degree_offset(max_degree + 1);
  f.bottomRows(space.dim() - start).setZero();
}

SpaceVector to_space_vector(const SpaceSpec& space, const Vec& f) {
  if (f.size() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "vector length does not match the space");
  return SpaceVector{space.basis->id(), space.coeff_dim, f};
}

ShiftOperators shift_matrices(const SpaceSpec& space) {
  const IndexBasis& b = *space.basis;
  const int m = space.coeff_dim;
  ShiftOperators out;
  for (int i = 0; i < b.d(); ++i) {
    std::vector<Eigen::Triplet<cplx>> fwd, adj;
    for (int k = 0; k < b.size(); ++k) {
      const int up = b.shift_up(k, i);
      if (up < 0) continue;
      const double ratio = space.weight(k) / space.weight(up);
      for (int e = 0; e < m; ++e) {
        fwd.emplace_back(space.flat(up, e), space.flat(k, e), 1.0);
        adj.emplace_back(space.flat(k, e), space.flat(up, e), ratio);
      }
    }
    SpMat s(space.dim(), space.dim()), a(space.dim(), space.dim());
    s.setFromTriplets(fwd.begin(), fwd.end());
    a.setFromTriplets(adj.begin(), adj.end());
    out.shift.push_back(std::move(s));
    out.adjoint.push_back(std::move(a));
  }
  return out;
}

SpMat stack_row(const std::vector<SpMat>& ops) {
  if (ops.empty()) return SpMat();
  const auto rows = ops[0].rows(), cols = ops[0].cols();
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (int k = 0; k < ops[i].outerSize(); ++k)
      for (SpMat::InnerIterator it(ops[i], k); it; ++it)
        t.emplace_back(it.row(), static_cast<Eigen::Index>(i) * cols + it.col(), it.value());
  SpMat out(rows, cols * static_cast<Eigen::Index>(ops.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpMat stack_column(const std::vector<SpMat>& ops) {
  if (ops.empty()) return SpMat();
  const auto rows = ops[0].rows(), cols = ops[0].cols();
  std::vector<Eigen::Triplet<cplx>> t;
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (int k = 0; k < ops[i].outerSize(); ++k)
      for (SpMat::InnerIterator it(ops[i], k); it; ++it)
        t.emplace_back(static_cast<Eigen::Index>(i) * rows + it.row(), it.col(), it.value());
  SpMat out(rows * static_cast<Eigen::Index>(ops.size()), cols);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Mat block_diag(const Mat& a, int copies) {
  Mat out = Mat::Zero(a.rows() * copies, a.cols() * copies);
  for (int i = 0; i < copies; ++i) out.block(i * a.rows(), i * a.cols(), a.rows(), a.cols()) = a;
  return out;
}

DeltaOps delta_ops(const SpaceSpec& space) {
  const KernelSpec& k = *space.kernel;
  const int N = space.N();
  if (k.max_degree < N + 1) {
    std::ostringstream os;
    os << "Delta at degree " << N << " needs a_" << N + 1 << " but the kernel horizon is " << k.max_degree;
    throw Error(ErrorKind::HorizonTooShort, os.str());
  }
  DeltaOps out;
  out.delta_by_degree.resize(N + 1);
  out.Delta_by_degree.resize(N + 1);
  if (k.exact()) {
    const auto& a = *k.a_exact;
    std::vector<Rational> de(static_cast<std::size_t>(N) + 1), De(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n) {
      de[n] = n == 0 ? Rational(1) : Rational(a[n] / a[n - 1]);
      De[n] = a[n + 1] / a[n];
      out.delta_by_degree(n) = static_cast<double>(de[n]);
      out.Delta_by_degree(n) = static_cast<double>(De[n]);
    }
    out.delta_exact = std::move(de);
    out.Delta_exact = std::move(De);
  } else {
    for (int n = 0; n <= N; ++n) {
      out.delta_by_degree(n) = n == 0 ? 1.0 : k.a[n] / k.a[n - 1];
      out.Delta_by_degree(n) = k.a[n + 1] / k.a[n];
    }
  }
  RealVec dv(space.dim()), Dv(space.dim());
  for (int n = 0; n <= N; ++n) {
    for (int j = space.degree_offset(n); j < space.degree_limit(n); ++j) {
      dv(j) = out.delta_by_degree(n);
      Dv(j) = out.Delta_by_degree(n);
    }
  }
  out.delta = diagonal(dv);
  out.Delta = diagonal(Dv);
  return out;
}

namespace {

SpMat delta_only(const SpaceSpec& space) {
  const KernelSpec& k = *space.kernel;
  RealVec dv(space.dim());
  for (int n = 0; n <= space.N(); ++n)
    for (int j = space.degree_offset(n); j < space.degree_limit(n); ++j)
      dv(j) = n == 0 ? 1.0 : k.a[static_cast<std::size_t>(n)] / k.a[static_cast<std::size_t>(n) - 1];
  return diagonal(dv);
}

}  // namespace

std::vector<SpMat> cauchy_dual(const SpaceSpec& space) {
  const SpMat delta = delta_only(space);
  std::vector<SpMat> out;
  for (const SpMat& m : shift_matrices(space).shift) out.push_back(SpMat(delta * m));
  return out;
}

SpMat range_projection(const SpaceSpec& space) {
  const ShiftOperators ops = shift_matrices(space);
  SpMat sum(space.dim(), space.dim());
  for (int i = 0; i < space.d(); ++i) sum += SpMat(ops.shift[i] * ops.adjoint[i]);
  return SpMat(delta_only(space) * sum);
}

SpMat adjoint_range_projection(const SpaceSpec& space) {
  const ShiftOperators ops = shift_matrices(space);
  const SpMat row = stack_row(ops.shift);
  const SpMat col = stack_column(ops.adjoint);
  return SpMat(col * SpMat(delta_only(space) * row));
}

}  // namespace kcontract
