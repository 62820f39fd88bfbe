#include "kcontract/realization.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kcontract {

namespace {

void check_quadruple_shapes(const RealizationQuadruple& q) {
  const int p = q.T.p(), d = q.T.d();
  const bool ok = q.C.cols() == p && q.B.rows() == d * p && q.D.rows() == q.C.rows() && q.D.cols() == q.B.cols() &&
                  q.DeltaT.rows() == p && q.DeltaT.cols() == p;
  if (!ok) throw Error(ErrorKind::DimensionMismatch, "quadruple blocks have inconsistent shapes");
}

// Largest metric norm of the part of each column of (+)J B that falls outside the range of
// the adjoint shift column, after discarding the top degree of every component.
double range_residual(const SpaceSpec& space, const Mat& J, const Mat& B, int p, int d) {
  if (B.cols() == 0) return 0.0;
  Mat lifted(d * space.dim(), B.cols());
  for (int i = 0; i < d; ++i) {
    Mat part = J * B.middleRows(i * p, p);
    restrict_band(space, part, space.N() - 1);
    lifted.middleRows(i * space.dim(), space.dim()) = part;
  }
  const Mat resid = lifted - adjoint_range_projection(space) * lifted;
  const RealVec s = space.metric_sqrt();
  double worst = 0.0;
  for (Eigen::Index c = 0; c < resid.cols(); ++c) {
    double n2 = 0.0;
    for (int i = 0; i < d; ++i)
      n2 += (s.cast<cplx>().asDiagonal() * resid.col(c).segment(i * space.dim(), space.dim())).squaredNorm();
    worst = std::max(worst, std::sqrt(n2));
  }
  return worst;
}

}  // namespace

Mat j_C(const OperatorTuple& T, const Mat& C, std::shared_ptr<const KernelSpec> kernel, int N) {
  const SpaceSpec space = make_space(std::move(kernel), T.d(), N, static_cast<int>(C.rows()));
  return dilation_matrix(T, C, space);
}

ConditionReport check_conditions(const RealizationQuadruple& q, std::shared_ptr<const KernelSpec> kernel, int N,
                                 const ConditionOptions& opts) {
  check_quadruple_shapes(q);
  if (kernel->max_degree < N + 1) throw Error(ErrorKind::HorizonTooShort, "kernel horizon must exceed N");
  const int p = q.T.p(), d = q.T.d();
  ConditionReport rep;
  rep.tol = opts.tol;
  rep.mem_tol = opts.mem_tol;
  rep.band_hi = N - 1;

  DefectOptions dopts = opts.defect;
  dopts.throw_not_positive = false;
  const DefectResult defect = defect_operator(q.T, *kernel, dopts);
  const Mat DeltaT = delta_T_series(q.T, *kernel, defect.defect_op, opts.series).value;
  rep.deltaT_mismatch = op_norm(q.DeltaT - DeltaT);

  const Mat BD = q.B.adjoint() * block_diag(DeltaT, d);
  rep.k1 = op_norm(q.C.adjoint() * q.C - defect.defect_op);
  rep.k2 = op_norm(q.D.adjoint() * q.C + BD * q.T.adjoint_column());
  rep.k3 = op_norm(q.D.adjoint() * q.D + BD * q.B - Mat::Identity(q.B.cols(), q.B.cols()));

  const SpaceSpec space = make_space(kernel, d, N, static_cast<int>(q.C.rows()));
  rep.k4 = range_residual(space, dilation_matrix(q.T, q.C, space), q.B, p, d);

  rep.k1_pass = rep.k1 <= opts.tol;
  rep.k2_pass = rep.k2 <= opts.tol;
  rep.k3_pass = rep.k3 <= opts.tol;
  rep.k4_pass = rep.k4 <= opts.mem_tol;
  return rep;
}

InnerFunctionPoly build_W_from_quadruple(const RealizationQuadruple& q, const KernelSpec& kernel, int N) {
  check_quadruple_shapes(q);
  if (kernel.max_degree < N) throw Error(ErrorKind::HorizonTooShort, "kernel horizon below N");
  const int p = q.T.p(), d = q.T.d();
  auto basis = std::make_shared<IndexBasis>(d, N);
  const std::vector<Mat> powers = adjoint_powers(q.T, *basis);
  InnerFunctionPoly W;
  W.basis = basis;
  W.target_dim = static_cast<int>(q.D.rows());
  W.source_dim = static_cast<int>(q.D.cols());
  W.coeffs.assign(static_cast<std::size_t>(basis->size()), Mat::Zero(W.target_dim, W.source_dim));
  W.coeffs[0] = q.D;
  // degree n+1 coefficient at beta: sum_{i : beta_i >= 1} a_{n+1} gamma_{beta-e_i} C T^{*(beta-e_i)} B_i
  for (int k = 1; k < basis->size(); ++k) {
    const double a = kernel.a[static_cast<std::size_t>(basis->degree(k))];
    Mat acc = Mat::Zero(W.target_dim, W.source_dim);
    for (int i = 0; i < d; ++i) {
      const int parent = basis->shift_down(k, i);
      if (parent < 0) continue;
      acc += static_cast<double>(basis->gamma(parent)) * (q.C * (powers[static_cast<std::size_t>(parent)] * q.B.middleRows(i * p, p)));
    }
    W.coeffs[static_cast<std::size_t>(k)] = a * acc;
  }
  return W;
}

double pointwise_realization_error(const InnerFunctionPoly& W, const RealizationQuadruple& q,
                                   const KernelSpec& kernel, int points, double radius, std::uint64_t seed) {
  check_quadruple_shapes(q);
  const int p = q.T.p(), d = q.T.d();
  Rng rng(seed);
  double worst = 0.0;
  for (int s = 0; s < points; ++s) {
    const Vec z = random_ball_point(d, radius, rng);
    Mat zb = Mat::Zero(p, q.B.cols());
    for (int i = 0; i < d; ++i) zb += z(i) * q.B.middleRows(i * p, p);
    const Mat direct = q.D + q.C * (F_eval(q.T, kernel, z).value * zb);
    worst = std::max(worst, op_norm(W.evaluate(z) - direct));
  }
  return worst;
}

namespace {

double weight_of(const KernelSpec& kernel, const IndexBasis& basis, int k) {
  return kernel.a[static_cast<std::size_t>(basis.degree(k))] * static_cast<double>(basis.gamma(k));
}

Mat gram_of(const InnerFunctionPoly& W, const KernelSpec& kernel, bool skip_constant) {
  Mat g = Mat::Zero(W.source_dim, W.source_dim);
  for (int k = skip_constant ? 1 : 0; k < W.basis->size(); ++k) {
    const Mat& c = W.coeffs[static_cast<std::size_t>(k)];
    g += c.adjoint() * c / weight_of(kernel, *W.basis, k);
  }
  return hermitian_part(g);
}

}  // namespace

KInnerReport verify_kinner(const InnerFunctionPoly& W, const KernelSpec& kernel, int N, double kin_tol) {
  KInnerReport rep;
  rep.degree = W.degree();
  rep.tol = kin_tol;
  if (rep.degree > N) {
    std::ostringstream os;
    os << "inner function degree " << rep.degree << " exceeds N = " << N;
    throw Error(ErrorKind::DegreeOverflow, os.str());
  }
  if (kernel.max_degree < std::max(N, W.basis->N()))
    throw Error(ErrorKind::HorizonTooShort, "kernel horizon below the verification degree");
  rep.isometry_residual = hermitian_norm(gram_of(W, kernel, false) - Mat::Identity(W.source_dim, W.source_dim));

  rep.band_lo = 1;
  rep.band_hi = N - rep.degree;
  const IndexBasis& b = *W.basis;
  // Only shifts with |alpha| <= deg W can pair two nonzero coefficients.
  const int reach = std::min(rep.band_hi, rep.degree);
  if (reach >= 1) {
    const IndexBasis shifts(b.d(), reach);
    for (int a = 1; a < shifts.size(); ++a) {
      const MultiIndex& alpha = shifts.index(a);
      Mat m = Mat::Zero(W.source_dim, W.source_dim);
      for (int k = 0; k < b.size(); ++k) {
        if (b.degree(k) + shifts.degree(a) > rep.degree) continue;
        MultiIndex sum = b.index(k);
        for (int i = 0; i < b.d(); ++i) sum[static_cast<std::size_t>(i)] += alpha[static_cast<std::size_t>(i)];
        const int t = b.position(sum);
        if (t < 0) continue;
        // <W x, z^alpha W y> = sum_beta <W_{beta+alpha} x, W_beta y> / w_{beta+alpha}
        m += W.coeffs[static_cast<std::size_t>(k)].adjoint() * W.coeffs[static_cast<std::size_t>(t)] / weight_of(kernel, b, t);
      }
      rep.orthogonality_residual = std::max(rep.orthogonality_residual, op_norm(m));
    }
  }
  rep.verdict = rep.isometry_residual <= kin_tol && rep.orthogonality_residual <= kin_tol;
  return rep;
}

double isometry_identity_residual(const InnerFunctionPoly& W, const Mat& D, const KernelSpec& kernel) {
  if (D.rows() != W.target_dim || D.cols() != W.source_dim)
    throw Error(ErrorKind::DimensionMismatch, "D does not match the inner function");
  const Mat lhs = gram_of(W, kernel, true) + W.coeffs[0].adjoint() * W.coeffs[0] - D.adjoint() * D;
  const Mat rhs = Mat::Identity(W.source_dim, W.source_dim) - D.adjoint() * D;
  return op_norm(lhs - rhs);
}

MultiplierReport da_multiplier_check(const InnerFunctionPoly& W, const KernelSpec& kernel, const std::vector<Vec>& points,
                                     const MultiplierOptions& opts) {
  MultiplierReport rep;
  for (int n = 1; n <= kernel.max_degree; ++n)
    rep.row_norm = std::max(rep.row_norm, kernel.a[static_cast<std::size_t>(n) - 1] / kernel.a[static_cast<std::size_t>(n)]);
  rep.row_contraction = rep.row_norm <= 1.0 + opts.row_tol;
  if (!rep.row_contraction && opts.require_row_contraction) {
    std::ostringstream os;
    os << "||M_z M_z^*|| = " << rep.row_norm << " over the kernel horizon " << kernel.max_degree;
    throw Error(ErrorKind::NotRowContraction, os.str());
  }
  const int m = static_cast<int>(points.size()), r = W.target_dim;
  std::vector<Mat> values;
  for (const Vec& z : points) {
    if (z.size() != W.basis->d()) throw Error(ErrorKind::DimensionMismatch, "sample point dimension");
    values.push_back(W.evaluate(z));
  }
  Mat big(m * r, m * r);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i != j && (points[i] - points[j]).norm() == 0.0)
        throw Error(ErrorKind::BadParameter, "sample points must be pairwise distinct");
      const cplx t = points[j].dot(points[i]);  // <z_i, z_j>
      if (std::abs(t) >= 1.0) throw Error(ErrorKind::KernelSingularity, "|<z_i, z_j>| >= 1");
      big.block(i * r, j * r, r, r) = kernel.k(t) * Mat::Identity(r, r) -
                                      values[i] * values[j].adjoint() / (1.0 - t);
    }
  }
  rep.min_eig = min_eigenvalue(big);
  rep.pass = rep.min_eig >= -opts.psd_tol;
  return rep;
}

}  // namespace kcontract
