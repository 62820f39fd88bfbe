#include "kcontract/dilation.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kcontract {

namespace {

// Scales the rows of a flat-coordinate matrix by G^{1/2} (or its inverse).
Mat to_hat(const SpaceSpec& space, const Mat& x) { return space.metric_sqrt().cast<cplx>().asDiagonal() * x; }
Mat from_hat(const SpaceSpec& space, const Mat& x) {
  return space.metric_sqrt().cwiseInverse().cast<cplx>().asDiagonal() * x;
}

// Operator norm of a map into H_K(E) given in flat coordinates.
double metric_op_norm(const SpaceSpec& space, const Mat& x) { return op_norm(to_hat(space, x)); }

Mat block_of(const Mat& x, int i, int p) { return x.middleRows(i * p, p); }

}  // namespace

int InnerFunctionPoly::degree() const {
  int deg = 0;
  for (int k = 0; k < basis->size(); ++k)
    if (coeffs[static_cast<std::size_t>(k)].size() > 0 && coeffs[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() > 0.0)
      deg = std::max(deg, basis->degree(k));
  return deg;
}

Mat InnerFunctionPoly::evaluate(const Vec& z) const {
  const Vec m = monomials(*basis, z);
  Mat out = Mat::Zero(target_dim, source_dim);
  for (int k = 0; k < basis->size(); ++k) out += m(k) * coeffs[static_cast<std::size_t>(k)];
  return out;
}

Mat InnerFunctionPoly::as_columns() const {
  Mat out(basis->size() * target_dim, source_dim);
  for (int k = 0; k < basis->size(); ++k) out.middleRows(k * target_dim, target_dim) = coeffs[static_cast<std::size_t>(k)];
  return out;
}

InnerFunctionPoly inner_function_from_columns(std::shared_ptr<const IndexBasis> basis, int target_dim,
                                              const Mat& columns) {
  if (columns.rows() != basis->size() * target_dim)
    throw Error(ErrorKind::DimensionMismatch, "column length does not match basis and target dimension");
  InnerFunctionPoly w;
  w.basis = std::move(basis);
  w.target_dim = target_dim;
  w.source_dim = static_cast<int>(columns.cols());
  for (int k = 0; k < w.basis->size(); ++k) w.coeffs.push_back(columns.middleRows(k * target_dim, target_dim));
  return w;
}

std::vector<Mat> adjoint_powers(const OperatorTuple& T, const IndexBasis& basis) {
  std::vector<Mat> out(static_cast<std::size_t>(basis.size()));
  out[0] = Mat::Identity(T.p(), T.p());
  for (int k = 1; k < basis.size(); ++k) {
    const MultiIndex& alpha = basis.index(k);
    int i = 0;
    while (alpha[static_cast<std::size_t>(i)] == 0) ++i;
    out[static_cast<std::size_t>(k)] = T[i].adjoint() * out[static_cast<std::size_t>(basis.shift_down(k, i))];
  }
  return out;
}

Mat dilation_matrix(const OperatorTuple& T, const Mat& C, const SpaceSpec& space) {
  if (C.cols() != T.p() || C.rows() != space.coeff_dim)
    throw Error(ErrorKind::DimensionMismatch, "factor C does not match tuple and coefficient space");
  if (space.d() != T.d()) throw Error(ErrorKind::DimensionMismatch, "space and tuple have different d");
  const IndexBasis& b = *space.basis;
  const std::vector<Mat> powers = adjoint_powers(T, b);
  Mat J(space.dim(), T.p());
  for (int k = 0; k < b.size(); ++k) {
    const double scale = space.kernel->a[static_cast<std::size_t>(b.degree(k))] * static_cast<double>(b.gamma(k));
    J.middleRows(k * space.coeff_dim, space.coeff_dim) = scale * (C * powers[static_cast<std::size_t>(k)]);
  }
  return J;
}

DilationPack canonical_dilation(const OperatorTuple& T, std::shared_ptr<const KernelSpec> kernel, int N,
                                const DilationOptions& opts) {
  if (!kernel) throw Error(ErrorKind::BadParameter, "dilation needs a kernel");
  if (N < 1) throw Error(ErrorKind::BadParameter, "truncation degree must be >= 1");
  if (kernel->max_degree < N + 1) {
    std::ostringstream os;
    os << "kernel horizon " << kernel->max_degree << " < N + 1 = " << N + 1;
    throw Error(ErrorKind::HorizonTooShort, os.str());
  }
  DilationPack pack(T);
  pack.kernel = kernel;
  pack.N = N;
  pack.defect = defect_operator(T, *kernel, opts.defect);
  pack.C = pack.defect.C;
  {
    const HermitianEig eig = hermitian_eig(pack.defect.defect_op);
    pack.V_r = eig.vectors.leftCols(pack.defect.defect_dim);
  }

  pack.pureness = pureness_residuals(T, *kernel, pack.defect.defect_op, kernel->max_degree);
  pack.pure = pureness_verdict(pack.pureness, opts.pure_tau);
  if (!pack.pure.pure) {
    std::ostringstream os;
    os << "pureness residual " << pack.pure.final_residual << " at horizon " << pack.pure.horizon
       << (pack.pure.monotone_tail ? "" : " (tail not monotone)") << " against tau " << opts.pure_tau;
    throw Error(ErrorKind::NotPure, os.str());
  }

  const SeriesSum dt = delta_T_series(T, *kernel, pack.defect.defect_op, opts.series);
  pack.DeltaT = dt.value;
  pack.DeltaT_terms = dt.terms_used;

  const int r = pack.defect.defect_dim;
  pack.space = make_space(kernel, T.d(), N, r);
  const SpaceSpec& space = pack.space;
  pack.J = dilation_matrix(T, pack.C, space);

  const RealVec g = space.metric();
  const Mat gram = pack.J.adjoint() * g.cast<cplx>().asDiagonal() * pack.J;
  pack.isometry_residual = hermitian_norm(gram - Mat::Identity(T.p(), T.p()));
  const double tail = pack.pureness[static_cast<std::size_t>(std::min<int>(N, static_cast<int>(pack.pureness.size()) - 1))];
  pack.iso_tol_effective = opts.tail_aware ? std::max(opts.iso_tol, 10.0 * tail) : opts.iso_tol;
  if (pack.isometry_residual > pack.iso_tol_effective) {
    std::ostringstream os;
    os << "||J^*GJ - I|| = " << pack.isometry_residual << " > " << pack.iso_tol_effective << " at N = " << N
       << "; residual by degree:";
    for (int n = 0; n <= N; ++n) os << (n ? ", " : " ") << pack.pureness[static_cast<std::size_t>(n)];
    throw Error(ErrorKind::IsometryDegraded, os.str());
  }

  pack.band_lo = 0;
  pack.band_hi = N - 1;
  const ShiftOperators ops = shift_matrices(space);
  for (int i = 0; i < T.d(); ++i) {
    Mat diff = pack.J * T[i].adjoint() - ops.adjoint[static_cast<std::size_t>(i)] * pack.J;
    restrict_band(space, diff, pack.band_hi);
    pack.intertwining_residuals.push_back(metric_op_norm(space, diff));
  }

  const DeltaOps dops = delta_ops(space);
  pack.DeltaT_truncated = hermitian_part(pack.J.adjoint() * g.cast<cplx>().asDiagonal() * (dops.Delta * pack.J));
  pack.DeltaT_truncation_gap = hermitian_norm(pack.DeltaT - pack.DeltaT_truncated);
  pack.DeltaT_eigs = hermitian_eig(pack.DeltaT).values;
  pack.DeltaT_lower_bound = 1.0 / kernel->ratio_sup;

  const int p = T.p(), d = T.d();
  pack.R = psd_sqrt(pack.DeltaT);
  pack.R_inv = psd_inv_sqrt(pack.DeltaT);
  pack.That = Mat(p, d * p);
  for (int i = 0; i < d; ++i) {
    pack.That.middleCols(i * p, p) = T[i] * pack.R;
    pack.Ttilde.push_back(T[i] * pack.DeltaT);
  }
  pack.DTtilde = psd_sqrt(Mat::Identity(d * p, d * p) - pack.That.adjoint() * pack.That);
  pack.DTtilde_star = psd_sqrt(Mat::Identity(p, p) - pack.That * pack.That.adjoint());

  // Admissible subspace: y in the range of D_{T~} whose lift (+)j I_T^{-1} D_{T~} y lies in the
  // range of the adjoint shift, tested on the validated band.
  pack.defect_range_basis = orthonormal_range(pack.DTtilde, opts.range_rel_tol);
  const Mat& ran = pack.defect_range_basis;
  const int q = static_cast<int>(ran.cols());
  const Mat X = block_diag(pack.R_inv, d) * pack.DTtilde * ran;
  Mat lifted(d * space.dim(), q);
  for (int i = 0; i < d; ++i) {
    Mat part = pack.J * block_of(X, i, p);
    restrict_band(space, part, N - 1);
    lifted.middleRows(i * space.dim(), space.dim()) = part;
  }
  const SpMat Q = adjoint_range_projection(space);
  Mat residual = lifted - Q * lifted;
  const RealVec s = space.metric_sqrt();
  for (int i = 0; i < d; ++i) residual.middleRows(i * space.dim(), space.dim()) = s.cast<cplx>().asDiagonal() * residual.middleRows(i * space.dim(), space.dim());

  if (q > 0) {
    Eigen::JacobiSVD<Mat> svd(residual, Eigen::ComputeFullV);
    RealVec sv = RealVec::Zero(q);
    const RealVec& raw = svd.singularValues();
    for (Eigen::Index k = 0; k < raw.size(); ++k) sv(k) = raw(k);
    // singular values come descending; rows < q leaves trailing exact zeros
    std::vector<int> accepted;
    for (int k = q - 1; k >= 0; --k) {
      if (sv(k) < opts.mem_tol) {
        accepted.push_back(k);
      } else if (sv(k) <= 10.0 * opts.mem_tol) {
        std::ostringstream os;
        os << "membership residual " << sv(k) << " lies in the gray zone [" << opts.mem_tol << ", "
           << 10.0 * opts.mem_tol << "]";
        throw Error(ErrorKind::MembershipAmbiguous, os.str());
      }
    }
    pack.membership_singular_values = sv.reverse();
    Mat null(q, static_cast<Eigen::Index>(accepted.size()));
    for (std::size_t c = 0; c < accepted.size(); ++c) {
      null.col(static_cast<Eigen::Index>(c)) = svd.matrixV().col(accepted[c]);
      pack.membership_residual = std::max(pack.membership_residual, sv(accepted[c]));
    }
    pack.tildeD_basis = ran * null;
    normalize_phases(pack.tildeD_basis);
  } else {
    pack.tildeD_basis = Mat(d * p, 0);
  }
  return pack;
}

Vec adjoint_dilation_apply(const DilationPack& pack, const Vec& f) {
  const SpaceSpec& space = pack.space;
  if (f.size() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "vector does not belong to the dilation space");
  const std::vector<Mat> powers = adjoint_powers(pack.T, *space.basis);
  Vec out = Vec::Zero(pack.T.p());
  const Mat Cs = pack.C.adjoint();
  for (int k = 0; k < space.basis->size(); ++k)
    out += powers[static_cast<std::size_t>(k)].adjoint() * (Cs * f.segment(k * space.coeff_dim, space.coeff_dim));
  return out;
}

FEvalResult F_eval(const OperatorTuple& T, const KernelSpec& kernel, const Vec& z, const SeriesOptions& opts,
                   double margin) {
  if (z.size() != T.d()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from the tuple");
  Mat zt = Mat::Zero(T.p(), T.p());
  for (int i = 0; i < T.d(); ++i) zt += z(i) * T[i].adjoint();
  const double rho = spectral_radius(zt);
  if (!(rho < kernel.r_estimate * (1.0 - margin))) {
    std::ostringstream os;
    os << "rho(ZT*) = " << rho << " not below r_estimate * (1 - margin) = " << kernel.r_estimate * (1.0 - margin);
    throw Error(ErrorKind::SpectralUnsafe, os.str());
  }
  FEvalResult out;
  out.value = Mat::Zero(T.p(), T.p());
  Mat power = Mat::Identity(T.p(), T.p());
  int run = 0;
  for (int n = 0; n < kernel.max_degree; ++n) {
    if (n > 0) power = power * zt;
    const double coef = kernel.a[static_cast<std::size_t>(n) + 1];
    out.value += coef * power;
    out.terms_used = n;
    run = coef * power.norm() < opts.series_tol ? run + 1 : 0;
    if (run >= opts.run_length) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    std::ostringstream os;
    os << "F(ZT*) series not converged by horizon " << kernel.max_degree;
    throw Error(ErrorKind::SeriesNotConverged, os.str());
  }
  return out;
}

DilationChecks check_dilation(const DilationPack& pack, int samples, std::uint64_t seed) {
  DilationChecks out;
  const SpaceSpec& space = pack.space;
  const int p = pack.T.p(), d = pack.T.d();
  const RealVec g = space.metric();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_vec = [&](int n) {
    Vec v(n);
    for (int k = 0; k < n; ++k) v(k) = cplx(gauss(rng), gauss(rng));
    return v;
  };

  out.deltaT_invertibility_gap = pack.DeltaT_lower_bound - pack.DeltaT_eigs(pack.DeltaT_eigs.size() - 1);
  const Mat TT = pack.That * pack.That.adjoint();
  out.ttilde_min_eig = min_eigenvalue(Mat::Identity(p, p) - TT);
  const SpMat P = range_projection(space);
  const Mat jPj = pack.J.adjoint() * g.cast<cplx>().asDiagonal() * (P * pack.J);
  out.ttilde_projection_residual = hermitian_norm(TT - hermitian_part(jPj));

  Mat U(p + d * p, p + d * p);
  U << pack.That, pack.DTtilde_star, pack.DTtilde, -pack.That.adjoint();
  out.unitary_residual = op_norm(U.adjoint() * U - Mat::Identity(U.cols(), U.cols()));
  out.defect_star_residual = op_norm(pack.DTtilde_star - pack.V_r * pack.C);
  out.ttilde_intertwining = op_norm(pack.That * pack.DTtilde - pack.DTtilde_star * pack.That);

  const std::vector<SpMat> dual = cauchy_dual(space);
  for (int s = 0; s < samples; ++s) {
    const Vec f = random_vec(space.dim());
    const Vec direct = adjoint_dilation_apply(pack, f);
    const Vec via_matrix = pack.J.adjoint() * (g.cast<cplx>().asDiagonal() * f);
    out.adjoint_apply_residual =
        std::max(out.adjoint_apply_residual, (direct - via_matrix).norm() / std::max(1.0, via_matrix.norm()));

    const Vec x = random_vec(d * p);
    const Vec z = random_ball_point(d, 0.5, rng);
    Vec zx = Vec::Zero(p);
    Vec lifted = Vec::Zero(space.dim());
    for (int i = 0; i < d; ++i) {
      zx += z(i) * x.segment(i * p, p);
      lifted += dual[static_cast<std::size_t>(i)] * (pack.J * x.segment(i * p, p));
    }
    const Vec lhs = pack.C * (F_eval(pack.T, *pack.kernel, z).value * zx);
    const Vec rhs = evaluate(space, lifted, z);
    out.cfz_residual = std::max(out.cfz_residual, (lhs - rhs).norm() / std::max(1.0, x.norm()));
  }

  if (pack.tildeD_basis.cols() > 0) {
    const Mat ty = pack.That * pack.tildeD_basis;
    out.tildeD_defect_leak = op_norm(ty - pack.V_r * (pack.V_r.adjoint() * ty));
  }
  return out;
}

namespace {

// Q-form pieces for the wandering functional in hat coordinates.
struct WanderingForm {
  Mat QJ;                     // orthonormal basis of the hat image of J
  std::vector<SpMat> adjoint;  // M_i^# in flat coordinates
};

WanderingForm wandering_form(const DilationPack& pack) {
  WanderingForm wf;
  wf.QJ = orthonormal_range(to_hat(pack.space, pack.J), 1e-13);
  wf.adjoint = shift_matrices(pack.space).adjoint;
  return wf;
}

// H = V^* P_J V + sum_i V^* M^_i (I - P_J) M^_i^* V for hat-orthonormal V.
Mat wandering_matrix(const DilationPack& pack, const WanderingForm& wf, const Mat& V) {
  const Mat a1 = wf.QJ.adjoint() * V;
  Mat h = a1.adjoint() * a1;
  const Mat orig = from_hat(pack.space, V);
  for (const SpMat& adj : wf.adjoint) {
    Mat m = to_hat(pack.space, adj * orig);
    m -= wf.QJ * (wf.QJ.adjoint() * m);
    h += m.adjoint() * m;
  }
  return hermitian_part(h);
}

WanderingResult select_wandering(const DilationPack& pack, const Mat& V, const Mat& h, const WanderingOptions& opts) {
  WanderingResult out;
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  out.ritz_values = es.eigenvalues();
  int k = 0;
  while (k < out.ritz_values.size() && out.ritz_values(k) <= opts.sep_tol) ++k;
  out.dim = k;
  if (k < out.ritz_values.size()) {
    out.next_value = out.ritz_values(k);
    out.rank_warning = out.next_value < opts.gap_factor * opts.sep_tol;
  }
  Mat hat = V * es.eigenvectors().leftCols(k);
  // re-orthonormalize within the selected span and fix phases deterministically
  if (k > 0) hat = orthonormal_range(hat, 1e-12);
  out.basis = from_hat(pack.space, hat);
  return out;
}

}  // namespace

WanderingResult wandering_subspace(const DilationPack& pack, const WanderingOptions& opts) {
  const SpaceSpec& space = pack.space;
  const int p = pack.T.p(), d = pack.T.d(), r = space.coeff_dim;
  const std::vector<SpMat> dual = cauchy_dual(space);
  Mat trial = Mat::Zero(space.dim(), r + d * p);
  for (int e = 0; e < r; ++e) trial(e, e) = 1.0;
  for (int i = 0; i < d; ++i) trial.middleCols(r + i * p, p) = dual[static_cast<std::size_t>(i)] * pack.J;
  const Mat V = orthonormal_range(to_hat(space, trial), 1e-12);
  const WanderingForm wf = wandering_form(pack);
  return select_wandering(pack, V, wandering_matrix(pack, wf, V), opts);
}

WanderingResult wandering_subspace_dense(const DilationPack& pack, const WanderingOptions& opts) {
  const WanderingForm wf = wandering_form(pack);
  const Mat V = Mat::Identity(pack.space.dim(), pack.space.dim());
  return select_wandering(pack, V, wandering_matrix(pack, wf, V), opts);
}

WanderingChecks check_wandering(const DilationPack& pack, const Mat& basis) {
  WanderingChecks out;
  const SpaceSpec& space = pack.space;
  const int p = pack.T.p(), d = pack.T.d(), r = space.coeff_dim;
  const RealVec g = space.metric();
  const ShiftOperators ops = shift_matrices(space);
  const std::vector<SpMat> dual = cauchy_dual(space);
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    const Vec f = basis.col(c);
    const double fn2 = std::pow(norm(space, f), 2);
    if (fn2 == 0.0) continue;
    const Vec f0 = f.head(r);
    Vec recon = Vec::Zero(space.dim());
    recon.head(r) = f0;
    Vec defect_eq = pack.C.adjoint() * f0;
    double quad = 0.0;
    for (int i = 0; i < d; ++i) {
      const Vec xi = pack.J.adjoint() * (g.cast<cplx>().asDiagonal() * (ops.adjoint[static_cast<std::size_t>(i)] * f));
      recon += dual[static_cast<std::size_t>(i)] * (pack.J * xi);
      defect_eq += pack.T[i] * (pack.DeltaT * xi);
      quad += std::real(xi.dot(pack.DeltaT * xi));
    }
    out.decomposition_residual = std::max(out.decomposition_residual, norm(space, f - recon) / std::sqrt(fn2));
    out.defect_equation_residual = std::max(out.defect_equation_residual, defect_eq.norm() / std::sqrt(fn2));
    out.norm_identity_error = std::max(out.norm_identity_error, std::abs(fn2 - f0.squaredNorm() - quad) / fn2);
    (void)p;
  }
  return out;
}

WTResult build_WT(const DilationPack& pack) {
  const SpaceSpec& space = pack.space;
  const int p = pack.T.p(), d = pack.T.d(), r = space.coeff_dim;
  const Mat& Y = pack.tildeD_basis;
  const Mat B = block_diag(pack.R_inv, d) * pack.DTtilde * Y;
  const Mat D = pack.V_r.adjoint() * (-pack.That * Y);

  const std::vector<SpMat> dual = cauchy_dual(space);
  Mat columns = Mat::Zero(space.dim(), Y.cols());
  columns.topRows(r) = D;
  for (int i = 0; i < d; ++i) columns += dual[static_cast<std::size_t>(i)] * (pack.J * block_of(B, i, p));

  RealizationQuadruple q(pack.T);
  q.B = B;
  q.C = pack.C;
  q.D = D;
  q.DeltaT = pack.DeltaT;
  return WTResult{inner_function_from_columns(space.basis, r, columns), std::move(q), columns};
}

RealVec weighted_principal_sines(const SpaceSpec& space, const Mat& a, const Mat& b) {
  const Mat qa = a.cols() ? orthonormal_range(to_hat(space, a), 1e-12) : Mat(space.dim(), 0);
  const Mat qb = b.cols() ? orthonormal_range(to_hat(space, b), 1e-12) : Mat(space.dim(), 0);
  if (qa.cols() >= qb.cols()) return principal_angle_sines(qa, qb);
  return principal_angle_sines(qb, qa);
}

namespace {

// [J_k / sqrt(w_k)]_k side by side: E x (size * p).
Mat stacked_blocks(const Mat& J, const SpaceSpec& space) {
  if (J.rows() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "dilation matrix does not match the space");
  const int m = space.coeff_dim;
  const auto p = J.cols();
  Mat out(m, space.basis->size() * p);
  for (int k = 0; k < space.basis->size(); ++k)
    out.middleCols(k * p, p) = J.middleRows(k * m, m) / std::sqrt(space.weight(k));
  return out;
}

}  // namespace

SupportResult minimal_support(const Mat& J, const SpaceSpec& space, double rel_tol) {
  SupportResult out;
  out.basis = orthonormal_range(stacked_blocks(J, space), rel_tol);
  out.dim = static_cast<int>(out.basis.cols());
  out.minimal = out.dim == space.coeff_dim;
  return out;
}

CompareResult compare_dilations(const Mat& J1, const SpaceSpec& space1, const Mat& J2, const SpaceSpec& space2,
                                double rec_tol) {
  if (space1.d() != space2.d() || space1.N() != space2.N() || J1.cols() != J2.cols())
    throw Error(ErrorKind::DimensionMismatch, "dilations live over different bases or tuples");
  for (int k = 0; k < space1.basis->size(); ++k)
    if (std::abs(space1.weight(k) - space2.weight(k)) > 1e-12 * space1.weight(k))
      throw Error(ErrorKind::DimensionMismatch, "dilations use different kernels");
  const SupportResult s1 = minimal_support(J1, space1), s2 = minimal_support(J2, space2);
  if (!s1.minimal || !s2.minimal) {
    std::ostringstream os;
    os << "support dimensions " << s1.dim << "/" << space1.coeff_dim << " and " << s2.dim << "/" << space2.coeff_dim;
    throw Error(ErrorKind::NotMinimal, os.str());
  }
  if (space1.coeff_dim != space2.coeff_dim) {
    std::ostringstream os;
    os << "minimal dilations with coefficient dimensions " << space1.coeff_dim << " and " << space2.coeff_dim;
    throw Error(ErrorKind::IrreconcilableDilations, os.str());
  }
  const Mat X = stacked_blocks(J1, space1), Y = stacked_blocks(J2, space2);
  CompareResult out;
  out.U_ls = Y * X.completeOrthogonalDecomposition().pseudoInverse();
  const auto m = out.U_ls.cols();
  out.unitarity_defect = op_norm(out.U_ls.adjoint() * out.U_ls - Mat::Identity(m, m));
  out.U = nearest_unitary(out.U_ls);
  Mat mapped(J1.rows(), J1.cols());
  for (int k = 0; k < space1.basis->size(); ++k)
    mapped.middleRows(k * m, m) = out.U * J1.middleRows(k * m, m);
  out.residual = metric_op_norm(space2, mapped - J2);
  if (out.residual > rec_tol) {
    std::ostringstream os;
    os << "||(I (x) U) J1 - J2|| = " << out.residual << " > " << rec_tol;
    throw Error(ErrorKind::IrreconcilableDilations, os.str());
  }
  return out;
}

}  // namespace kcontract
