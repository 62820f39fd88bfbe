#include <doctest.h>

#include <cmath>

#include "kcontract/corpus.hpp"
#include "kcontract/errors.hpp"
#include "kcontract/realization.hpp"
#include "support/generators.hpp"

using namespace kcontract;

namespace {

Mat scalar(cplx v) { return Mat::Constant(1, 1, v); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::SchemaError;
}

// W(z) = sum over the given (position, coefficient) pairs.
InnerFunctionPoly poly(int d, int N, int r, int s, const std::vector<std::pair<MultiIndex, Mat>>& terms) {
  InnerFunctionPoly w;
  w.basis = std::make_shared<const IndexBasis>(d, N);
  w.source_dim = s;
  w.target_dim = r;
  w.coeffs.assign(static_cast<std::size_t>(w.basis->size()), Mat::Zero(r, s));
  for (const auto& [alpha, m] : terms) w.coeffs[static_cast<std::size_t>(w.basis->position(alpha))] = m;
  return w;
}

DilationPack pack_for(const OperatorTuple& T, std::shared_ptr<const KernelSpec> k) {
  const DefectResult def = defect_operator(T, *k);
  const int N = choose_truncation(T, *k, def.defect_op, 1e-13, 4, 100);
  return canonical_dilation(T, k, N);
}

std::vector<Vec> sample_points(int d, int count, double radius, Rng& rng) {
  std::vector<Vec> pts;
  for (int i = 0; i < count; ++i) pts.push_back(random_ball_point(d, radius, rng));
  return pts;
}

}  // namespace

TEST_CASE("quadruple from the dilation of a scalar passes (K1)-(K4)") {
  const auto k = corpus_kernel("da");
  const DilationPack pack = pack_for(OperatorTuple({scalar(cplx(0.5, 0.2))}), k);
  const WTResult wt = build_WT(pack);
  const ConditionReport rep = check_conditions(wt.quadruple, k, pack.N);
  CHECK(rep.pass());
  CHECK(rep.k1 <= 1e-8);
  CHECK(rep.k2 <= 1e-8);
  CHECK(rep.k3 <= 1e-8);
  CHECK(rep.k4 <= 1e-8);

  RealizationQuadruple broken = wt.quadruple;
  broken.D(0, 0) += 0.1;
  const ConditionReport bad = check_conditions(broken, k, pack.N);
  CHECK(bad.k3 >= 0.01);
  CHECK_FALSE(bad.k3_pass);
}

TEST_CASE("zero-B quadruple: (K3) tracks D^*D and (K2) measures D^*C") {
  const auto k = corpus_kernel("k2");
  RealizationQuadruple q(OperatorTuple({Mat::Zero(1, 1)}));
  q.C = Mat::Identity(1, 1);
  q.B = Mat::Zero(1, 1);
  q.D = scalar(cplx(0.6, 0.8));
  q.DeltaT = scalar(2.0);
  const ConditionReport iso = check_conditions(q, k, 4);
  CHECK(iso.k1_pass);
  CHECK(iso.k4_pass);
  CHECK(iso.k3 < 1e-15);
  CHECK(iso.k2 == doctest::Approx(1.0));
  q.D = scalar(0.5);
  CHECK(check_conditions(q, k, 4).k3 == doctest::Approx(0.75));
  q.B = Mat::Zero(2, 1);
  CHECK(kind_of([&] { check_conditions(q, k, 4); }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("transfer function examples") {
  const auto da = corpus_kernel("da");
  RealizationQuadruple q(OperatorTuple({Mat::Zero(1, 1)}));
  q.C = Mat::Identity(1, 1);
  q.B = Mat::Identity(1, 1);
  q.D = Mat::Zero(1, 1);
  q.DeltaT = Mat::Identity(1, 1);
  const InnerFunctionPoly w = build_W_from_quadruple(q, *da, 4);
  CHECK(w.degree() == 1);
  CHECK(std::abs(w.coeffs[1](0, 0) - 1.0) < 1e-15);

  RealizationQuadruple constant(OperatorTuple({scalar(0.3), scalar(0.2)}));
  constant.C = Mat::Constant(1, 1, 0.7);
  constant.B = Mat::Zero(2, 2);
  Rng rng(1);
  constant.D = gen::matrix(1, 2, rng);
  constant.DeltaT = Mat::Identity(1, 1);
  const InnerFunctionPoly wc = build_W_from_quadruple(constant, *da, 5);
  CHECK(wc.degree() == 0);
  CHECK((wc.coeffs[0] - constant.D).norm() == 0.0);
}

TEST_CASE("two independent routes to W_T agree") {
  const auto k2 = corpus_kernel("k2");
  const DilationPack pack = pack_for(OperatorTuple({scalar(0.5)}), k2);
  const WTResult wt = build_WT(pack);
  const InnerFunctionPoly w = build_W_from_quadruple(wt.quadruple, *k2, pack.N);
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) CHECK((w.coeffs[i] - wt.W.coeffs[i]).norm() <= 1e-10);
  CHECK(pointwise_realization_error(w, wt.quadruple, *k2) <= 1e-8);
}

TEST_CASE("K-inner verifier examples") {
  const auto da = corpus_kernel("da");
  const auto k2 = corpus_kernel("k2");
  const InnerFunctionPoly z = poly(1, 6, 1, 1, {{{1}, Mat::Identity(1, 1)}});
  const KInnerReport rz = verify_kinner(z, *da, 6);
  CHECK(rz.isometry_residual < 1e-15);
  CHECK(rz.orthogonality_residual < 1e-15);
  CHECK(rz.verdict);
  CHECK(rz.band_hi == 5);

  Rng rng(8);
  const InnerFunctionPoly u = poly(2, 4, 3, 3, {{{0, 0}, random_unitary(3, rng)}});
  const KInnerReport ru = verify_kinner(u, *k2, 4);
  CHECK(ru.isometry_residual < 1e-14);
  CHECK(ru.orthogonality_residual < 1e-15);
  CHECK(ru.verdict);

  const KInnerReport bad = verify_kinner(z, *k2, 6);
  CHECK(bad.isometry_residual == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(bad.verdict);

  CHECK(kind_of([&] { verify_kinner(z, *da, 0); }) == ErrorKind::DegreeOverflow);
}

TEST_CASE("isometry identity ||Wx||^2 - ||Dx||^2 = <(I - D^*D)x, x>") {
  for (const char* name : {"khalf_jordan_0.4", "dirichlet_nilpotent_pair_box", "k2_diag_pair_normal"}) {
    INFO(name);
    const CorpusEntry e = *find_corpus_entry(name);
    const auto k = corpus_kernel(e.kernel_key);
    const WTResult wt = build_WT(pack_for(OperatorTuple(corpus_tuple(e.tuple_name)), k));
    CHECK(isometry_identity_residual(wt.W, wt.quadruple.D, *k) <= 1e-8);
  }
}

TEST_CASE("Delta_T does not depend on the choice of square root") {
  for (const char* name : {"da_diag_pair_skew", "khalf_nilpotent_pair_box", "dirichlet_jordan_0.4"}) {
    INFO(name);
    const CorpusEntry e = *find_corpus_entry(name);
    const auto k = corpus_kernel(e.kernel_key);
    const DilationPack pack = pack_for(OperatorTuple(corpus_tuple(e.tuple_name)), k);
    const Mat C_full = psd_sqrt(pack.defect.defect_op);  // p x p factor in another basis
    const Mat J = j_C(pack.T, C_full, k, pack.N);
    const SpaceSpec s = make_space(k, pack.T.d(), pack.N, pack.T.p());
    const DeltaOps ops = delta_ops(s);
    const Mat delta_T = J.adjoint() * s.metric().cast<cplx>().asDiagonal() * (ops.Delta * J);
    CHECK((delta_T - pack.DeltaT_truncated).norm() <= 1e-10);
  }
}

TEST_CASE("multiplier test examples under DA") {
  const auto da = corpus_kernel("da");
  Rng rng(31);
  const auto pts = sample_points(1, 10, 0.95, rng);
  const InnerFunctionPoly zero = poly(1, 3, 1, 1, {});
  CHECK(da_multiplier_check(zero, *da, pts).min_eig >= 0.0);
  const InnerFunctionPoly z = poly(1, 3, 1, 1, {{{1}, Mat::Identity(1, 1)}});
  CHECK(da_multiplier_check(z, *da, pts).min_eig >= -1e-10);
  const InnerFunctionPoly z2 = poly(1, 3, 1, 1, {{{1}, 2.0 * Mat::Identity(1, 1)}});
  int violations = 0;
  for (int set = 0; set < 20; ++set) {
    const auto p = sample_points(1, 10, 0.95, rng);
    if (da_multiplier_check(z2, *da, p).min_eig < 0.0) ++violations;
  }
  CHECK(violations >= 15);
}

TEST_CASE("multiplier test preconditions") {
  const InnerFunctionPoly z = poly(2, 3, 1, 1, {{{1, 0}, Mat::Identity(1, 1)}});
  Vec on_sphere(2);
  on_sphere << 1.0, 0.0;
  Vec inside(2);
  inside << 0.1, 0.2;
  CHECK(kind_of([&] { da_multiplier_check(z, *corpus_kernel("da"), {inside, on_sphere}); }) == ErrorKind::KernelSingularity);
  CHECK(kind_of([&] { da_multiplier_check(z, *corpus_kernel("da"), {inside, inside}); }) == ErrorKind::BadParameter);
  CHECK(kind_of([&] { da_multiplier_check(z, *corpus_kernel("dirichlet"), {inside}); }) == ErrorKind::NotRowContraction);
  MultiplierOptions relaxed;
  relaxed.require_row_contraction = false;
  const MultiplierReport r = da_multiplier_check(z, *corpus_kernel("dirichlet"), {inside}, relaxed);
  CHECK_FALSE(r.row_contraction);
  CHECK(r.row_norm == doctest::Approx(2.0));
}

TEST_CASE("round trip across the corpus") {
  for (const CorpusEntry& e : full_corpus()) {
    INFO(e.name);
    const auto k = corpus_kernel(e.kernel_key);
    const DilationPack pack = pack_for(OperatorTuple(corpus_tuple(e.tuple_name)), k);
    const WTResult wt = build_WT(pack);
    const int band = std::min(pack.N, 2 * std::max(wt.W.degree(), 1));
    const KInnerReport kin = verify_kinner(wt.W, *k, std::max(band, wt.W.degree()));
    CHECK(kin.isometry_residual <= 1e-8);
    CHECK(kin.orthogonality_residual <= 1e-8);
    const ConditionReport rep = check_conditions(wt.quadruple, k, pack.N);
    CHECK(rep.pass());
    const InnerFunctionPoly w = build_W_from_quadruple(wt.quadruple, *k, pack.N);
    double diff = 0.0;
    for (std::size_t i = 0; i < w.coeffs.size(); ++i) diff = std::max(diff, (w.coeffs[i] - wt.W.coeffs[i]).norm());
    CHECK(diff <= 1e-10);
  }
}
