#include <doctest.h>

#include <cmath>

#include "kcontract/corpus.hpp"
#include "kcontract/errors.hpp"
#include "kcontract/space.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace kcontract;

namespace {

std::shared_ptr<const KernelSpec> kern(const std::string& key, int horizon = 16) { return corpus_kernel(key, horizon); }

int pos(const SpaceSpec& s, MultiIndex alpha) { return s.basis->position(alpha); }

Vec unit_vec(const SpaceSpec& s, int k) {
  Vec v = Vec::Zero(s.dim());
  v(k) = 1.0;
  return v;
}

// Dense weights from factorials, independent of IndexBasis::gamma.
RealVec oracle_weights(const SpaceSpec& s) {
  RealVec w(s.basis->size());
  for (int k = 0; k < s.basis->size(); ++k) {
    const MultiIndex& alpha = s.basis->index(k);
    w(k) = s.kernel->a[static_cast<std::size_t>(total_degree(alpha))] * static_cast<double>(oracle::multinomial(alpha));
  }
  return w;
}

// Metric adjoint G^{-1} M^* G of a dense matrix for scalar coefficients.
Mat oracle_adjoint(const Mat& m, const RealVec& w_out, const RealVec& w_in) {
  const RealVec g_out = w_out.cwiseInverse(), g_in = w_in.cwiseInverse();
  return g_in.cwiseInverse().cast<cplx>().asDiagonal() * m.adjoint() * g_out.cast<cplx>().asDiagonal();
}

}  // namespace

TEST_CASE("basis is graded with z_1 leading inside a degree") {
  const IndexBasis b(2, 2);
  REQUIRE(b.size() == 6);
  CHECK(b.index(0) == MultiIndex{0, 0});
  CHECK(b.index(1) == MultiIndex{1, 0});
  CHECK(b.index(2) == MultiIndex{0, 1});
  CHECK(b.index(3) == MultiIndex{2, 0});
  CHECK(b.index(4) == MultiIndex{1, 1});
  CHECK(b.index(5) == MultiIndex{0, 2});
  CHECK(b.id() == "graded-lex/d=2/N=2");
  CHECK(b.position({1, 1}) == 4);
  CHECK(b.position({2, 1}) == -1);
}

TEST_CASE("basis size, uniqueness and gamma recurrence") {
  for (int d = 1; d <= 4; ++d) {
    for (int N = 1; N <= 6; ++N) {
      const IndexBasis b(d, N);
      std::uint64_t binom = 1;
      for (int j = 1; j <= d; ++j) binom = binom * static_cast<std::uint64_t>(N + j) / static_cast<std::uint64_t>(j);
      CHECK(static_cast<std::uint64_t>(b.size()) == binom);
      CHECK(basis_count(d, N) == binom);
      for (int k = 0; k < b.size(); ++k) {
        CHECK(b.position(b.index(k)) == k);
        CHECK(static_cast<std::int64_t>(b.gamma(k)) == oracle::multinomial(b.index(k)));
        for (int i = 0; i < d; ++i) {
          const int up = b.shift_up(k, i);
          if (up < 0) continue;
          // gamma_{alpha+e_i} * (alpha_i + 1) = gamma_alpha * (|alpha| + 1)
          CHECK(b.gamma(up) * static_cast<std::uint64_t>(b.index(k)[static_cast<std::size_t>(i)] + 1) ==
                b.gamma(k) * static_cast<std::uint64_t>(b.degree(k) + 1));
        }
      }
    }
  }
}

TEST_CASE("weights follow a_|alpha| gamma_alpha") {
  const SpaceSpec s = make_space(kern("k2"), 3, 4, 2);
  const RealVec w = oracle_weights(s);
  CHECK((s.weight - w).norm() < 1e-12);
  const RealVec g = s.metric();
  for (int k = 0; k < s.basis->size(); ++k)
    for (int e = 0; e < 2; ++e) CHECK(g(s.flat(k, e)) == doctest::Approx(1.0 / w(k)));
}

TEST_CASE("monomials are orthogonal with norm^2 = 1 / (a_n gamma)") {
  const SpaceSpec s = make_space(kern("dirichlet"), 2, 3);
  const Mat I = Mat::Identity(s.dim(), s.dim());
  const Mat gram = weighted_gram(s, I, I);
  const RealVec w = oracle_weights(s);
  for (int i = 0; i < s.dim(); ++i)
    for (int j = 0; j < s.dim(); ++j) CHECK(std::abs(gram(i, j) - (i == j ? 1.0 / w(i) : 0.0)) < 1e-15);
}

TEST_CASE("shift adjoint examples") {
  SUBCASE("d=1 DA") {
    const SpaceSpec s = make_space(kern("da"), 1, 2);
    const ShiftOperators m = shift_matrices(s);
    CHECK(Vec(m.shift[0] * unit_vec(s, 0)).isApprox(unit_vec(s, 1)));
    CHECK(Vec(m.adjoint[0] * unit_vec(s, 1)).isApprox(unit_vec(s, 0)));
  }
  SUBCASE("d=2 DA: M_{z_1}^*(z_1 z_2) = z_2 / 2") {
    const SpaceSpec s = make_space(kern("da"), 2, 2);
    const ShiftOperators m = shift_matrices(s);
    const Vec out = m.adjoint[0] * unit_vec(s, pos(s, {1, 1}));
    CHECK((out - 0.5 * unit_vec(s, pos(s, {0, 1}))).norm() < 1e-15);
  }
  SUBCASE("d=1 K_2: M_z^* z = 1 / 2") {
    const SpaceSpec s = make_space(kern("k2"), 1, 2);
    const ShiftOperators m = shift_matrices(s);
    CHECK((Vec(m.adjoint[0] * unit_vec(s, 1)) - 0.5 * unit_vec(s, 0)).norm() < 1e-15);
  }
  SUBCASE("top degree is annihilated") {
    const SpaceSpec s = make_space(kern("khalf"), 2, 3);
    const ShiftOperators m = shift_matrices(s);
    for (int k = s.basis->degree_begin(3); k < s.basis->degree_end(3); ++k)
      CHECK(Vec(m.shift[1] * unit_vec(s, k)).norm() == 0.0);
  }
}

TEST_CASE("shift adjoints match the dense Gram oracle") {
  for (const char* key : {"da", "k2", "khalf", "dirichlet"}) {
    const SpaceSpec s = make_space(kern(key), 2, 4);
    const ShiftOperators m = shift_matrices(s);
    const RealVec w = oracle_weights(s);
    for (int i = 0; i < 2; ++i) {
      const Mat dense = Mat(m.shift[static_cast<std::size_t>(i)]);
      CHECK((Mat(m.adjoint[static_cast<std::size_t>(i)]) - oracle_adjoint(dense, w, w)).norm() < 1e-13);
    }
  }
}

TEST_CASE("delta and Delta ratio tables") {
  SUBCASE("DA: both identity") {
    const DeltaOps ops = delta_ops(make_space(kern("da"), 2, 3));
    CHECK((ops.delta_by_degree.array() == 1.0).all());
    CHECK((ops.Delta_by_degree.array() == 1.0).all());
  }
  SUBCASE("K_2, N=2") {
    const DeltaOps ops = delta_ops(make_space(kern("k2"), 1, 2));
    REQUIRE(ops.delta_exact.has_value());
    CHECK(*ops.delta_exact == std::vector<Rational>{Rational(1), Rational(2), Rational(3, 2)});
    CHECK(*ops.Delta_exact == std::vector<Rational>{Rational(2), Rational(3, 2), Rational(4, 3)});
  }
  SUBCASE("Dirichlet, N=1") {
    const DeltaOps ops = delta_ops(make_space(kern("dirichlet"), 1, 1));
    CHECK(ops.Delta_exact->at(0) == Rational(1, 2));
    CHECK(ops.Delta_exact->at(1) == Rational(2, 3));
  }
  SUBCASE("horizon too short") {
    auto k = std::make_shared<const KernelSpec>(drury_arveson_kernel(3));
    const SpaceSpec s = make_space(k, 1, 3);
    CHECK_THROWS_AS(delta_ops(s), Error);
    CHECK_THROWS_AS(make_space(k, 1, 4), Error);
  }
}

TEST_CASE("cauchy dual examples") {
  SUBCASE("DA: M_z' = M_z") {
    const SpaceSpec s = make_space(kern("da"), 2, 3);
    const auto dual = cauchy_dual(s);
    const ShiftOperators m = shift_matrices(s);
    for (int i = 0; i < 2; ++i) CHECK((Mat(dual[static_cast<std::size_t>(i)]) - Mat(m.shift[static_cast<std::size_t>(i)])).norm() == 0.0);
  }
  SUBCASE("K_2, d=1: M_z' 1 = 2 z") {
    const SpaceSpec s = make_space(kern("k2"), 1, 2);
    CHECK((Vec(cauchy_dual(s)[0] * unit_vec(s, 0)) - 2.0 * unit_vec(s, 1)).norm() < 1e-15);
  }
}

TEST_CASE("range projection kills constants and fixes the rest") {
  for (const char* key : {"da", "k2", "khalf", "dirichlet"}) {
    const SpaceSpec s = make_space(kern(key), 2, 3, 2);
    const Mat P = Mat(range_projection(s));
    for (int k = 0; k < s.dim(); ++k) {
      const Vec out = P * unit_vec(s, k);
      if (k < s.coeff_dim)
        CHECK(out.norm() < 1e-14);
      else
        CHECK((out - unit_vec(s, k)).norm() < 1e-13);
    }
  }
  const SpaceSpec s = make_space(kern("k2"), 2, 3);
  const Mat P = Mat(range_projection(s));
  const RealVec g = s.metric();
  CHECK((P * P - P).norm() < 1e-12);
  // metric self-adjointness: G P = P^* G
  CHECK((g.cast<cplx>().asDiagonal() * P - P.adjoint() * g.cast<cplx>().asDiagonal()).norm() < 1e-12);
}

TEST_CASE("property: delta M_i = M_i Delta") {
  for (int d = 1; d <= 3; ++d) {
    for (int N : {4, 6}) {
      for (const char* key : {"da", "k2", "khalf", "dirichlet"}) {
        const SpaceSpec s = make_space(kern(key), d, N);
        const ShiftOperators m = shift_matrices(s);
        const DeltaOps ops = delta_ops(s);
        for (int i = 0; i < d; ++i) {
          const SpMat lhs = ops.delta * m.shift[static_cast<std::size_t>(i)];
          const SpMat rhs = m.shift[static_cast<std::size_t>(i)] * ops.Delta;
          const Mat diff = Mat(lhs) - Mat(rhs);
          CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, Mat(lhs).cwiseAbs().maxCoeff()));
        }
      }
    }
  }
}

TEST_CASE("property: M_z M_z^* scales degree n by a_{n-1}/a_n") {
  for (const char* key : {"k2", "khalf", "dirichlet"}) {
    const SpaceSpec s = make_space(kern(key), 2, 5);
    const ShiftOperators m = shift_matrices(s);
    SpMat mm(s.dim(), s.dim());
    for (int i = 0; i < 2; ++i) mm += m.shift[static_cast<std::size_t>(i)] * m.adjoint[static_cast<std::size_t>(i)];
    const Mat dense = Mat(mm);
    for (int k = 0; k < s.dim(); ++k) {
      const int n = s.basis->degree(k);
      const double want = n == 0 ? 0.0 : s.kernel->a[static_cast<std::size_t>(n - 1)] / s.kernel->a[static_cast<std::size_t>(n)];
      CHECK((dense.col(k) - want * unit_vec(s, k)).norm() < 1e-12);
    }
  }
}

TEST_CASE("property: pseudo-inverse lemma on degrees <= N-1") {
  Rng rng(99);
  for (int d = 1; d <= 3; ++d) {
    for (int N : {4, 6}) {
      for (const char* key : {"da", "k2", "khalf", "dirichlet"}) {
        const SpaceSpec s = make_space(kern(key), d, N);
        const ShiftOperators m = shift_matrices(s);
        const DeltaOps ops = delta_ops(s);
        const Mat row = Mat(stack_row(m.shift));
        const Mat col = Mat(stack_column(m.adjoint));
        // orthonormal coordinates: A = G^{1/2} M G_d^{-1/2}
        const RealVec gs = s.metric_sqrt();
        RealVec gs_d(d * s.dim());
        for (int i = 0; i < d; ++i) gs_d.segment(i * s.dim(), s.dim()) = gs;
        const Mat A = gs.cast<cplx>().asDiagonal() * row * gs_d.cwiseInverse().cast<cplx>().asDiagonal();
        const Mat A_pinv = A.completeOrthogonalDecomposition().pseudoInverse();
        Mat f = gen::matrix(s.dim(), 1, rng);
        restrict_band(s, f, N - 1);
        // (M^# M)^+ M^# f = M^+ f in the metric
        const Vec lhs = gs_d.cwiseInverse().cast<cplx>().asDiagonal() * A_pinv * gs.cast<cplx>().asDiagonal() * f;
        const Vec via_delta = col * (ops.delta * f);
        Vec via_Delta = col * f;
        for (int i = 0; i < d; ++i) via_Delta.segment(i * s.dim(), s.dim()) = ops.Delta * via_Delta.segment(i * s.dim(), s.dim());
        const double scale = std::max(1.0, lhs.norm());
        CHECK((lhs - via_delta).norm() <= 1e-10 * scale);
        CHECK((lhs - via_Delta).norm() <= 1e-10 * scale);
      }
    }
  }
}

TEST_CASE("property: adjoint consistency <M_i f, g> = <f, M_i^* g>") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const auto k = gen::kernel(rng, 16);
    const int d = 1 + static_cast<int>(rng() % 3);
    const int m = 1 + static_cast<int>(rng() % 2);
    const SpaceSpec s = make_space(k, d, 4, m);
    const ShiftOperators ops = shift_matrices(s);
    const Vec f = gen::matrix(s.dim(), 1, rng), g = gen::matrix(s.dim(), 1, rng);
    for (int i = 0; i < d; ++i) {
      const cplx lhs = inner(s, ops.shift[static_cast<std::size_t>(i)] * f, g);
      const cplx rhs = inner(s, f, ops.adjoint[static_cast<std::size_t>(i)] * g);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("wandering subspace of the full space is the constants") {
  const SpaceSpec s = make_space(kern("khalf"), 2, 4, 2);
  const Mat P = Mat(range_projection(s));
  const Mat comp = Mat::Identity(s.dim(), s.dim()) - P;
  const Mat basis = orthonormal_range(comp, 1e-10);
  CHECK(basis.cols() == s.coeff_dim);
  CHECK(basis.bottomRows(s.dim() - s.coeff_dim).norm() < 1e-12);
}

TEST_CASE("adjoint range projection is exact on the band below N") {
  Rng rng(5);
  const SpaceSpec s = make_space(kern("k2"), 2, 5);
  const ShiftOperators m = shift_matrices(s);
  const SpMat Q = adjoint_range_projection(s);
  Mat g = gen::matrix(s.dim(), 1, rng);
  const Vec x = Mat(stack_column(m.adjoint)) * g;  // in Im M^#, degree <= N-1
  CHECK((Vec(Q * x) - x).norm() < 1e-12 * x.norm());
}

TEST_CASE("evaluation is the polynomial value") {
  const SpaceSpec s = make_space(kern("da"), 2, 2);
  Vec f = Vec::Zero(s.dim());
  f(pos(s, {0, 0})) = 1.0;
  f(pos(s, {1, 1})) = 2.0;
  Vec z(2);
  z << cplx(0.3, 0.1), cplx(-0.2, 0.0);
  CHECK(std::abs(evaluate(s, f, z)(0) - (1.0 + 2.0 * z(0) * z(1))) < 1e-15);
}
