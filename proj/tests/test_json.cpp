#include <doctest.h>

#include "kcontract/corpus.hpp"
#include "kcontract/dilation.hpp"
#include "kcontract/errors.hpp"
#include "kcontract/json_io.hpp"
#include "support/generators.hpp"

using namespace kcontract;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::BadParameter;
}

}  // namespace

TEST_CASE("complex and matrix encodings") {
  CHECK(complex_from_json(json(0.5)) == cplx(0.5, 0.0));
  CHECK(complex_from_json(json::array({1.0, -2.0})) == cplx(1.0, -2.0));
  CHECK(kind_of([] { complex_from_json(json("x")); }) == ErrorKind::SchemaError);
  Rng rng(3);
  const Mat m = gen::matrix(2, 3, rng);
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  CHECK(kind_of([] { matrix_from_json(json::parse("[[1, 2], [3]]")); }) == ErrorKind::SchemaError);
}

TEST_CASE("kernel round trip in exact and float modes") {
  for (const std::string& key : corpus_kernel_keys()) {
    const auto k = corpus_kernel(key, 16);
    const KernelSpec back = kernel_from_json(kernel_to_json(*k));
    CHECK(back.family == k->family);
    CHECK(back.exact() == k->exact());
    CHECK(back.a == k->a);
    CHECK(back.c == k->c);
  }
  const KernelSpec f = power_kernel(std::sqrt(2.0), 10);
  const KernelSpec back = kernel_from_json(kernel_to_json(f));
  CHECK_FALSE(back.exact());
  for (int n = 0; n <= 10; ++n) CHECK(back.a[static_cast<std::size_t>(n)] == doctest::Approx(f.a[static_cast<std::size_t>(n)]).epsilon(1e-15));
}

TEST_CASE("kernel spec parsing") {
  SUBCASE("short decimal exponents are exact") {
    const KernelSpec k = kernel_from_json(json::parse(R"({"family": "power", "nu": 0.5, "max_degree": 8})"));
    REQUIRE(k.exact());
    CHECK(*k.nu_exact == Rational(1, 2));
  }
  SUBCASE("long decimal exponents fall back to floats") {
    const KernelSpec k = kernel_from_json(json::parse(R"({"family": "power", "nu": 1.41421356237, "max_degree": 8})"));
    CHECK_FALSE(k.exact());
  }
  SUBCASE("rational strings") {
    const KernelSpec k = kernel_from_json(json::parse(R"({"family": "power", "nu": "7/3", "max_degree": 4})"));
    CHECK(*k.nu_exact == Rational(7, 3));
  }
  SUBCASE("explicit coefficients") {
    const KernelSpec k = kernel_from_json(json::parse(R"({"a": [1, "1/2", "1/3"], "max_degree": 2})"));
    CHECK((*k.a_exact)[1] == Rational(1, 2));
  }
  SUBCASE("family plus consistent coefficients") {
    const KernelSpec k = kernel_from_json(json::parse(R"({"family": "drury_arveson", "a": [1, 1, 1], "max_degree": 2})"));
    CHECK(k.family == KernelFamily::DruryArveson);
  }
  SUBCASE("rejections") {
    CHECK(kind_of([] { kernel_from_json(json::parse(R"({"family": "drury_arveson", "max_degree": 4, "x": 1})")); }) ==
          ErrorKind::SchemaError);
    CHECK(kind_of([] { kernel_from_json(json::parse(R"({"family": "drury_arveson"})")); }) == ErrorKind::SchemaError);
    CHECK(kind_of([] { kernel_from_json(json::parse(R"({"family": "drury_arveson", "a": [1, 2, 1], "max_degree": 2})")); }) ==
          ErrorKind::SchemaError);
    CHECK(kind_of([] { kernel_from_json(json::parse(R"({"family": "dirichlet", "nu": 2, "max_degree": 2})")); }) ==
          ErrorKind::SchemaError);
    CHECK(kind_of([] { kernel_from_json(json::parse(R"({"a": [1, 1, -1], "max_degree": 2})")); }) ==
          ErrorKind::NonpositiveCoefficient);
  }
}

TEST_CASE("tuple round trip and validation") {
  const OperatorTuple T(corpus_tuple("diag_pair_skew"));
  const OperatorTuple back = tuple_from_json(tuple_to_json(T));
  REQUIRE(back.d() == 2);
  CHECK(back[0] == T[0]);
  CHECK(back[1] == T[1]);
  CHECK(back.comm_tol() == T.comm_tol());
  CHECK(kind_of([] { tuple_from_json(json::parse(R"({"matrices": [[[1]]], "extra": 0})")); }) == ErrorKind::SchemaError);
  CHECK(kind_of([] { tuple_from_json(json::parse(R"({"d": 2, "matrices": [[[1]]]})")); }) == ErrorKind::DimensionMismatch);
  CHECK(kind_of([] { tuple_from_json(json::parse(R"({"matrices": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]})")); }) ==
        ErrorKind::CommutativityViolation);
}

TEST_CASE("space vector round trip") {
  const auto k = corpus_kernel("k2", 16);
  const SpaceSpec space = make_space(k, 2, 3, 2);
  Rng rng(5);
  const Vec f = gen::matrix(space.dim(), 1, rng).col(0);
  const json j = space_vector_to_json(space, f);
  CHECK(j["basis_id"] == space.basis->id());
  CHECK(space_vector_from_json(space, j) == f);
  json wrong = j;
  wrong["basis_id"] = "graded-lex/d=2/N=4";
  CHECK(kind_of([&] { space_vector_from_json(space, wrong); }) == ErrorKind::SchemaError);
}

TEST_CASE("inner function and quadruple round trip") {
  const OperatorTuple T(corpus_tuple("nilpotent_pair_rank1"));
  const DilationPack pack = canonical_dilation(T, corpus_kernel("da", 64), 5, DilationOptions{});
  const WTResult wt = build_WT(pack);
  const InnerFunctionPoly w = inner_function_from_json(inner_function_to_json(wt.W));
  REQUIRE(w.coeffs.size() == wt.W.coeffs.size());
  for (std::size_t i = 0; i < w.coeffs.size(); ++i) CHECK(w.coeffs[i] == wt.W.coeffs[i]);
  CHECK(w.source_dim == wt.W.source_dim);
  CHECK(w.target_dim == wt.W.target_dim);

  const RealizationQuadruple q = quadruple_from_json(quadruple_to_json(wt.quadruple));
  CHECK(q.B == wt.quadruple.B);
  CHECK(q.C == wt.quadruple.C);
  CHECK(q.D == wt.quadruple.D);
  CHECK(q.DeltaT == wt.quadruple.DeltaT);

  json bad = inner_function_to_json(wt.W);
  bad["coeffs"][0]["alpha"] = MultiIndex{9, 9};
  CHECK(kind_of([&] { inner_function_from_json(bad); }) == ErrorKind::DegreeOverflow);
}
