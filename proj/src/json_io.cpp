#include "kcontract/json_io.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kcontract {

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::SchemaError, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) schema(where, std::string("missing field '") + key + "'");
  return *it;
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) schema(where, "expected an integer");
  return j.get<int>();
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  return j.get<double>();
}

// Power kernel from a JSON exponent. Short decimals are exact rationals; long ones would
// make the exact recurrence expensive and fall back to float arithmetic.
KernelSpec power_from_json(const json& nu, int N, const std::string& where) {
  if (nu.is_string()) return power_kernel(parse_rational(nu.get<std::string>()), N);
  if (nu.is_number_integer()) return power_kernel(Rational(nu.get<long long>()), N);
  if (!nu.is_number_float()) schema(where, "nu must be a number or rational string");
  const std::string text = nu.dump();
  const auto dot = text.find('.');
  const bool short_decimal =
      text.find_first_of("eE") == std::string::npos && dot != std::string::npos && text.size() - dot - 1 <= 6;
  return short_decimal ? power_kernel(parse_rational(text), N) : power_kernel(nu.get<double>(), N);
}

KernelSpec family_kernel(const json& j, const std::string& family, int N, const std::string& where) {
  if (family == "power") return power_from_json(field(j, "nu", where), N, where);
  if (j.contains("nu")) schema(where, "nu only applies to the power family");
  return builtin_kernel(family, N);
}

}  // namespace

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) schema(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!known) schema(where, "unknown field '" + it.key() + "'");
  }
}

json complex_to_json(cplx v) { return json::array({v.real(), v.imag()}); }

cplx complex_from_json(const json& j) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  schema("complex", "expected a number or [re, im]");
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j) {
  if (!j.is_array()) schema("matrix", "expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) schema("matrix", "expected an array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) schema("matrix", "ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

json real_vector_to_json(const RealVec& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

json kernel_to_json(const KernelSpec& k) {
  json out;
  out["name"] = k.name;
  out["family"] = std::string(to_string(k.family));
  if (k.family == KernelFamily::Power) {
    if (k.nu_exact)
      out["nu"] = rational_to_string(*k.nu_exact);
    else
      out["nu"] = k.nu;
  }
  json a = json::array();
  for (int n = 0; n <= k.max_degree; ++n) {
    if (k.a_exact)
      a.push_back(rational_to_string((*k.a_exact)[static_cast<std::size_t>(n)]));
    else
      a.push_back(k.a[static_cast<std::size_t>(n)]);
  }
  out["a"] = std::move(a);
  out["max_degree"] = k.max_degree;
  return out;
}

KernelSpec kernel_from_json(const json& j) {
  const std::string where = "kernel";
  require_keys(j, {"name", "a", "max_degree", "family", "nu"}, where);
  const int N = as_int(field(j, "max_degree", where), where + ".max_degree");
  std::string family = "explicit";
  if (j.contains("family")) {
    if (!j["family"].is_string()) schema(where, "family must be a string");
    family = j["family"].get<std::string>();
  }

  KernelSpec spec;
  if (j.contains("a")) {
    const json& a = j["a"];
    if (!a.is_array()) schema(where, "a must be an array");
    bool floats = false;
    for (const json& v : a) {
      if (v.is_number_float()) floats = true;
      else if (!v.is_string() && !v.is_number_integer()) schema(where, "coefficients must be numbers or rational strings");
    }
    if (floats) {
      std::vector<double> av;
      for (const json& v : a) av.push_back(v.is_string() ? static_cast<double>(parse_rational(v.get<std::string>())) : v.get<double>());
      spec = build_kernel(av, N);
    } else {
      std::vector<Rational> av;
      for (const json& v : a) av.push_back(v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<long long>()));
      spec = build_kernel(av, N);
    }
    // a builtin family written out with its coefficients is rebuilt from the family and the
    // list is accepted only if it agrees
    if (family != "explicit") {
      const KernelSpec ref = family_kernel(j, family, N, where);
      for (int n = 0; n <= N; ++n)
        if (std::abs(ref.a[static_cast<std::size_t>(n)] - spec.a[static_cast<std::size_t>(n)]) >
            1e-14 * ref.a[static_cast<std::size_t>(n)])
          schema(where, "coefficients disagree with the declared family");
      spec = ref;
    }
  } else {
    if (family == "explicit") schema(where, "explicit kernel needs coefficients 'a'");
    spec = family_kernel(j, family, N, where);
  }
  if (j.contains("name")) {
    if (!j["name"].is_string()) schema(where, "name must be a string");
    spec.name = j["name"].get<std::string>();
  }
  return spec;
}

json tuple_to_json(const OperatorTuple& t) {
  json ms = json::array();
  for (const Mat& m : t.matrices()) ms.push_back(matrix_to_json(m));
  return json{{"d", t.d()}, {"p", t.p()}, {"matrices", std::move(ms)}, {"comm_tol", t.comm_tol()}};
}

OperatorTuple tuple_from_json(const json& j) {
  const std::string where = "tuple";
  require_keys(j, {"d", "p", "matrices", "comm_tol"}, where);
  const json& ms = field(j, "matrices", where);
  if (!ms.is_array() || ms.empty()) schema(where, "matrices must be a non-empty array");
  std::vector<Mat> T;
  for (const json& m : ms) T.push_back(matrix_from_json(m));
  if (j.contains("d") && as_int(j["d"], where + ".d") != static_cast<int>(T.size()))
    throw Error(ErrorKind::DimensionMismatch, "tuple.d does not match the number of matrices");
  if (j.contains("p"))
    for (const Mat& m : T)
      if (m.rows() != as_int(j["p"], where + ".p"))
        throw Error(ErrorKind::DimensionMismatch, "tuple.p does not match the matrix size");
  const double tol = j.contains("comm_tol") ? as_double(j["comm_tol"], where + ".comm_tol") : 1e-10;
  return OperatorTuple(std::move(T), tol);
}

json space_vector_to_json(const SpaceSpec& space, const Vec& f) {
  if (f.size() != space.dim()) throw Error(ErrorKind::DimensionMismatch, "vector length does not match the space");
  json coeffs = json::array();
  for (int k = 0; k < space.basis->size(); ++k) {
    json block = json::array();
    for (int e = 0; e < space.coeff_dim; ++e) block.push_back(complex_to_json(f(space.flat(k, e))));
    coeffs.push_back(std::move(block));
  }
  return json{{"basis_id", space.basis->id()}, {"coeffs", std::move(coeffs)}};
}

Vec space_vector_from_json(const SpaceSpec& space, const json& j) {
  const std::string where = "space_vector";
  require_keys(j, {"basis_id", "coeffs"}, where);
  if (field(j, "basis_id", where) != space.basis->id()) schema(where, "basis_id does not match the space");
  const json& coeffs = field(j, "coeffs", where);
  if (!coeffs.is_array() || static_cast<int>(coeffs.size()) != space.basis->size())
    schema(where, "one coefficient block per multi-index expected");
  Vec f(space.dim());
  for (int k = 0; k < space.basis->size(); ++k) {
    const json& block = coeffs[static_cast<std::size_t>(k)];
    if (!block.is_array() || static_cast<int>(block.size()) != space.coeff_dim) schema(where, "coefficient block size");
    for (int e = 0; e < space.coeff_dim; ++e) f(space.flat(k, e)) = complex_from_json(block[static_cast<std::size_t>(e)]);
  }
  return f;
}

json triplets_to_json(const SpMat& m) {
  json out = json::array();
  for (const Triplet& t : triplets(m)) out.push_back(json::array({t.row, t.col, complex_to_json(t.value)}));
  return out;
}

json safety_to_json(const SafetyReport& r) {
  return json{{"max_rho", r.max_rho},   {"sigma_radius", r.sigma_radius}, {"r_estimate", r.r_estimate},
              {"margin", r.margin},     {"samples", r.samples},           {"seed", r.seed},
              {"ok", r.ok},             {"required", r.required}};
}

json defect_to_json(const DefectResult& r) {
  return json{{"defect_op", matrix_to_json(r.defect_op)},
              {"series_terms_used", r.series_terms_used},
              {"tail_estimate", r.tail_estimate},
              {"min_eig", r.min_eig},
              {"pos_tol", r.pos_tol},
              {"rank_tol", r.rank_tol},
              {"is_contraction", r.is_contraction},
              {"C", matrix_to_json(r.C)},
              {"defect_dim", r.defect_dim},
              {"eigenvalues", real_vector_to_json(r.eigenvalues)},
              {"spectral_safety", safety_to_json(r.safety)}};
}

json inner_function_to_json(const InnerFunctionPoly& w) {
  json coeffs = json::array();
  for (int k = 0; k < w.basis->size(); ++k)
    coeffs.push_back(json{{"alpha", w.basis->index(k)}, {"matrix", matrix_to_json(w.coeffs[static_cast<std::size_t>(k)])}});
  return json{{"basis_id", w.basis->id()}, {"d", w.basis->d()},           {"N", w.basis->N()},
              {"source_dim", w.source_dim}, {"target_dim", w.target_dim}, {"coeffs", std::move(coeffs)}};
}

InnerFunctionPoly inner_function_from_json(const json& j) {
  const std::string where = "inner_function";
  require_keys(j, {"basis_id", "d", "N", "source_dim", "target_dim", "coeffs"}, where);
  auto basis = std::make_shared<IndexBasis>(as_int(field(j, "d", where), where + ".d"),
                                            as_int(field(j, "N", where), where + ".N"));
  if (j.contains("basis_id") && j["basis_id"] != basis->id()) schema(where, "basis_id does not match d and N");
  InnerFunctionPoly w;
  w.basis = basis;
  w.source_dim = as_int(field(j, "source_dim", where), where + ".source_dim");
  w.target_dim = as_int(field(j, "target_dim", where), where + ".target_dim");
  w.coeffs.assign(static_cast<std::size_t>(basis->size()), Mat::Zero(w.target_dim, w.source_dim));
  const json& coeffs = field(j, "coeffs", where);
  if (!coeffs.is_array()) schema(where, "coeffs must be an array");
  for (const json& c : coeffs) {
    require_keys(c, {"alpha", "matrix"}, where + ".coeffs");
    const MultiIndex alpha = field(c, "alpha", where).get<MultiIndex>();
    const int k = basis->position(alpha);
    if (k < 0) throw Error(ErrorKind::DegreeOverflow, "coefficient multi-index outside the basis");
    Mat m = matrix_from_json(field(c, "matrix", where));
    if (m.size() == 0) m = Mat::Zero(w.target_dim, w.source_dim);
    if (m.rows() != w.target_dim || m.cols() != w.source_dim)
      throw Error(ErrorKind::DimensionMismatch, "coefficient matrix shape");
    w.coeffs[static_cast<std::size_t>(k)] = m;
  }
  return w;
}

json quadruple_to_json(const RealizationQuadruple& q) {
  return json{{"T", tuple_to_json(q.T)},
              {"B", matrix_to_json(q.B)},
              {"C", matrix_to_json(q.C)},
              {"D", matrix_to_json(q.D)},
              {"DeltaT", matrix_to_json(q.DeltaT)}};
}

RealizationQuadruple quadruple_from_json(const json& j) {
  const std::string where = "quadruple";
  require_keys(j, {"T", "B", "C", "D", "DeltaT"}, where);
  RealizationQuadruple q(tuple_from_json(field(j, "T", where)));
  q.B = matrix_from_json(field(j, "B", where));
  q.C = matrix_from_json(field(j, "C", where));
  q.D = matrix_from_json(field(j, "D", where));
  q.DeltaT = matrix_from_json(field(j, "DeltaT", where));
  return q;
}

json dilation_report_to_json(const DilationPack& pack, int wandering_dim, const InnerFunctionPoly& wt) {
  return json{{"isometry_residual", pack.isometry_residual},
              {"intertwining_residuals", pack.intertwining_residuals},
              {"deltaT_eigs", real_vector_to_json(pack.DeltaT_eigs)},
              {"wandering_dim", wandering_dim},
              {"WT_coeffs", inner_function_to_json(wt)},
              {"validated_band", json::array({pack.band_lo, pack.band_hi})}};
}

json conditions_to_json(const ConditionReport& r) {
  return json{{"K1", {{"residual", r.k1}, {"tolerance", r.tol}, {"pass", r.k1_pass}}},
              {"K2", {{"residual", r.k2}, {"tolerance", r.tol}, {"pass", r.k2_pass}}},
              {"K3", {{"residual", r.k3}, {"tolerance", r.tol}, {"pass", r.k3_pass}}},
              {"K4", {{"residual", r.k4}, {"tolerance", r.mem_tol}, {"pass", r.k4_pass}}},
              {"deltaT_mismatch", r.deltaT_mismatch},
              {"validated_band", json::array({0, r.band_hi})}};
}

json kinner_to_json(const KInnerReport& r) {
  return json{{"isometry_residual", r.isometry_residual},
              {"orthogonality_residual", r.orthogonality_residual},
              {"tolerance", r.tol},
              {"degree", r.degree},
              {"shift_band", json::array({r.band_lo, r.band_hi})},
              {"verdict", r.verdict}};
}

}  // namespace kcontract
