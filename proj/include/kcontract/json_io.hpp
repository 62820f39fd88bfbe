#pragma once

// JSON forms of the toolkit's data: kernels, tuples, space vectors, inner functions,
// quadruples and the per-module reports. Readers reject unknown fields.

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "kcontract/contraction.hpp"
#include "kcontract/dilation.hpp"
#include "kcontract/realization.hpp"
#include "kcontract/series.hpp"
#include "kcontract/space.hpp"

namespace kcontract {

using json = nlohmann::json;

/// Throws SchemaError if `j` is not an object or has a key outside `allowed`.
void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where);

json complex_to_json(cplx v);
cplx complex_from_json(const json& j);
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& j);
json real_vector_to_json(const RealVec& v);

/// {name, a: [...], max_degree} plus family / nu when known. Rational coefficients are
/// written as strings ("p/q"), float coefficients as numbers.
json kernel_to_json(const KernelSpec& k);
/// Accepts {name?, a, max_degree} or {family, nu?, max_degree}; c is always recomputed.
KernelSpec kernel_from_json(const json& j);

json tuple_to_json(const OperatorTuple& t);
OperatorTuple tuple_from_json(const json& j);

json space_vector_to_json(const SpaceSpec& space, const Vec& f);
Vec space_vector_from_json(const SpaceSpec& space, const json& j);

json triplets_to_json(const SpMat& m);

json defect_to_json(const DefectResult& r);
json safety_to_json(const SafetyReport& r);

json inner_function_to_json(const InnerFunctionPoly& w);
InnerFunctionPoly inner_function_from_json(const json& j);

json quadruple_to_json(const RealizationQuadruple& q);
RealizationQuadruple quadruple_from_json(const json& j);

/// {isometry_residual, intertwining_residuals, deltaT_eigs, wandering_dim, WT_coeffs, validated_band}
json dilation_report_to_json(const DilationPack& pack, int wandering_dim, const InnerFunctionPoly& wt);

json conditions_to_json(const ConditionReport& r);
json kinner_to_json(const KInnerReport& r);

}  // namespace kcontract
