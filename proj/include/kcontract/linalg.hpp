#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace kcontract {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RealVec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cplx>;
using Rng = std::mt19937_64;

/// Largest singular value.
double op_norm(const Mat& a);

/// Operator norm of a Hermitian matrix (max |eigenvalue|); cheaper than an SVD.
double hermitian_norm(const Mat& a);

Mat hermitian_part(const Mat& a);

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending and each
/// eigenvector's first non-negligible coordinate rotated to the positive real axis.
struct HermitianEig {
  RealVec values;
  Mat vectors;
};
HermitianEig hermitian_eig(const Mat& a);

double min_eigenvalue(const Mat& hermitian);

/// Square root of a positive semidefinite matrix; eigenvalues below a rounding floor
/// (64 eps times the largest magnitude) are clamped to zero.
Mat psd_sqrt(const Mat& a);
Mat psd_inv_sqrt(const Mat& a);

/// Rotates each column so that its first entry with modulus above `tol * ||col||` is real positive.
void normalize_phases(Mat& columns, double tol = 1e-8);

/// Orthonormal basis of the column space. Singular values at or below
/// `rel_tol * sigma_max` are dropped. Columns ordered by singular value, phases normalized.
Mat orthonormal_range(const Mat& a, double rel_tol);

/// Sines of the principal angles between two subspaces given by orthonormal columns,
/// sorted descending. Requires q1.cols() <= q2.cols() to be meaningful.
RealVec principal_angle_sines(const Mat& q1, const Mat& q2);

/// Nearest unitary in Frobenius norm (polar factor).
Mat nearest_unitary(const Mat& a);

/// Haar-distributed unitary from a complex Ginibre matrix.
Mat random_unitary(int n, Rng& rng);

/// Uniform point on the unit sphere of C^d.
Vec random_sphere_point(int d, Rng& rng);

/// Uniform point in the open ball of C^d of the given radius.
Vec random_ball_point(int d, double radius, Rng& rng);

double spectral_radius(const Mat& a);

/// Scalar-valued dense copy of a sparse matrix's nonzeros as (row, col, value) triples.
struct Triplet {
  int row;
  int col;
  cplx value;
};
std::vector<Triplet> triplets(const SpMat& m);

}  // namespace kcontract
