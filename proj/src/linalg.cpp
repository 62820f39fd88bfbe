#include "kcontract/linalg.hpp"
#include "kcontract/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kcontract {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonpositiveCoefficient: return "NonpositiveCoefficient";
    case ErrorKind::BadNormalization: return "BadNormalization";
    case ErrorKind::BadParameter: return "BadParameter";
    case ErrorKind::HorizonTooShort: return "HorizonTooShort";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::CommutativityViolation: return "CommutativityViolation";
    case ErrorKind::DegreeOverflow: return "DegreeOverflow";
    case ErrorKind::KernelSingularity: return "KernelSingularity";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::SeriesNotConverged: return "SeriesNotConverged";
    case ErrorKind::SpectralUnsafe: return "SpectralUnsafe";
    case ErrorKind::IsometryDegraded: return "IsometryDegraded";
    case ErrorKind::MembershipAmbiguous: return "MembershipAmbiguous";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::NotPure: return "NotPure";
    case ErrorKind::NotMinimal: return "NotMinimal";
    case ErrorKind::IrreconcilableDilations: return "IrreconcilableDilations";
    case ErrorKind::NotRowContraction: return "NotRowContraction";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonpositiveCoefficient:
    case ErrorKind::BadNormalization:
    case ErrorKind::BadParameter:
    case ErrorKind::HorizonTooShort:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::CommutativityViolation:
    case ErrorKind::DegreeOverflow:
    case ErrorKind::KernelSingularity:
    case ErrorKind::SchemaError:
      return 3;
    case ErrorKind::SeriesNotConverged:
    case ErrorKind::SpectralUnsafe:
    case ErrorKind::IsometryDegraded:
    case ErrorKind::MembershipAmbiguous:
      return 4;
    case ErrorKind::NotPositive:
    case ErrorKind::NotPure:
    case ErrorKind::NotMinimal:
    case ErrorKind::IrreconcilableDilations:
    case ErrorKind::NotRowContraction:
      return 2;
  }
  return 2;
}

double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double hermitian_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }

void normalize_phases(Mat& columns, double tol) {
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double nrm = columns.col(j).norm();
    if (nrm == 0.0) continue;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const cplx v = columns(i, j);
      if (std::abs(v) > tol * nrm) {
        columns.col(j) *= std::conj(v) / std::abs(v);
        break;
      }
    }
  }
}

HermitianEig hermitian_eig(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  const Eigen::Index n = a.rows();
  HermitianEig out{RealVec(n), Mat(n, n)};
  // Eigen sorts ascending; flip to descending.
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  normalize_phases(out.vectors);
  return out;
}

double min_eigenvalue(const Mat& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Mat psd_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  const RealVec& ev = es.eigenvalues();
  // eigenvalues within rounding of zero are treated as zero so the root keeps the kernel
  const double floor = ev.size() ? 64.0 * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff() : 0.0;
  RealVec s = ev.unaryExpr([floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
  return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Mat psd_inv_sqrt(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a));
  RealVec s = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

Mat orthonormal_range(const Mat& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return Mat(a.rows(), 0);
  Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU);
  const RealVec& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Mat(a.rows(), 0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > rel_tol * s(0)) ++rank;
  Mat q = svd.matrixU().leftCols(rank);
  normalize_phases(q);
  return q;
}

RealVec principal_angle_sines(const Mat& q1, const Mat& q2) {
  if (q1.cols() == 0) return RealVec(0);
  // Residual of q1 after projecting onto span(q2); its singular values are the sines.
  Mat r = q1 - q2 * (q2.adjoint() * q1);
  Eigen::JacobiSVD<Mat> svd(r);
  RealVec s = svd.singularValues();
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::min(1.0, s(i));
  return s;
}

Mat nearest_unitary(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

Mat random_unitary(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(z);
  Mat q = qr.householderQ() * Mat::Identity(n, n);
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

Vec random_sphere_point(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec z(d);
  for (int i = 0; i < d; ++i) z(i) = cplx(g(rng), g(rng));
  return z / z.norm();
}

Vec random_ball_point(int d, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec z = random_sphere_point(d, rng);
  // radial law r^{2d-1} for the uniform measure on the real 2d-ball
  const double rad = radius * std::pow(u(rng), 1.0 / (2.0 * d));
  return rad * z;
}

double spectral_radius(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Mat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<Triplet> triplets(const SpMat& m) {
  std::vector<Triplet> out;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      out.push_back({static_cast<int>(it.row()), static_cast<int>(it.col()), it.value()});
  std::sort(out.begin(), out.end(), [](const Triplet& x, const Triplet& y) {
    return x.row != y.row ? x.row < y.row : x.col < y.col;
  });
  return out;
}

}  // namespace kcontract
