#include "piezohom/materials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "piezohom/errors.hpp"

namespace piezohom {

int voigt_map(int i, int j) {
  if (i < 1 || i > 3 || j < 1 || j > 3) {
    throw ArgumentError("voigt_map: axis indices must lie in 1..3, got (" + std::to_string(i) +
                        "," + std::to_string(j) + ")");
  }
  return voigt_index(i - 1, j - 1) + 1;
}

namespace {
constexpr int full_index(int i, int j, int k, int l) { return ((i * 3 + j) * 3 + k) * 3 + l; }

double max_abs(const auto& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

FullStiffness expand_stiffness(const Mat6& c) {
  FullStiffness full{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          full[full_index(i, j, k, l)] = c(voigt_index(i, j), voigt_index(k, l));
  return full;
}

Mat6 contract_stiffness(const FullStiffness& full) {
  Mat6 c = Mat6::Zero();
  Mat6 count = Mat6::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          const int a = voigt_index(i, j);
          const int b = voigt_index(k, l);
          c(a, b) += full[full_index(i, j, k, l)];
          count(a, b) += 1.0;
        }
  return c.cwiseQuotient(count);
}

void TransverselyIsotropicParams::validate() const {
  const std::pair<const char*, double> diagonal[] = {{"c11", c11}, {"c33", c33},
                                                     {"c44", c44}, {"c66", c66},
                                                     {"eps11", eps11}, {"eps33", eps33}};
  for (const auto& [name, value] : diagonal) {
    if (!(value > 0.0)) {
      throw ValidationError(std::string("transversely isotropic parameter ") + name +
                            " must be positive, got " + std::to_string(value));
    }
  }
}

TransverselyIsotropicParams pzt5_params() {
  TransverselyIsotropicParams p;
  p.c11 = 12.1e10;
  p.c12 = 7.54e10;
  p.c13 = 7.52e10;
  p.c33 = 11.1e10;
  p.c44 = 2.11e10;
  p.c66 = 2.28e10;
  p.e15 = 12.3;
  p.e13 = -5.4;
  p.e33 = 15.8;
  p.eps11 = 8.11e-9;
  p.eps33 = 7.35e-9;
  return p;
}

TransverselyIsotropicParams polymer_params() {
  TransverselyIsotropicParams p;
  p.c11 = 0.386e10;
  p.c12 = 0.257e10;
  p.c13 = 0.257e10;
  p.c33 = 0.386e10;
  p.c44 = 0.064e10;
  p.c66 = 0.064e10;
  p.eps11 = 0.07965e-9;
  p.eps33 = 0.07965e-9;
  return p;
}

MaterialTensorSet from_transversely_isotropic(const TransverselyIsotropicParams& p) {
  p.validate();
  MaterialTensorSet m;
  m.c(0, 0) = p.c11;
  m.c(1, 1) = p.c11;
  m.c(2, 2) = p.c33;
  m.c(0, 1) = m.c(1, 0) = p.c12;
  m.c(0, 2) = m.c(2, 0) = p.c13;
  m.c(1, 2) = m.c(2, 1) = p.c13;
  m.c(3, 3) = p.c44;
  m.c(4, 4) = p.c44;
  m.c(5, 5) = p.c66;

  m.e(0, 4) = p.e15;  // D1 <- 2 s13
  m.e(1, 3) = p.e15;  // D2 <- 2 s23
  m.e(2, 0) = p.e13;
  m.e(2, 1) = p.e13;
  m.e(2, 2) = p.e33;

  m.eps(0, 0) = p.eps11;
  m.eps(1, 1) = p.eps11;
  m.eps(2, 2) = p.eps33;
  return m;
}

MaterialTensorSet isotropic_material(double lambda, double mu, double permittivity) {
  MaterialTensorSet m;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) m.c(a, b) = lambda;
    m.c(a, a) = lambda + 2.0 * mu;
    m.c(a + 3, a + 3) = mu;
  }
  m.eps = Mat3::Identity() * permittivity;
  return m;
}

Mat9 coupled_constitutive_matrix(const MaterialTensorSet& m) {
  Mat9 k = Mat9::Zero();
  k.topLeftCorner<6, 6>() = m.c;
  k.topRightCorner<6, 3>() = -m.e.transpose();
  k.bottomLeftCorner<3, 6>() = m.e;
  k.bottomRightCorner<3, 3>() = m.eps;
  return k;
}

TensorPropertyReport check_tensor_properties(const MaterialTensorSet& m, std::uint64_t seed,
                                             int samples) {
  TensorPropertyReport report;
  report.samples = samples;

  const double c_scale = max_abs(m.c);
  report.c_symmetry_residual =
      c_scale > 0 ? max_abs(Mat6(m.c - m.c.transpose())) / c_scale : 0.0;

  const double eps_scale = max_abs(m.eps);
  report.eps_symmetry_residual =
      eps_scale > 0 ? max_abs(Mat3(m.eps - m.eps.transpose())) / eps_scale : 0.0;

  // Voigt storage makes e_kij = e_kji structural; the residual is measured on
  // the expanded tensor so a corrupted expansion would still be caught.
  double e_scale = max_abs(m.e);
  double e_res = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) e_res = std::max(e_res, std::abs(m.piezo(k, i, j) - m.piezo(k, j, i)));
  report.e_symmetry_residual = e_scale > 0 ? e_res / e_scale : 0.0;

  const FullStiffness full = expand_stiffness(m.c);
  auto quadratic_form = [&](const Mat3& x) {
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) q += full[full_index(i, j, k, l)] * x(i, j) * x(k, l);
    return q;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double min_form = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Mat3 x;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) x(i, j) = normal(rng);
    x = (0.5 * (x + x.transpose())).eval();
    const double norm = x.norm();
    if (norm == 0.0) continue;
    min_form = std::min(min_form, quadratic_form(x / norm));
  }
  report.min_elastic_form = min_form;

  const Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (m.eps + m.eps.transpose()),
                                                Eigen::EigenvaluesOnly);
  report.min_permittivity_eigenvalue = eig.eigenvalues().minCoeff();
  return report;
}

void validate_material(const MaterialTensorSet& m) {
  if (!m.c.allFinite() || !m.e.allFinite() || !m.eps.allFinite()) {
    throw ValidationError("material tensors contain non-finite entries");
  }
  const TensorPropertyReport r = check_tensor_properties(m);
  if (!r.symmetric(1e-12)) {
    throw ValidationError("material tensors are not symmetric (c residual " +
                          std::to_string(r.c_symmetry_residual) + ", eps residual " +
                          std::to_string(r.eps_symmetry_residual) + ")");
  }
  if (!r.positive_definite()) {
    throw ValidationError("material tensors are not positive definite (elastic form min " +
                          std::to_string(r.min_elastic_form) + ", eps eigenvalue min " +
                          std::to_string(r.min_permittivity_eigenvalue) + ")");
  }
}

}  // namespace piezohom
