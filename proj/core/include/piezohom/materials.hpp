#ifndef PIEZOHOM_MATERIALS_HPP
#define PIEZOHOM_MATERIALS_HPP

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace piezohom {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat9 = Eigen::Matrix<double, 9, 9>;

/// Voigt index for the symmetric pair (i, j), both 1-based:
/// 11->1 22->2 33->3 23->4 13->5 12->6. Throws ArgumentError outside 1..3.
int voigt_map(int i, int j);

/// 0-based variant used internally; no range check.
constexpr int voigt_index(int i, int j) {
  constexpr int table[3][3] = {{0, 5, 4}, {5, 1, 3}, {4, 3, 2}};
  return table[i][j];
}

/// Inverse of voigt_index: the 0-based tensor pair (i <= j) of a Voigt slot.
constexpr std::array<int, 2> voigt_pair(int voigt) {
  constexpr int pairs[6][2] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}};
  return {pairs[voigt][0], pairs[voigt][1]};
}

/// Engineering-shear Voigt strain of a displacement gradient (row i = d u_i / dx).
inline Vec6 engineering_strain(const Mat3& du) {
  Vec6 s;
  s << du(0, 0), du(1, 1), du(2, 2), du(1, 2) + du(2, 1), du(0, 2) + du(2, 0), du(0, 1) + du(1, 0);
  return s;
}

/// Full rank-4 stiffness tensor, index (((i*3+j)*3+k)*3+l).
using FullStiffness = std::array<double, 81>;

FullStiffness expand_stiffness(const Mat6& c);
/// Contracts a full tensor back to Voigt form, averaging the minor-symmetric
/// copies. expand_stiffness followed by contract_stiffness is the identity.
Mat6 contract_stiffness(const FullStiffness& full);

/// Constitutive data of one phase or of an effective medium, in Voigt storage.
///
/// The strain Voigt vector carries engineering shears, so sigma = c * s acts
/// without extra factors. The piezoelectric array follows e(k, J) = e_kij
/// with J = voigt(i, j). Solvers use the potential-gradient convention
///   sigma = c grad u + e^T grad phi,   D = e grad u - eps grad phi.
struct MaterialTensorSet {
  Mat6 c = Mat6::Zero();
  Mat36 e = Mat36::Zero();
  Mat3 eps = Mat3::Zero();

  double stiffness(int i, int j, int k, int l) const {
    return c(voigt_index(i, j), voigt_index(k, l));
  }
  double piezo(int k, int i, int j) const { return e(k, voigt_index(i, j)); }
  double permittivity(int i, int j) const { return eps(i, j); }

  bool decoupled() const { return e.isZero(0.0); }
  MaterialTensorSet without_coupling() const {
    MaterialTensorSet out = *this;
    out.e.setZero();
    return out;
  }
};

/// Transversely isotropic piezoelectric constants, symmetry axis 3. SI units.
/// e13 is the coupling of D3 to the in-plane normal strains (e_311 = e_322).
struct TransverselyIsotropicParams {
  double c11 = 0, c12 = 0, c13 = 0, c33 = 0, c44 = 0, c66 = 0;
  double e15 = 0, e13 = 0, e33 = 0;
  double eps11 = 0, eps33 = 0;

  /// Throws ValidationError if a diagonal modulus or permittivity is not positive.
  void validate() const;
};

/// Reference constants for the PZT-5 fiber and the polymer matrix of the 1-3 composite.
TransverselyIsotropicParams pzt5_params();
TransverselyIsotropicParams polymer_params();

MaterialTensorSet from_transversely_isotropic(const TransverselyIsotropicParams& p);

/// Isotropic decoupled material, handy for tests.
MaterialTensorSet isotropic_material(double lambda, double mu, double permittivity);

/// 9x9 matrix mapping (s11, s22, s33, 2s23, 2s31, 2s12, E1, E2, E3) to
/// (sigma11, ..., sigma12, D1, D2, D3): c in the upper-left block, -e^T in
/// the stress rows, +e in the displacement rows, eps in the lower-right.
Mat9 coupled_constitutive_matrix(const MaterialTensorSet& m);

struct TensorPropertyReport {
  double c_symmetry_residual = 0;    ///< max |c_IJ - c_JI| / max |c|
  double e_symmetry_residual = 0;    ///< max |e_kij - e_kji| / max |e| (0 if e == 0)
  double eps_symmetry_residual = 0;  ///< max |eps_ij - eps_ji| / max |eps|
  double min_elastic_form = 0;       ///< sampled min of c_ijkl X_ij X_kl over unit symmetric X
  double min_permittivity_eigenvalue = 0;
  int samples = 0;

  bool symmetric(double tolerance) const {
    return c_symmetry_residual <= tolerance && e_symmetry_residual <= tolerance &&
           eps_symmetry_residual <= tolerance;
  }
  bool positive_definite() const {
    return min_elastic_form > 0.0 && min_permittivity_eigenvalue > 0.0;
  }
};

inline constexpr std::uint64_t kDefaultPropertySeed = 0x5eed1e55ULL;

/// Symmetry residuals and sampled ellipticity. Never throws; failures show up
/// in the report.
TensorPropertyReport check_tensor_properties(const MaterialTensorSet& m,
                                             std::uint64_t seed = kDefaultPropertySeed,
                                             int samples = 256);

/// Throws ValidationError unless the set is symmetric (relative 1e-12) and
/// positive definite in the sampled sense.
void validate_material(const MaterialTensorSet& m);

}  // namespace piezohom

#endif  // PIEZOHOM_MATERIALS_HPP
