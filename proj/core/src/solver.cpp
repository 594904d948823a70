#include <cmath>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/CholmodSupport>
#include <Eigen/SparseCholesky>

#include "piezohom/errors.hpp"
#include "piezohom/fem.hpp"

namespace piezohom {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using SupernodalCholesky = Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower>;
using SimplicialCholesky = Eigen::CholmodSimplicialLLT<SparseMatrix, Eigen::Lower>;

void silence(cholmod_common& common) {
  common.print = 0;
  common.error_handler = nullptr;
}

// Some OpenBLAS builds dispatch to kernels that return wrong dense Cholesky
// factors on certain virtual CPUs. The supernodal path is only used when a
// dense-block factorization reproduces a known SPD matrix.
bool check_supernodal_factorization() {
  constexpr int n = 160;
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) entries.emplace_back(i, j, (i == j ? 2.0 * n : 0.0) + 1.0 / (1 + i + j));
  SparseMatrix a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());
  SupernodalCholesky chol;
  silence(chol.cholmod());
  chol.compute(a);
  if (chol.info() != Eigen::Success) return false;
  const Vector b = Vector::LinSpaced(n, 1.0, 2.0);
  const Vector x = chol.solve(b);
  return (a * x - b).norm() <= 1e-12 * b.norm();
}

bool supernodal_available() {
  static const bool ok = check_supernodal_factorization();
  return ok;
}

void warn_simplicial_fallback() {
  static bool warned = false;
  if (warned) return;
  warned = true;
  std::cerr << "piezohom: dense LAPACK Cholesky failed its self-test; using the slower "
               "simplicial factorization (for OpenBLAS, setting OPENBLAS_CORETYPE=Haswell "
               "usually fixes this)\n";
}

// Sparse Cholesky backed by CHOLMOD.
class SpdFactor {
 public:
  explicit SpdFactor(const SparseMatrix& a) {
    if (supernodal_available()) {
      supernodal_ = std::make_unique<SupernodalCholesky>();
      silence(supernodal_->cholmod());
      supernodal_->compute(a);
      ok_ = supernodal_->info() == Eigen::Success;
    } else {
      warn_simplicial_fallback();
      simplicial_ = std::make_unique<SimplicialCholesky>();
      silence(simplicial_->cholmod());
      simplicial_->compute(a);
      ok_ = simplicial_->info() == Eigen::Success;
    }
  }
  bool ok() const { return ok_; }
  Matrix solve(const Matrix& b) const {
    return supernodal_ ? Matrix(supernodal_->solve(b)) : Matrix(simplicial_->solve(b));
  }

 private:
  std::unique_ptr<SupernodalCholesky> supernodal_;
  std::unique_ptr<SimplicialCholesky> simplicial_;
  bool ok_ = false;
};

// Solves the equilibrated system; implementations share the refinement loop.
class EquilibratedSolver {
 public:
  virtual ~EquilibratedSolver() = default;
  virtual Matrix apply(const Matrix& b) = 0;
  int iterations = 0;
};

class LdltSolver final : public EquilibratedSolver {
 public:
  explicit LdltSolver(const SparseMatrix& k) {
    ldlt_.compute(k);
    if (ldlt_.info() != Eigen::Success) {
      throw SolverError("LDL^T factorization failed (zero pivot)", INFINITY);
    }
  }
  Matrix apply(const Matrix& b) override { return ldlt_.solve(b); }

 private:
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// K = [[A, B], [B^T, -C]] after permuting displacement equations first.
class SchurSolver final : public EquilibratedSolver {
 public:
  SchurSolver(const SparseMatrix& k, std::span<const std::uint8_t> potential, int max_iterations)
      : max_iterations_(max_iterations) {
    const int n = static_cast<int>(k.rows());
    slot_.resize(n);
    for (int i = 0; i < n; ++i) {
      if (potential[i]) {
        slot_[i] = static_cast<int>(p_index_.size());
        p_index_.push_back(i);
      } else {
        slot_[i] = static_cast<int>(u_index_.size());
        u_index_.push_back(i);
      }
    }
    split(k, potential);
    if (!u_index_.empty()) {
      a_solver_ = std::make_unique<SpdFactor>(a_);
      if (!a_solver_->ok()) {
        throw SolverError("Cholesky factorization of the displacement block failed", INFINITY);
      }
    }
    if (!p_index_.empty()) {
      c_solver_ = std::make_unique<SpdFactor>(c_);
      if (!c_solver_->ok()) {
        throw SolverError("Cholesky factorization of the dielectric block failed", INFINITY);
      }
    }
  }

  Matrix apply(const Matrix& b) override {
    const Eigen::Index cols = b.cols();
    Matrix bu(u_index_.size(), cols);
    Matrix bp(p_index_.size(), cols);
    for (std::size_t i = 0; i < u_index_.size(); ++i) bu.row(i) = b.row(u_index_[i]);
    for (std::size_t i = 0; i < p_index_.size(); ++i) bp.row(i) = b.row(p_index_[i]);

    Matrix xu, xp;
    if (p_index_.empty()) {
      xu = a_solver_->solve(bu);
    } else if (u_index_.empty()) {
      xp = -c_solver_->solve(bp);
    } else {
      const Matrix ainv_bu = a_solver_->solve(bu);
      const Matrix rhs = b_.transpose() * ainv_bu - bp;
      xp = schur_cg(rhs);
      xu = a_solver_->solve(bu - b_ * xp);
    }

    Matrix x(b.rows(), cols);
    for (std::size_t i = 0; i < u_index_.size(); ++i) x.row(u_index_[i]) = xu.row(i);
    for (std::size_t i = 0; i < p_index_.size(); ++i) x.row(p_index_[i]) = xp.row(i);
    return x;
  }

 private:
  void split(const SparseMatrix& k, std::span<const std::uint8_t> potential) {
    const int nu = static_cast<int>(u_index_.size());
    const int np = static_cast<int>(p_index_.size());
    Eigen::VectorXi a_count = Eigen::VectorXi::Zero(nu);
    Eigen::VectorXi b_count = Eigen::VectorXi::Zero(np);
    Eigen::VectorXi c_count = Eigen::VectorXi::Zero(np);
    for (int col = 0; col < k.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
        const bool row_p = potential[it.row()];
        if (!potential[col]) {
          if (!row_p) ++a_count[slot_[col]];
        } else if (row_p) {
          ++c_count[slot_[col]];
        } else {
          ++b_count[slot_[col]];
        }
      }
    }
    a_.resize(nu, nu);
    b_.resize(nu, np);
    c_.resize(np, np);
    a_.reserve(a_count);
    b_.reserve(b_count);
    c_.reserve(c_count);
    for (int col = 0; col < k.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
        const int r = slot_[it.row()];
        const int c = slot_[col];
        const bool row_p = potential[it.row()];
        if (!potential[col]) {
          if (!row_p) a_.insert(r, c) = it.value();
        } else if (row_p) {
          c_.insert(r, c) = -it.value();
        } else {
          b_.insert(r, c) = it.value();
        }
      }
    }
    a_.makeCompressed();
    b_.makeCompressed();
    c_.makeCompressed();
  }

  Matrix schur_apply(const Matrix& v) const {
    Matrix bv = b_ * v;
    return c_ * v + b_.transpose() * a_solver_->solve(bv);
  }

  // Lock-step preconditioned CG, one independent recurrence per column; the
  // displacement solves of all active columns are batched.
  Matrix schur_cg(const Matrix& rhs) {
    const Eigen::Index n = rhs.rows();
    const Eigen::Index cols = rhs.cols();
    Matrix x = Matrix::Zero(n, cols);
    Matrix r = rhs;
    Matrix z = c_solver_->solve(r);
    Matrix p = z;
    Vector rz(cols), rhs_norm(cols);
    std::vector<bool> active(cols, true);
    for (Eigen::Index j = 0; j < cols; ++j) {
      rz[j] = r.col(j).dot(z.col(j));
      rhs_norm[j] = rhs.col(j).norm();
      if (rhs_norm[j] == 0.0) active[j] = false;
    }
    constexpr double kInnerTolerance = 1e-14;
    for (int it = 0; it < max_iterations_; ++it) {
      bool any = false;
      for (Eigen::Index j = 0; j < cols; ++j) any = any || active[j];
      if (!any) break;
      ++iterations;
      const Matrix q = schur_apply(p);
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!active[j]) continue;
        const double pq = p.col(j).dot(q.col(j));
        if (!(pq > 0.0)) {
          active[j] = false;
          continue;
        }
        const double alpha = rz[j] / pq;
        x.col(j) += alpha * p.col(j);
        r.col(j) -= alpha * q.col(j);
        if (r.col(j).norm() <= kInnerTolerance * rhs_norm[j]) active[j] = false;
      }
      z = c_solver_->solve(r);
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!active[j]) continue;
        const double rz_new = r.col(j).dot(z.col(j));
        p.col(j) = z.col(j) + (rz_new / rz[j]) * p.col(j);
        rz[j] = rz_new;
      }
    }
    return x;
  }

  int max_iterations_;
  std::vector<int> slot_, u_index_, p_index_;
  SparseMatrix a_, b_, c_;
  std::unique_ptr<SpdFactor> a_solver_;
  std::unique_ptr<SpdFactor> c_solver_;
};

double max_relative_residual(const SparseMatrix& k, const Matrix& x, const Matrix& b) {
  const Matrix r = b - k * x;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double bn = b.col(j).norm();
    const double rn = r.col(j).norm();
    worst = std::max(worst, bn > 0.0 ? rn / bn : rn);
  }
  return worst;
}

}  // namespace

bool supernodal_factorization_reliable() { return supernodal_available(); }

Eigen::MatrixXd solve_equations(const SparseMatrix& k, const Eigen::MatrixXd& b,
                                std::span<const std::uint8_t> potential,
                                const SolverOptions& options, SolveReport* report) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n || b.rows() != n || static_cast<Eigen::Index>(potential.size()) != n) {
    throw ArgumentError("solve_equations: inconsistent system dimensions");
  }
  SolveReport local;
  local.equations = static_cast<int>(n);
  if (n == 0) {
    if (report) *report = local;
    return Matrix::Zero(0, b.cols());
  }

  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = std::abs(k.coeff(i, i));
    if (!(d > 0.0)) {
      throw SolverError("zero diagonal entry in equation " + std::to_string(i), INFINITY);
    }
    scale[i] = 1.0 / std::sqrt(d);
  }
  const SparseMatrix ks = scale.asDiagonal() * k * scale.asDiagonal();
  const Matrix bs = scale.asDiagonal() * b;

  SolverKind kind = options.kind;
  if (kind == SolverKind::kAuto) {
    kind = n <= options.direct_max_equations ? SolverKind::kDirectLdlt : SolverKind::kSchurComplement;
  }
  local.used = kind;

  std::unique_ptr<EquilibratedSolver> solver;
  if (kind == SolverKind::kDirectLdlt) {
    solver = std::make_unique<LdltSolver>(ks);
  } else {
    solver = std::make_unique<SchurSolver>(ks, potential, options.max_iterations);
  }

  Matrix xs = solver->apply(bs);
  double residual = max_relative_residual(ks, xs, bs);
  for (int step = 0; step < options.refinement_steps && residual > 0.01 * options.tolerance; ++step) {
    xs += solver->apply(bs - ks * xs);
    residual = max_relative_residual(ks, xs, bs);
  }
  local.relative_residual = residual;
  local.iterations = solver->iterations;
  if (report) *report = local;
  if (!(residual <= options.tolerance) || !xs.allFinite()) {
    throw SolverError("linear solve did not reach tolerance: relative residual " +
                          std::to_string(residual) + " > " + std::to_string(options.tolerance) +
                          " after " + std::to_string(local.iterations) + " iterations",
                      residual);
  }
  return scale.asDiagonal() * xs;
}

}  // namespace piezohom
