#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "epnozzle/coefficients.hpp"
#include "epnozzle/errors.hpp"
#include "epnozzle/grid.hpp"

namespace epnozzle {

inline constexpr double kLinearTolerance = 1e-11;

struct EllipticSolveReport {
  bool factorized = false;
  std::size_t unknowns = 0;
  std::size_t refinement_steps = 0;
  double relative_residual = 0.0;
  double bc_defect = 0.0;  // max violation of the boundary conditions by the returned fields
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

namespace detail {

inline double cell_weight(std::size_t k, std::size_t n, double h) { return (k == 0 || k + 1 == n) ? 0.5 * h : h; }

/// Solve with iterative refinement until the relative residual meets `tol`.
template <class Factorization>
Eigen::VectorXd refined_solve(const Factorization& lu, const SparseMatrix& A, const Eigen::VectorXd& b, double tol,
                              EllipticSolveReport& report) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    report.relative_residual = 0.0;
    return Eigen::VectorXd::Zero(b.size());
  }
  Eigen::VectorXd x = lu.solve(b);
  Eigen::VectorXd r = b - A * x;
  report.relative_residual = r.norm() / bnorm;
  report.refinement_steps = 0;
  while (report.relative_residual > tol && report.refinement_steps < 4) {
    x += lu.solve(r);
    r = b - A * x;
    report.relative_residual = r.norm() / bnorm;
    ++report.refinement_steps;
  }
  if (!(report.relative_residual <= tol) || !x.allFinite())
    throw NonConvergedLinearSolve("linear solve reached relative residual " +
                                  std::to_string(report.relative_residual));
  return x;
}

}  // namespace detail

/// Writes a sparse matrix as "row col value" lines (0-based).
inline void dump_coordinate(std::ostream& os, const SparseMatrix& A) {
  os.precision(17);
  os << "% rows " << A.rows() << " cols " << A.cols() << " nnz " << A.nonZeros() << "\n";
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

/// d_r(hat_r d_r phi) + d_theta^2 phi = f with phi_r = 0 at r = 0 and phi = 0
/// on the exit and both walls. Vertex-centred finite volumes; the Neumann
/// entrance row is a half cell with zero boundary flux. The factorization is
/// kept so repeated right-hand sides are cheap.
class AuxPoissonSolver {
public:
  AuxPoissonSolver(const Grid2D& grid, double r2) : g_(grid), r2_(r2) {
    nt_free_ = g_.Ntheta - 2;
    n_ = (g_.Nr - 1) * nt_free_;
    assemble();
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>(A_);
    if (ldlt_->info() != Eigen::Success) throw SingularSystem("auxiliary Poisson: factorization failed");
  }

  Field2D solve(const Field2D& f4, EllipticSolveReport* report_out = nullptr) const {
    if (!f4.matches(g_)) throw InvalidParameter("solve_aux_poisson: f4 shape does not match grid");
    Eigen::VectorXd b(n_);
    for (std::size_t i = 0; i + 1 < g_.Nr; ++i) {
      const double wr = i == 0 ? 0.5 * g_.dr : g_.dr;
      for (std::size_t j = 1; j + 1 < g_.Ntheta; ++j) b[idx(i, j)] = -f4(i, j) * wr * g_.dtheta;
    }
    EllipticSolveReport rep;
    rep.factorized = true;
    rep.unknowns = n_;
    const Eigen::VectorXd x = detail::refined_solve(*ldlt_, A_, b, kLinearTolerance, rep);
    Field2D phi(g_);
    for (std::size_t i = 0; i + 1 < g_.Nr; ++i)
      for (std::size_t j = 1; j + 1 < g_.Ntheta; ++j) phi(i, j) = x[idx(i, j)];
    rep.bc_defect = 0.0;  // Dirichlet values are not unknowns; the Neumann row is exact in flux form
    if (report_out) *report_out = rep;
    return phi;
  }

  const SparseMatrix& matrix() const { return A_; }
  std::size_t unknowns() const { return n_; }

private:
  std::size_t idx(std::size_t i, std::size_t j) const { return i * nt_free_ + (j - 1); }

  void assemble() {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(5 * n_);
    const double dr = g_.dr, dt = g_.dtheta;
    for (std::size_t i = 0; i + 1 < g_.Nr; ++i) {
      const double wr = i == 0 ? 0.5 * dr : dr;
      const double ri = g_.r(i);
      for (std::size_t j = 1; j + 1 < g_.Ntheta; ++j) {
        const auto row = static_cast<int>(idx(i, j));
        double diag = 0.0;
        const double ke = (r2_ - (ri + 0.5 * dr)) / dr * dt;
        diag += ke;
        if (i + 2 < g_.Nr) t.emplace_back(row, static_cast<int>(idx(i + 1, j)), -ke);
        if (i > 0) {
          const double kw = (r2_ - (ri - 0.5 * dr)) / dr * dt;
          diag += kw;
          t.emplace_back(row, static_cast<int>(idx(i - 1, j)), -kw);
        }
        const double kt = wr / dt;
        diag += 2.0 * kt;
        if (j + 2 < g_.Ntheta) t.emplace_back(row, static_cast<int>(idx(i, j + 1)), -kt);
        if (j > 1) t.emplace_back(row, static_cast<int>(idx(i, j - 1)), -kt);
        t.emplace_back(row, row, diag);
      }
    }
    A_.resize(static_cast<int>(n_), static_cast<int>(n_));
    A_.setFromTriplets(t.begin(), t.end());
    A_.makeCompressed();
  }

  Grid2D g_;
  double r2_;
  std::size_t nt_free_ = 0;
  std::size_t n_ = 0;
  SparseMatrix A_;
  std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

inline std::pair<Field2D, EllipticSolveReport> solve_aux_poisson(const Field2D& f4, const Grid2D& grid, double r2) {
  const AuxPoissonSolver solver(grid, r2);
  EllipticSolveReport rep;
  Field2D phi = solver.solve(f4, &rep);
  return {std::move(phi), rep};
}

/// Homogenized coupled system for the velocity potential varphi and the
/// electric potential Psi:
///
///   d_r(a11 varphi_r + b1 Psi) + d_theta(a22 varphi_theta) = d_r F1 + d_theta F2
///   d_r(hat_r Psi_r) + Psi_thetatheta / hat_r + c1 varphi_r + c2 Psi = F3
///
/// varphi = Psi = 0 at the entrance, varphi_r = Psi = 0 at the exit,
/// zero theta-derivatives on the walls. Every row is the negated equation
/// integrated over its control volume, so the matrix is the discrete bilinear
/// form: the pure second-order blocks are symmetric and the two coupling
/// blocks are exact negative transposes of each other because b1 and c1 are
/// sampled at the same half nodes.
template <CoefficientSource Coeffs>
class PotentialSystemSolver {
public:
  PotentialSystemSolver(const Coeffs& coeffs, const Grid2D& grid) : g_(grid) {
    nphi_ = (g_.Nr - 1) * g_.Ntheta;
    npsi_ = (g_.Nr - 2) * g_.Ntheta;
    node_.reserve(g_.Nr);
    half_.reserve(g_.Nr - 1);
    for (std::size_t i = 0; i < g_.Nr; ++i) node_.push_back(coeffs.at(i + 1 == g_.Nr ? g_.R : g_.r(i)));
    for (std::size_t i = 0; i + 1 < g_.Nr; ++i) half_.push_back(coeffs.at(g_.r(i) + 0.5 * g_.dr));
    assemble();
  }

  /// Factorizes on first use.
  void factorize() const {
    if (lu_) return;
    lu_ = std::make_unique<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(A_);
    lu_->factorize(A_);
    if (lu_->info() != Eigen::Success) {
      lu_.reset();
      throw SingularSystem("potential system: sparse LU failed (loss of discrete coercivity?)");
    }
  }

  std::pair<Field2D, Field2D> solve(const Field2D& F1, const Field2D& F2, const Field2D& F3,
                                    EllipticSolveReport* report_out = nullptr) const {
    if (!F1.matches(g_) || !F2.matches(g_) || !F3.matches(g_))
      throw InvalidParameter("solve_potential_system: F shapes do not match grid");
    return solve_vector(rhs(F1, F2, F3), report_out);
  }

  /// Solves for (varphi, Psi) with (psi, Phi) = (varphi + lpsi, Psi + lphi),
  /// where f1, f2, f3 are the fluxes and source of the problem for (psi, Phi)
  /// and the lift carries its boundary data. The lift is removed through the
  /// discrete operator itself, so lift and correction cancel node by node.
  std::pair<Field2D, Field2D> solve_lifted(const Field2D& f1, const Field2D& f2, const Field2D& f3,
                                           const Field2D& lpsi, const Field2D& lphi,
                                           EllipticSolveReport* report_out = nullptr) const {
    if (!f1.matches(g_) || !f2.matches(g_) || !f3.matches(g_) || !lpsi.matches(g_) || !lphi.matches(g_))
      throw InvalidParameter("solve_lifted: field shapes do not match grid");
    return solve_vector(rhs(f1, f2, f3) - apply(lpsi, lphi), report_out);
  }

  /// Discrete operator applied to full nodal fields, boundary nodes included.
  /// The exit face carries the flux a11 psi_r + b1 Phi of the given fields.
  Eigen::VectorXd apply(const Field2D& psi, const Field2D& Phi) const {
    const std::size_t Nr = g_.Nr, Nt = g_.Ntheta;
    Eigen::VectorXd full(static_cast<Eigen::Index>(2 * Nr * Nt));
    Eigen::VectorXd x(static_cast<Eigen::Index>(nphi_ + npsi_));
    for (std::size_t i = 0; i < Nr; ++i)
      for (std::size_t j = 0; j < Nt; ++j) {
        full[full_index(i, j, false)] = psi(i, j);
        full[full_index(i, j, true)] = Phi(i, j);
        if (i >= 1) x[iphi(i, j)] = psi(i, j);
        if (i >= 1 && i + 1 < Nr) x[ipsi(i, j)] = Phi(i, j);
      }
    Eigen::VectorXd y = A_ * x + Ab_ * full;
    const Field2D psi_r = fd::partial(psi, g_, 0);
    const auto& ce = node_.back();
    for (std::size_t j = 0; j < Nt; ++j) {
      const double flux = ce.a11 * psi_r(Nr - 1, j) + ce.b1 * Phi(Nr - 1, j);
      y[iphi(Nr - 1, j)] -= flux * detail::cell_weight(j, Nt, g_.dtheta);
    }
    return y;
  }

  /// Right-hand side vector for given flux data.
  Eigen::VectorXd rhs(const Field2D& F1, const Field2D& F2, const Field2D& F3) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nphi_ + npsi_));
    const std::size_t Nr = g_.Nr, Nt = g_.Ntheta;
    for (std::size_t i = 1; i < Nr; ++i) {
      const double wr = detail::cell_weight(i, Nr, g_.dr);
      for (std::size_t j = 0; j < Nt; ++j) {
        const double wt = detail::cell_weight(j, Nt, g_.dtheta);
        const double f1e = (i + 1 < Nr) ? 0.5 * (F1(i, j) + F1(i + 1, j)) : F1(i, j);
        const double f1w = 0.5 * (F1(i - 1, j) + F1(i, j));
        const double f2n = (j + 1 < Nt) ? 0.5 * (F2(i, j) + F2(i, j + 1)) : F2(i, j);
        const double f2s = (j > 0) ? 0.5 * (F2(i, j - 1) + F2(i, j)) : F2(i, j);
        b[iphi(i, j)] = -((f1e - f1w) * wt + (f2n - f2s) * wr);
      }
    }
    for (std::size_t i = 1; i + 1 < Nr; ++i)
      for (std::size_t j = 0; j < Nt; ++j)
        b[ipsi(i, j)] = -F3(i, j) * g_.dr * detail::cell_weight(j, Nt, g_.dtheta);
    return b;
  }

  const SparseMatrix& matrix() const { return A_; }
  std::size_t phi_unknowns() const { return nphi_; }
  std::size_t psi_unknowns() const { return npsi_; }
  std::size_t iphi(std::size_t i, std::size_t j) const { return (i - 1) * g_.Ntheta + j; }
  std::size_t ipsi(std::size_t i, std::size_t j) const { return nphi_ + (i - 1) * g_.Ntheta + j; }
  const Grid2D& grid() const { return g_; }

  /// Discrete L2 mass of each unknown (control-volume area).
  Eigen::VectorXd mass() const {
    Eigen::VectorXd m(static_cast<Eigen::Index>(nphi_ + npsi_));
    for (std::size_t i = 1; i < g_.Nr; ++i)
      for (std::size_t j = 0; j < g_.Ntheta; ++j) {
        const double w = detail::cell_weight(i, g_.Nr, g_.dr) * detail::cell_weight(j, g_.Ntheta, g_.dtheta);
        m[iphi(i, j)] = w;
        if (i + 1 < g_.Nr) m[ipsi(i, j)] = w;
      }
    return m;
  }

private:
  std::pair<Field2D, Field2D> solve_vector(const Eigen::VectorXd& b, EllipticSolveReport* report_out) const {
    factorize();
    EllipticSolveReport rep;
    rep.factorized = true;
    rep.unknowns = nphi_ + npsi_;
    const Eigen::VectorXd x = detail::refined_solve(*lu_, A_, b, kLinearTolerance, rep);
    Field2D varphi(g_), Psi(g_);
    for (std::size_t i = 1; i < g_.Nr; ++i)
      for (std::size_t j = 0; j < g_.Ntheta; ++j) varphi(i, j) = x[iphi(i, j)];
    for (std::size_t i = 1; i + 1 < g_.Nr; ++i)
      for (std::size_t j = 0; j < g_.Ntheta; ++j) Psi(i, j) = x[ipsi(i, j)];
    rep.bc_defect = 0.0;
    if (report_out) *report_out = rep;
    return {std::move(varphi), std::move(Psi)};
  }

  std::size_t full_index(std::size_t i, std::size_t j, bool psi) const {
    return (psi ? g_.Nr * g_.Ntheta : 0) + i * g_.Ntheta + j;
  }

  // Entries hitting boundary nodes go to Ab_, indexed by full_index.
  void assemble() {
    const std::size_t Nr = g_.Nr, Nt = g_.Ntheta;
    const double dr = g_.dr, dt = g_.dtheta;
    std::vector<Eigen::Triplet<double>> t, tb;
    t.reserve(12 * (nphi_ + npsi_));
    auto put = [&](std::size_t r, std::size_t i, std::size_t j, bool psi, double v) {
      const bool free = psi ? (i >= 1 && i + 1 < Nr) : (i >= 1);
      if (free)
        t.emplace_back(static_cast<int>(r), static_cast<int>(psi ? ipsi(i, j) : iphi(i, j)), v);
      else
        tb.emplace_back(static_cast<int>(r), static_cast<int>(full_index(i, j, psi)), v);
    };
    auto add_phi = [&](std::size_t r, std::size_t i, std::size_t j, double v) { put(r, i, j, false, v); };
    auto add_psi = [&](std::size_t r, std::size_t i, std::size_t j, double v) { put(r, i, j, true, v); };

    // varphi rows
    for (std::size_t i = 1; i < Nr; ++i) {
      const double wr = detail::cell_weight(i, Nr, dr);
      const auto& cn = node_[i];
      for (std::size_t j = 0; j < Nt; ++j) {
        const double wt = detail::cell_weight(j, Nt, dt);
        const std::size_t row = iphi(i, j);
        double diag = 0.0;
        if (i + 1 < Nr) {  // east face; the exit face carries no flux
          const auto& ce = half_[i];
          const double k = ce.a11 / dr * wt;
          diag += k;
          add_phi(row, i + 1, j, -k);
          const double cp = 0.5 * ce.b1 * wt;
          add_psi(row, i, j, -cp);
          add_psi(row, i + 1, j, -cp);
        }
        {  // west face
          const auto& cw = half_[i - 1];
          const double k = cw.a11 / dr * wt;
          diag += k;
          add_phi(row, i - 1, j, -k);
          const double cp = 0.5 * cw.b1 * wt;
          add_psi(row, i - 1, j, cp);
          add_psi(row, i, j, cp);
        }
        const double kt = cn.a22 / dt * wr;
        if (j + 1 < Nt) {
          diag += kt;
          add_phi(row, i, j + 1, -kt);
        }
        if (j > 0) {
          diag += kt;
          add_phi(row, i, j - 1, -kt);
        }
        add_phi(row, i, j, diag);
      }
    }
    // Psi rows
    for (std::size_t i = 1; i + 1 < Nr; ++i) {
      const double wr = dr;
      const auto& cn = node_[i];
      const auto& ce = half_[i];
      const auto& cw = half_[i - 1];
      for (std::size_t j = 0; j < Nt; ++j) {
        const double wt = detail::cell_weight(j, Nt, dt);
        const std::size_t row = ipsi(i, j);
        double diag = 0.0;
        const double ke = ce.hat_r / dr * wt;
        diag += ke;
        add_psi(row, i + 1, j, -ke);
        const double kw = cw.hat_r / dr * wt;
        diag += kw;
        add_psi(row, i - 1, j, -kw);
        const double kt = wr / (cn.hat_r * dt);
        if (j + 1 < Nt) {
          diag += kt;
          add_psi(row, i, j + 1, -kt);
        }
        if (j > 0) {
          diag += kt;
          add_psi(row, i, j - 1, -kt);
        }
        diag -= cn.c2 * wr * wt;
        add_psi(row, i, j, diag);
        // -(c1 varphi_r) integrated as the mean of the two face differences
        add_phi(row, i + 1, j, -0.5 * ce.c1 * wt);
        add_phi(row, i, j, 0.5 * ce.c1 * wt - 0.5 * cw.c1 * wt);
        add_phi(row, i - 1, j, 0.5 * cw.c1 * wt);
      }
    }
    const auto n = static_cast<int>(nphi_ + npsi_);
    A_.resize(n, n);
    A_.setFromTriplets(t.begin(), t.end());
    A_.makeCompressed();
    Ab_.resize(n, static_cast<int>(2 * Nr * Nt));
    Ab_.setFromTriplets(tb.begin(), tb.end());
    Ab_.makeCompressed();
  }

  Grid2D g_;
  std::size_t nphi_ = 0, npsi_ = 0;
  std::vector<LinearCoefficients> node_, half_;
  SparseMatrix A_, Ab_;
  mutable std::unique_ptr<Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

template <CoefficientSource Coeffs>
std::pair<std::pair<Field2D, Field2D>, EllipticSolveReport> solve_potential_system(const Field2D& F1,
                                                                                   const Field2D& F2,
                                                                                   const Field2D& F3,
                                                                                   const Coeffs& coeffs,
                                                                                   const Grid2D& grid) {
  const PotentialSystemSolver<Coeffs> solver(coeffs, grid);
  EllipticSolveReport rep;
  auto fields = solver.solve(F1, F2, F3, &rep);
  return {std::move(fields), rep};
}

/// Lifts that restore the inhomogeneous boundary data of the potentials.
struct PotentialLift {
  Profile h;          // exit radial velocity perturbation
  Profile g;          // entrance stream potential, int r2 V_en
  Profile g_prime;    // r2 V_en
  Profile dphi_en;    // Phi_en - Phibar(0)
  Profile dphi_ex;    // Phi_ex - Phibar(R)

  /// Electric potential lift, linear in r between the entrance and exit data.
  double phi_star(const Grid2D& grid, std::size_t i, std::size_t j) const {
    const double r = grid.r(i);
    return (grid.R - r) / grid.R * dphi_en[j] + r / grid.R * dphi_ex[j];
  }

  /// r h + g on the grid.
  Field2D psi_field(const Grid2D& grid) const {
    Field2D f(grid);
    for (std::size_t i = 0; i < grid.Nr; ++i)
      for (std::size_t j = 0; j < grid.Ntheta; ++j) f(i, j) = grid.r(i) * h[j] + g[j];
    return f;
  }

  Field2D phi_field(const Grid2D& grid) const {
    Field2D f(grid);
    for (std::size_t i = 0; i < grid.Nr; ++i)
      for (std::size_t j = 0; j < grid.Ntheta; ++j) f(i, j) = phi_star(grid, i, j);
    return f;
  }
};

/// Gradient of the curl corrector. The tangential derivatives on the
/// Dirichlet boundaries (phi_r on the walls, phi_theta on the exit) vanish
/// exactly; normal derivatives use ghost-node central differences.
struct AuxGradient {
  Field2D phi_r;
  Field2D phi_theta;
};

inline AuxGradient aux_gradient(const Field2D& phi, const Grid2D& grid) {
  AuxGradient d{fd::partial(phi, grid, 0, true), fd::partial(phi, grid, 1, true)};
  const std::size_t Nr = grid.Nr, Nt = grid.Ntheta;
  for (std::size_t j = 0; j < Nt; ++j) {
    d.phi_r(0, j) = 0.0;
    d.phi_theta(Nr - 1, j) = 0.0;
  }
  for (std::size_t i = 0; i < Nr; ++i) {
    d.phi_r(i, 0) = 0.0;
    d.phi_r(i, Nt - 1) = 0.0;
  }
  return d;
}

struct RecoveredVelocity {
  Field2D calU;
  Field2D calV;
  Field2D checkPhi;
};

/// psi = varphi + r h + g; (U, V) = (psi_r - phi_theta, psi_theta / hat_r + phi_r);
/// Phi = Psi + Phi*. psi_theta vanishes on the walls; radial derivatives at
/// the entrance and exit use ghost-node central differences.
inline RecoveredVelocity recover_velocity(const Field2D& varphi, const Field2D& Psi, const Field2D& phi,
                                          const PotentialLift& lift, double r2, const Grid2D& grid) {
  if (!varphi.matches(grid) || !Psi.matches(grid) || !phi.matches(grid))
    throw InvalidParameter("recover_velocity: field shapes do not match grid");
  const std::size_t Nr = grid.Nr, Nt = grid.Ntheta;
  if (lift.h.size() != Nt || lift.g_prime.size() != Nt || lift.dphi_en.size() != Nt || lift.dphi_ex.size() != Nt)
    throw InvalidParameter("recover_velocity: profile length does not match grid");

  const Field2D dvr = fd::partial(varphi, grid, 0, true);
  const Field2D dvt = fd::partial(varphi, grid, 1);
  const AuxGradient dphi = aux_gradient(phi, grid);
  const auto dh = fd::derivative(lift.h, grid.dtheta);

  RecoveredVelocity out{Field2D(grid), Field2D(grid), Field2D(grid)};
  for (std::size_t i = 0; i < Nr; ++i) {
    const double r = grid.r(i);
    const double hr = r2 - r;
    for (std::size_t j = 0; j < Nt; ++j) {
      const bool wall = (j == 0 || j + 1 == Nt);
      const double psi_r = dvr(i, j) + lift.h[j];
      const double psi_t = wall ? 0.0 : dvt(i, j) + r * dh[j] + lift.g_prime[j];
      out.calU(i, j) = psi_r - dphi.phi_theta(i, j);
      out.calV(i, j) = psi_t / hr + dphi.phi_r(i, j);
      out.checkPhi(i, j) = Psi(i, j) + lift.phi_star(grid, i, j);
    }
  }
  return out;
}

/// Minimum Rayleigh quotient x^T A x / x^T M x of the discrete bilinear form
/// over random vectors satisfying the essential boundary conditions.
template <CoefficientSource Coeffs>
double coercivity_check(const Coeffs& coeffs, const Grid2D& grid, std::size_t trials, std::uint64_t seed = 0) {
  if (trials < 1) throw InvalidParameter("coercivity_check: trials must be >= 1");
  const PotentialSystemSolver<Coeffs> sys(coeffs, grid);
  const SparseMatrix& A = sys.matrix();
  const Eigen::VectorXd m = sys.mass();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(A.rows());
  for (std::size_t k = 0; k < trials; ++k) {
    for (Eigen::Index n = 0; n < x.size(); ++n) x[n] = normal(rng);
    const double num = x.dot(A * x);
    const double den = x.dot(m.cwiseProduct(x));
    best = std::min(best, num / den);
  }
  return best;
}

}  // namespace epnozzle
