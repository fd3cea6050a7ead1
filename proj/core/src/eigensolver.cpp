#include "wspd/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/UmfPackSupport>

#include "wspd/error.hpp"

namespace wspd {

namespace {

using Complex = std::complex<double>;

Eigen::VectorXcd seeded_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // Raw engine output keeps the start vector identical across standard libraries.
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double re = unit();
    const double im = unit();
    v(i) = Complex(re, im);
  }
  return v.normalized();
}

// Swap the adjacent diagonal entries (i, i+1) of the upper-triangular R,
// updating the Schur vectors U.
void swap_schur(Eigen::MatrixXcd& r, Eigen::MatrixXcd& u, Eigen::Index i) {
  const Complex a = r(i, i);
  const Complex c = r(i + 1, i + 1);
  const Complex b = r(i, i + 1);
  Complex x1 = b, x2 = c - a;
  const double nrm = std::hypot(std::abs(x1), std::abs(x2));
  if (nrm == 0.0) return;
  x1 /= nrm;
  x2 /= nrm;
  Eigen::Matrix2cd g;
  g << x1, -std::conj(x2), x2, std::conj(x1);
  r.middleCols(i, 2) = r.middleCols(i, 2) * g;
  r.middleRows(i, 2) = g.adjoint() * r.middleRows(i, 2);
  u.middleCols(i, 2) = u.middleCols(i, 2) * g;
  r(i + 1, i) = 0.0;
}

// Sort the Schur form so that |R_ii| is non-increasing.
void sort_schur(Eigen::MatrixXcd& r, Eigen::MatrixXcd& u) {
  const Eigen::Index m = r.rows();
  for (Eigen::Index pass = 0; pass < m; ++pass) {
    bool swapped = false;
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
      if (std::abs(r(i + 1, i + 1)) > std::abs(r(i, i))) {
        swap_schur(r, u, i);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
}

// Eigenvector of upper-triangular R for its i-th diagonal entry.
Eigen::VectorXcd triangular_eigvec(const Eigen::MatrixXcd& r, Eigen::Index i) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(r.rows());
  y(i) = 1.0;
  const Complex theta = r(i, i);
  const double small = std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(theta));
  for (Eigen::Index l = i - 1; l >= 0; --l) {
    Complex s = 0.0;
    for (Eigen::Index q = l + 1; q <= i; ++q) s += r(l, q) * y(q);
    Complex d = r(l, l) - theta;
    if (std::abs(d) < small) d = small;
    y(l) = -s / d;
  }
  return y;
}

}  // namespace

EigenPairs krylov_schur(const std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>& apply,
                        Eigen::Index n, int nev, int krylov_dim, double tol, int max_restarts) {
  if (n < 1 || nev < 1) throw ConfigError("eigensolver: empty problem");
  nev = static_cast<int>(std::min<Eigen::Index>(nev, n));
  const Eigen::Index m = std::min<Eigen::Index>(std::max(krylov_dim, nev + 2), n);

  Eigen::MatrixXcd v = Eigen::MatrixXcd::Zero(n, m + 1);
  Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(m + 1, m);
  v.col(0) = seeded_vector(n, 0x9e3779b97f4a7c15ULL);
  Eigen::VectorXcd w(n);
  Eigen::Index k = 0;
  double worst = std::numeric_limits<double>::infinity();

  for (int restart = 0; restart <= max_restarts; ++restart) {
    for (Eigen::Index j = k; j < m; ++j) {
      apply(v.col(j), w);
      const double wnorm = w.norm();
      // Classical Gram-Schmidt, applied twice.
      Eigen::VectorXcd h = v.leftCols(j + 1).adjoint() * w;
      w.noalias() -= v.leftCols(j + 1) * h;
      Eigen::VectorXcd h2 = v.leftCols(j + 1).adjoint() * w;
      w.noalias() -= v.leftCols(j + 1) * h2;
      h += h2;
      b.col(j).head(j + 1) += h;
      const double beta = w.norm();
      if (beta <= 1e-13 * wnorm) {
        // Invariant subspace: continue with a fresh orthogonal direction.
        b(j + 1, j) = 0.0;
        if (j + 1 < n) {
          Eigen::VectorXcd f = seeded_vector(n, 0x51ed270b27a3c5d1ULL + static_cast<std::uint64_t>(j));
          for (int pass = 0; pass < 2; ++pass) f -= v.leftCols(j + 1) * (v.leftCols(j + 1).adjoint() * f);
          v.col(j + 1) = f.normalized();
        } else {
          v.col(j + 1).setZero();
        }
      } else {
        b(j + 1, j) = beta;
        v.col(j + 1) = w / beta;
      }
    }

    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(b.topRows(m));
    Eigen::MatrixXcd r = schur.matrixT().triangularView<Eigen::Upper>();
    Eigen::MatrixXcd u = schur.matrixU();
    sort_schur(r, u);
    const Eigen::RowVectorXcd bu = b.row(m) * u;

    worst = 0.0;
    std::vector<Eigen::VectorXcd> ys;
    std::vector<double> res;
    for (int i = 0; i < nev; ++i) {
      Eigen::VectorXcd y = triangular_eigvec(r, i);
      const double theta = std::abs(r(i, i));
      const double resid = std::abs((bu.head(i + 1) * y.head(i + 1))(0)) / (theta * y.norm());
      worst = std::max(worst, resid);
      res.push_back(resid);
      ys.push_back(std::move(y));
    }

    if (worst <= tol || m == n) {
      EigenPairs out;
      out.restarts = restart;
      out.vectors.resize(n, nev);
      const Eigen::MatrixXcd basis = v.leftCols(m) * u;
      for (int i = 0; i < nev; ++i) {
        out.values.push_back(r(i, i));
        out.vectors.col(i) = (basis.leftCols(i + 1) * ys[i].head(i + 1)).normalized();
        out.residuals.push_back(res[i]);
      }
      return out;
    }

    const Eigen::Index keep = std::min<Eigen::Index>(m - 1, nev + (m - nev) / 2);
    const Eigen::MatrixXcd kept = v.leftCols(m) * u.leftCols(keep);
    v.col(keep) = v.col(m);
    v.leftCols(keep) = kept;
    v.rightCols(m - keep).setZero();
    b.setZero();
    b.topLeftCorner(keep, keep) = r.topLeftCorner(keep, keep);
    b.row(keep).head(keep) = bu.head(keep);
    k = keep;
  }
  throw ConvergenceError("Krylov-Schur iteration did not converge", worst);
}

EigenPairs shift_invert_eigs(const Eigen::SparseMatrix<std::complex<double>>& a, std::complex<double> shift,
                             int nev, int krylov_dim, double tol, int max_restarts) {
  using Sparse = Eigen::SparseMatrix<std::complex<double>>;
  Sparse identity(a.rows(), a.cols());
  identity.setIdentity();
  Sparse shifted = a - shift * identity;
  shifted.makeCompressed();

  Eigen::UmfPackLU<Sparse> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success)
    throw ConvergenceError("sparse LU factorization of the shifted operator failed",
                           std::numeric_limits<double>::infinity());

  auto pairs = krylov_schur(
      [&lu](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { y = lu.solve(x); }, a.rows(), nev,
      krylov_dim, tol, max_restarts);
  for (auto& theta : pairs.values) theta = shift + 1.0 / theta;
  return pairs;
}

}  // namespace wspd
