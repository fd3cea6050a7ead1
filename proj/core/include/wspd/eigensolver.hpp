#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace wspd {

struct EigenPairs {
  std::vector<std::complex<double>> values;
  Eigen::MatrixXcd vectors;      ///< unit-norm columns
  std::vector<double> residuals; ///< ||Op x - theta x|| / |theta| per pair
  int restarts = 0;
};

/// Krylov-Schur iteration for the `nev` eigenvalues of largest magnitude of
/// a linear operator given only through its action. The start vector is
/// fixed (seeded), so results are reproducible bit for bit.
EigenPairs krylov_schur(const std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>& apply,
                        Eigen::Index n, int nev, int krylov_dim, double tol, int max_restarts);

/// Eigenvalues of `a` nearest `shift`, via a sparse LU of (a - shift I).
/// Throws ConvergenceError carrying the worst residual on failure.
EigenPairs shift_invert_eigs(const Eigen::SparseMatrix<std::complex<double>>& a,
                             std::complex<double> shift, int nev, int krylov_dim, double tol,
                             int max_restarts);

}  // namespace wspd
