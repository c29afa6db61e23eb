#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "asjr/sparse.hpp"

namespace asjr {

/* A block-row decomposed linear system Ax = b prepared for Jacobi iteration:
 *   M = I - D^{-1} A   (zero diagonal, same off-diagonal sparsity as A)
 *   c = D^{-1} b
 * together with the reference solution and the spectral constants used by
 * the rejection bound. Immutable after construction; safe to share across
 * agents and threads. */
struct SparseSystem {
  int m = 0;    // unknowns
  int ell = 0;  // grid side for the Poisson benchmark, 0 otherwise
  CsrMatrix A;
  CsrMatrix M;
  std::vector<double> diag;  // D entries
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> x_star;  // direct dense solve, residual <= 1e-12
  double norm_b = 0.0;         // ||b||_2
  double sigma_min_A = 0.0;    // smallest singular value of A
  double sigma_max_M = 0.0;    // largest singular value of M, < 1
  double cond_A = 0.0;         // 2-norm condition number of A
};

/* Contiguous block-row partition of m unknowns over N agents. The first
 * m % N blocks take the extra row. neighbors[i] = { j != i : block M_ij has
 * a structural nonzero }, i.e. the senders whose values agent i consumes. */
struct Partition {
  int m = 0;
  int agents = 0;
  std::vector<int> block_start;  // size agents + 1
  std::vector<std::set<int>> neighbors;
  std::vector<int> owner;  // size m, row -> agent

  int block_size(int i) const { return block_start[i + 1] - block_start[i]; }
  int owner_of(int row) const { return owner[row]; }
};

enum class SpectralMethod { Auto, Dense, Iterative };

/* sigma_min(A) and sigma_max(M) for a square matrix with nonzero diagonal.
 * Dense SVD up to 2500 rows, power/inverse iteration above (relative
 * accuracy 1e-8). Throws std::runtime_error if the iteration fails to
 * converge or if sigma_max(M) >= 1 (no contraction). */
struct SpectralConstants {
  double sigma_min_A;
  double sigma_max_M;
};
SpectralConstants compute_spectral_constants(
    const CsrMatrix& A, SpectralMethod method = SpectralMethod::Auto,
    int max_iterations = 200000);

/* 5-point finite-difference discretization of -lap u = f on the unit square,
 * zero boundary, f = 2 pi^2 sin(pi x) sin(pi y), ell x ell interior grid,
 * h = 1/(ell+1). Row k is grid point (i, j) = (k mod ell, k / ell), and
 * b_k = h^2 f(x_{i+1}, y_{j+1}). Spectral constants use the closed forms
 * sigma_max(M) = cos(pi/(ell+1)), sigma_min(A) = 4 - 4 cos(pi/(ell+1));
 * unit tests cross-check those against compute_spectral_constants. */
SparseSystem build_poisson(int ell);

/* Analytic solution u(x, y) = sin(pi x) sin(pi y) sampled on the grid of
 * build_poisson(ell), in the same row ordering. */
std::vector<double> analytic_solution(int ell);

/* Split m rows over N agents (1 <= N <= m) and derive the neighbor relation
 * from the block sparsity of M. */
Partition partition_rows(int m, int agents, const CsrMatrix& M);

}  // namespace asjr
