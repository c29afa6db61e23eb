#include "asjr/problem.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "asjr/rng.hpp"

namespace asjr {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd to_dense(const CsrMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows, A.cols_n);
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      D(r, A.cols[k]) += A.vals[k];
  return D;
}

/* Split A into its diagonal and the Jacobi iteration matrix M = I - D^{-1}A.
 * M keeps A's off-diagonal sparsity; the diagonal cancels exactly. */
void jacobi_split(const CsrMatrix& A, std::vector<double>& diag, CsrMatrix& M) {
  diag.assign(A.rows, 0.0);
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      if (A.cols[k] == r) diag[r] += A.vals[k];
  for (int r = 0; r < A.rows; ++r)
    if (diag[r] == 0.0)
      throw std::invalid_argument("jacobi split: zero diagonal at row " +
                                  std::to_string(r));
  CsrBuilder mb(A.rows, A.cols_n);
  for (int r = 0; r < A.rows; ++r)
    for (int k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k)
      if (A.cols[k] != r) mb.add(r, A.cols[k], -A.vals[k] / diag[r]);
  M = mb.finish();
}

double power_iteration_sigma_max(const CsrMatrix& M, int max_iterations) {
  const int n = M.rows;
  Rng rng(0x5eedu);
  std::vector<double> v(n), tmp(n), w(n);
  for (auto& x : v) x = rng.uniform(0.5, 1.0);
  double sigma = 0.0, prev = -1.0;
  for (int it = 0; it < max_iterations; ++it) {
    M.multiply(v, tmp);  // w = M^T M v
    std::fill(w.begin(), w.end(), 0.0);
    for (int r = 0; r < n; ++r)
      for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k)
        w[M.cols[k]] += M.vals[k] * tmp[r];
    double nrm = 0.0;
    for (double x : w) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) return 0.0;  // M annihilates the iterate: sigma_max ~ 0
    sigma = std::sqrt(nrm);      // ||M^T M v|| -> sigma^2 for unit v
    for (int r = 0; r < n; ++r) v[r] = w[r] / nrm;
    if (it > 4 && std::abs(sigma - prev) <= 1e-9 * std::max(sigma, 1e-30))
      return sigma;
    prev = sigma;
  }
  throw std::runtime_error(
      "compute_spectral_constants: power iteration did not converge");
}

/* Conjugate gradient for the SPD system (A^T A) x = rhs. */
void cg_normal_equations(const CsrMatrix& A, const std::vector<double>& rhs,
                         std::vector<double>& x, double tol, int max_iters) {
  const int n = A.rows;
  std::vector<double> r(rhs), p(rhs), ap(n), tmp(n);
  x.assign(n, 0.0);
  double rr = 0.0;
  for (double v : r) rr += v * v;
  const double stop = tol * tol * rr;
  for (int it = 0; it < max_iters && rr > stop; ++it) {
    A.multiply(p, tmp);  // ap = A^T (A p)
    std::fill(ap.begin(), ap.end(), 0.0);
    for (int row = 0; row < n; ++row)
      for (int k = A.row_ptr[row]; k < A.row_ptr[row + 1]; ++k)
        ap[A.cols[k]] += A.vals[k] * tmp[row];
    double pap = 0.0;
    for (int i = 0; i < n; ++i) pap += p[i] * ap[i];
    if (pap <= 0.0) break;
    const double alpha = rr / pap;
    double rr_new = 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr_new += r[i] * r[i];
    }
    const double beta = rr_new / rr;
    for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rr = rr_new;
  }
}

double inverse_iteration_sigma_min(const CsrMatrix& A, int max_iterations) {
  const int n = A.rows;
  Rng rng(0xfeedu);
  std::vector<double> v(n), w;
  for (auto& x : v) x = rng.uniform(0.5, 1.0);
  double nrm = 0.0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  for (auto& x : v) x /= nrm;
  double sigma = 0.0, prev = -1.0;
  const int outer = std::max(64, max_iterations / 1000);
  for (int it = 0; it < outer; ++it) {
    cg_normal_equations(A, v, w, 1e-13, max_iterations);
    double wn = 0.0;
    for (double x : w) wn += x * x;
    wn = std::sqrt(wn);
    if (wn == 0.0)
      throw std::runtime_error(
          "compute_spectral_constants: inverse iteration broke down");
    sigma = 1.0 / std::sqrt(wn);  // ||(A^T A)^{-1} v|| -> 1/sigma_min^2
    for (int i = 0; i < n; ++i) v[i] = w[i] / wn;
    if (it > 2 && std::abs(sigma - prev) <= 1e-9 * std::max(sigma, 1e-30))
      return sigma;
    prev = sigma;
  }
  throw std::runtime_error(
      "compute_spectral_constants: inverse iteration did not converge");
}

}  // namespace

SpectralConstants compute_spectral_constants(const CsrMatrix& A,
                                             SpectralMethod method,
                                             int max_iterations) {
  if (A.rows != A.cols_n || A.rows < 1)
    throw std::invalid_argument("compute_spectral_constants: A must be square");
  std::vector<double> diag;
  CsrMatrix M;
  jacobi_split(A, diag, M);

  const bool dense = method == SpectralMethod::Dense ||
                     (method == SpectralMethod::Auto && A.rows <= 2500);
  SpectralConstants out{};
  if (dense) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd_a(to_dense(A));
    out.sigma_min_A = svd_a.singularValues().minCoeff();
    Eigen::BDCSVD<Eigen::MatrixXd> svd_m(to_dense(M));
    out.sigma_max_M = svd_m.singularValues().maxCoeff();
  } else {
    out.sigma_max_M = power_iteration_sigma_max(M, max_iterations);
    out.sigma_min_A = inverse_iteration_sigma_min(A, max_iterations);
  }
  if (out.sigma_max_M >= 1.0)
    throw std::runtime_error(
        "compute_spectral_constants: sigma_max(M) >= 1, Jacobi does not "
        "contract");
  return out;
}

SparseSystem build_poisson(int ell) {
  if (ell < 1) throw std::invalid_argument("build_poisson: ell must be >= 1");
  SparseSystem sys;
  sys.ell = ell;
  sys.m = ell * ell;
  const int m = sys.m;
  const double h = 1.0 / (ell + 1);

  CsrBuilder ab(m, m);
  for (int k = 0; k < m; ++k) {
    const int i = k % ell;
    const int j = k / ell;
    if (j > 0) ab.add(k, k - ell, -1.0);
    if (i > 0) ab.add(k, k - 1, -1.0);
    ab.add(k, k, 4.0);
    if (i < ell - 1) ab.add(k, k + 1, -1.0);
    if (j < ell - 1) ab.add(k, k + ell, -1.0);
  }
  sys.A = ab.finish();
  jacobi_split(sys.A, sys.diag, sys.M);

  sys.b.resize(m);
  sys.c.resize(m);
  for (int k = 0; k < m; ++k) {
    const int i = k % ell;
    const int j = k / ell;
    const double x = (i + 1) * h;
    const double y = (j + 1) * h;
    sys.b[k] = h * h * 2.0 * kPi * kPi * std::sin(kPi * x) * std::sin(kPi * y);
    sys.c[k] = sys.b[k] / sys.diag[k];
  }
  double nb = 0.0;
  for (double v : sys.b) nb += v * v;
  sys.norm_b = std::sqrt(nb);

  {
    Eigen::MatrixXd Ad = to_dense(sys.A);
    Eigen::VectorXd bd = Eigen::Map<const Eigen::VectorXd>(sys.b.data(), m);
    Eigen::VectorXd xd = Ad.partialPivLu().solve(bd);
    const double resid = (Ad * xd - bd).norm();
    if (resid > 1e-12)
      throw std::runtime_error("build_poisson: direct solve residual " +
                               std::to_string(resid));
    sys.x_star.assign(xd.data(), xd.data() + m);
  }

  /* Closed forms for the 5-point Laplacian on an ell x ell grid; the unit
   * tests cross-check these against compute_spectral_constants. */
  const double cth = std::cos(kPi / (ell + 1));
  sys.sigma_max_M = cth;
  sys.sigma_min_A = 4.0 - 4.0 * cth;
  sys.cond_A = (4.0 + 4.0 * cth) / (4.0 - 4.0 * cth);
  return sys;
}

std::vector<double> analytic_solution(int ell) {
  if (ell < 1)
    throw std::invalid_argument("analytic_solution: ell must be >= 1");
  const double h = 1.0 / (ell + 1);
  std::vector<double> u(static_cast<std::size_t>(ell) * ell);
  for (int k = 0; k < ell * ell; ++k) {
    const int i = k % ell;
    const int j = k / ell;
    u[k] = std::sin(kPi * (i + 1) * h) * std::sin(kPi * (j + 1) * h);
  }
  return u;
}

Partition partition_rows(int m, int agents, const CsrMatrix& M) {
  if (m < 1) throw std::invalid_argument("partition_rows: m must be >= 1");
  if (agents < 1 || agents > m)
    throw std::invalid_argument(
        "partition_rows: need 1 <= agents <= rows, got N=" +
        std::to_string(agents) + " for m=" + std::to_string(m));
  if (M.rows != m)
    throw std::invalid_argument("partition_rows: M row count mismatch");

  Partition p;
  p.m = m;
  p.agents = agents;
  p.block_start.resize(agents + 1);
  const int base = m / agents;
  const int rem = m % agents;
  p.block_start[0] = 0;
  for (int i = 0; i < agents; ++i)
    p.block_start[i + 1] = p.block_start[i] + base + (i < rem ? 1 : 0);

  p.owner.resize(m);
  for (int i = 0; i < agents; ++i)
    for (int r = p.block_start[i]; r < p.block_start[i + 1]; ++r)
      p.owner[r] = i;

  p.neighbors.assign(agents, {});
  for (int r = 0; r < m; ++r) {
    const int i = p.owner[r];
    for (int k = M.row_ptr[r]; k < M.row_ptr[r + 1]; ++k) {
      const int j = p.owner[M.cols[k]];
      if (j != i) p.neighbors[i].insert(j);
    }
  }
  return p;
}

}  // namespace asjr
