#include "meltsim/linsolve.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

using namespace meltsim;
using namespace meltsim::linsolve;

namespace {

CsrMatrix dense_to_csr(const std::vector<double> &A, int n) {
  CsrMatrix m;
  m.n = n;
  m.row_offsets.push_back(0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double v = A[static_cast<std::size_t>(i * n + j)];
      if (v != 0.0) {
        m.cols.push_back(j);
        m.values.push_back(v);
      }
    }
    m.row_offsets.push_back(static_cast<int>(m.cols.size()));
  }
  return m;
}

CsrMatrix identity(int n) {
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i) A[static_cast<std::size_t>(i * n + i)] = 1.0;
  return dense_to_csr(A, n);
}

double residual(const CsrMatrix &A, const std::vector<double> &x, const std::vector<double> &b) {
  auto Ax = A.multiply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) s += (Ax[i] - b[i]) * (Ax[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("cg on identity") {
  std::vector<double> b{3.0, -1.0, 2.5};
  auto x = cg_solve(identity(3), b);
  CHECK(x == b);
}

TEST_CASE("cg 2x2 known solution") {
  auto A = dense_to_csr({4, 1, 1, 3}, 2);
  auto x = cg_solve(A, {1, 2}, {1e-12, 100});
  CHECK_THAT(x[0], Catch::Matchers::WithinAbs(1.0 / 11.0, 1e-10));
  CHECK_THAT(x[1], Catch::Matchers::WithinAbs(7.0 / 11.0, 1e-10));
}

TEST_CASE("cg matches dense LU on random SPD") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = 20;
  std::vector<double> B(static_cast<std::size_t>(n * n));
  for (auto &v : B) v = U(rng);
  // A = B^T B + I is SPD
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = (i == j) ? 1.0 : 0.0;
      for (int k = 0; k < n; ++k)
        s += B[static_cast<std::size_t>(k * n + i)] * B[static_cast<std::size_t>(k * n + j)];
      A[static_cast<std::size_t>(i * n + j)] = s;
    }
  std::vector<double> b(static_cast<std::size_t>(n));
  for (auto &v : b) v = U(rng);

  auto x_cg = cg_solve(dense_to_csr(A, n), b, {1e-13, 1000, false});
  auto x_lu = direct_solve_dense(A, b);
  for (int i = 0; i < n; ++i)
    CHECK_THAT(x_cg[static_cast<std::size_t>(i)],
               Catch::Matchers::WithinAbs(x_lu[static_cast<std::size_t>(i)], 1e-10));
}

TEST_CASE("cg rejects indefinite matrices") {
  auto A = dense_to_csr({1, 0, 0, -1}, 2);
  CHECK_THROWS_AS(cg_solve(A, {1, 1}), SolveError);
}

TEST_CASE("cg converged residual meets tolerance") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const int n = 10;
  std::vector<double> B(static_cast<std::size_t>(n * n));
  for (auto &v : B) v = U(rng);
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = (i == j) ? 2.0 : 0.0;
      for (int k = 0; k < n; ++k)
        s += B[static_cast<std::size_t>(k * n + i)] * B[static_cast<std::size_t>(k * n + j)];
      A[static_cast<std::size_t>(i * n + j)] = s;
    }
  std::vector<double> b(static_cast<std::size_t>(n), 1.0);
  auto M = dense_to_csr(A, n);
  auto x = cg_solve(M, b, {1e-9, 500, false});
  CHECK(residual(M, x, b) <= 1e-9 * linsolve::norm(b) * 1.0001);
}

TEST_CASE("bicgstab agrees with cg on SPD input") {
  auto A = dense_to_csr({4, 1, 0, 1, 3, 1, 0, 1, 5}, 3);
  std::vector<double> b{1, -2, 0.5};
  auto x1 = cg_solve(A, b, {1e-12, 200, false});
  auto x2 = bicgstab_solve(A, b, {1e-12, 200, false});
  for (int i = 0; i < 3; ++i)
    CHECK_THAT(x1[static_cast<std::size_t>(i)],
               Catch::Matchers::WithinAbs(x2[static_cast<std::size_t>(i)], 1e-10));
}

TEST_CASE("bicgstab solves a convection-dominated 1D system") {
  // 1D convection-diffusion stiffness at Pe_h = 6.25: v=1, alpha=0.01, h=1/8,
  // assembled on interior nodes of [0,1] with homogeneous Dirichlet ends.
  const int cells = 8;
  const double v = 1.0, alpha = 0.01, h = 1.0 / cells;
  const int n = cells - 1;
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  auto add = [&](int i, int j, double val) {
    if (i >= 0 && i < n && j >= 0 && j < n) A[static_cast<std::size_t>(i * n + j)] += val;
  };
  for (int e = 0; e < cells; ++e) {
    int a = e - 1, b2 = e;  // interior dof indices of the element's two nodes
    add(a, a, -v / 2 + alpha / h);
    add(a, b2, v / 2 - alpha / h);
    add(b2, a, -v / 2 - alpha / h);
    add(b2, b2, v / 2 + alpha / h);
  }
  std::vector<double> rhs(static_cast<std::size_t>(n), h);
  auto M = dense_to_csr(A, n);
  auto x = bicgstab_solve(M, rhs, {1e-10, 500, false});
  auto x_lu = direct_solve_dense(A, rhs);
  for (int i = 0; i < n; ++i)
    CHECK_THAT(x[static_cast<std::size_t>(i)],
               Catch::Matchers::WithinAbs(x_lu[static_cast<std::size_t>(i)], 1e-8));
  CHECK(residual(M, x, rhs) <= 1e-10 * linsolve::norm(rhs) * 1.0001);
}

TEST_CASE("bicgstab reports breakdown on singular input") {
  auto A = dense_to_csr({1, 1, 1, 1}, 2);
  CHECK_THROWS_AS(bicgstab_solve(A, {1, 2}, {1e-12, 50, false}), SolveError);
}

TEST_CASE("direct solve") {
  CHECK(direct_solve_dense({1, 0, 0, 1}, {5, -3}) == std::vector<double>{5, -3});

  // Hilbert 4x4 against its exact rational inverse applied to b
  std::vector<double> H(16);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) H[static_cast<std::size_t>(i * 4 + j)] = 1.0 / (i + j + 1);
  double Hinv[16] = {16,   -120,  240,   -140,  -120, 1200,  -2700, 1680,
                     240,  -2700, 6480,  -4200, -140, 1680,  -4200, 2800};
  std::vector<double> b{1, 2, -1, 0.5};
  std::vector<double> expected(4, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      expected[static_cast<std::size_t>(i)] += Hinv[i * 4 + j] * b[static_cast<std::size_t>(j)];
  auto x = direct_solve_dense(H, b);
  for (int i = 0; i < 4; ++i)
    CHECK_THAT(x[static_cast<std::size_t>(i)],
               Catch::Matchers::WithinRel(expected[static_cast<std::size_t>(i)], 1e-9));

  // permuted diagonal exercises pivoting
  auto xp = direct_solve_dense({0, 2, 3, 0}, {4, 9});
  CHECK_THAT(xp[0], Catch::Matchers::WithinAbs(3.0, 1e-14));
  CHECK_THAT(xp[1], Catch::Matchers::WithinAbs(2.0, 1e-14));

  CHECK_THROWS_AS(direct_solve_dense({1, 1, 1, 1}, {1, 2}), Error);
}
