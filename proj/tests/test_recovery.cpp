#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "wbsc/fft.hpp"
#include "wbsc/recovery.hpp"
#include "wbsc/rng.hpp"

using namespace wbsc;

namespace {

std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(dist(engine), dist(engine));
  return v;
}

struct SparseInstance {
  std::vector<cplx> truth;
  std::vector<std::size_t> support;
  RecoveryOperator op;
  MeasurementRecord record;
};

SparseInstance make_sparse_instance(std::size_t n, std::size_t m,
                                    std::size_t k, SensingKind kind,
                                    std::uint64_t seed,
                                    std::vector<cplx> gains = {}) {
  std::mt19937_64 engine(seed);
  std::vector<std::size_t> bins(n);
  std::iota(bins.begin(), bins.end(), std::size_t{0});
  std::shuffle(bins.begin(), bins.end(), engine);
  bins.resize(k);
  std::sort(bins.begin(), bins.end());

  std::vector<cplx> truth(n, cplx{0.0, 0.0});
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * 3.141592653589793);
  for (auto b : bins) {
    const double a = mag(engine);
    const double p = phase(engine);
    truth[b] = a * cplx(std::cos(p), std::sin(p));
  }

  SparseInstance inst{
      std::move(truth), std::move(bins),
      RecoveryOperator(SensingMatrix::build(m, n, kind, seed + 1),
                       std::move(gains)),
      {}};
  inst.record.z = inst.op.forward(inst.truth);
  inst.record.sample_rate_hz = static_cast<double>(n);
  return inst;
}

bool support_recovered(const std::vector<cplx>& s_hat,
                       const std::vector<std::size_t>& support) {
  std::vector<std::size_t> order(s_hat.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(),
                    order.begin() + static_cast<long>(support.size()),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return std::norm(s_hat[a]) > std::norm(s_hat[b]);
                    });
  std::vector<std::size_t> top(order.begin(),
                               order.begin() +
                                   static_cast<long>(support.size()));
  std::sort(top.begin(), top.end());
  return top == support;
}

double l2_error(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("operator adjoint passes the inner-product test to 1e-10") {
  for (const auto kind :
       {SensingKind::kRandomSubsample, SensingKind::kBernoulli}) {
    for (bool random_gains : {false, true}) {
      const std::size_t n = 128;
      const std::size_t m = 48;
      std::vector<cplx> gains;
      if (random_gains) {
        gains = random_vector(n, 404);
        for (auto& g : gains) g += cplx{2.0, 0.0};  // keep well conditioned
      }
      const RecoveryOperator op(SensingMatrix::build(m, n, kind, 31), gains);
      const auto x = random_vector(n, 7);
      const auto y = random_vector(m, 8);
      const auto ax = op.forward(x);
      const auto aty = op.adjoint(y);
      // <y, A x> must equal <A^H y, x>
      cplx lhs{0.0, 0.0};
      cplx rhs{0.0, 0.0};
      for (std::size_t i = 0; i < m; ++i) lhs += std::conj(y[i]) * ax[i];
      for (std::size_t i = 0; i < n; ++i) rhs += std::conj(aty[i]) * x[i];
      CHECK(std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)) < 1e-10);
    }
  }
}

TEST_CASE("BP recovers a 1-sparse noiseless spectrum at M = N/2") {
  auto inst = make_sparse_instance(256, 128, 1,
                                   SensingKind::kRandomSubsample, 11);
  SolverOptions opts;
  opts.tol = 1e-9;
  opts.max_iter = 4000;
  const auto est = solve_bp(inst.record, inst.op, opts);
  CHECK(est.converged);
  CHECK(support_recovered(est.s_hat, inst.support));
  CHECK(l2_error(est.s_hat, inst.truth) < 1e-6);
}

TEST_CASE("BP at M = N with unit channel equals the forward unitary DFT") {
  const std::size_t n = 256;
  const auto r = random_vector(n, 21);
  RecoveryOperator op(SensingMatrix::build(n, n,
                                           SensingKind::kRandomSubsample, 3));
  MeasurementRecord rec;
  rec.z = r;
  rec.sample_rate_hz = static_cast<double>(n);
  SolverOptions opts;
  opts.tol = 1e-10;
  opts.max_iter = 500;
  const auto est = solve_bp(rec, op, opts);
  const auto expected = dft(r, FftDirection::kForward);
  CHECK(est.converged);
  CHECK(l2_error(est.s_hat, expected) < 1e-9);
}

TEST_CASE("BP support recovery: k=5, N=256, M=128, Bernoulli, 20 seeds") {
  int hits = 0;
  SolverOptions opts;
  opts.tol = 1e-8;
  opts.max_iter = 3000;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst =
        make_sparse_instance(256, 128, 5, SensingKind::kBernoulli, 100 + seed);
    const auto est = solve_bp(inst.record, inst.op, opts);
    if (support_recovered(est.s_hat, inst.support) &&
        l2_error(est.s_hat, inst.truth) < 1e-6) {
      ++hits;
    }
  }
  CHECK(hits >= 19);
}

TEST_CASE("converged BP estimates satisfy the equality constraint to tol") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    auto inst = make_sparse_instance(128, 64, 4,
                                     SensingKind::kRandomSubsample, seed);
    SolverOptions opts;
    opts.tol = 1e-7;
    opts.max_iter = 3000;
    const auto est = solve_bp(inst.record, inst.op, opts);
    REQUIRE(est.converged);
    const double z_norm = l2_norm(inst.record.z);
    CHECK(est.residual_norm <= opts.tol * z_norm);

    // stored residual matches an independent recomputation
    const auto as = inst.op.forward(est.s_hat);
    CHECK(std::abs(l2_error(as, inst.record.z) - est.residual_norm) < 1e-9);
  }
}

TEST_CASE("LASSO with vanishing data weight returns the zero spectrum") {
  auto inst = make_sparse_instance(128, 64, 3,
                                   SensingKind::kRandomSubsample, 55);
  SolverOptions opts;
  opts.lambda = 1e-12;
  opts.tol = 1e-8;
  opts.max_iter = 500;
  const auto est = solve_lasso(inst.record, inst.op, opts);
  CHECK(l2_norm(est.s_hat) < 1e-6);
}

TEST_CASE("LASSO with a large data weight approaches the BP solution") {
  auto inst = make_sparse_instance(128, 64, 3,
                                   SensingKind::kRandomSubsample, 66);
  SolverOptions bp_opts;
  bp_opts.tol = 1e-9;
  bp_opts.max_iter = 4000;
  const auto bp = solve_bp(inst.record, inst.op, bp_opts);

  SolverOptions lasso_opts;
  lasso_opts.lambda = 1e7;
  lasso_opts.tol = 1e-9;
  lasso_opts.max_iter = 8000;
  const auto lasso = solve_lasso(inst.record, inst.op, lasso_opts);
  CHECK(l2_error(lasso.s_hat, bp.s_hat) < 1e-3);
}

TEST_CASE("LASSO zero-solution threshold matches the subgradient bound") {
  auto inst = make_sparse_instance(64, 32, 2,
                                   SensingKind::kRandomSubsample, 77);
  const auto atz = inst.op.adjoint(inst.record.z);
  double max_mag = 0.0;
  for (const auto& v : atz) max_mag = std::max(max_mag, std::abs(v));
  // zero is optimal iff 2*lambda*||A^H z||_inf <= 1
  const double lambda_star = 1.0 / (2.0 * max_mag);
  SolverOptions opts;
  opts.tol = 1e-9;
  opts.max_iter = 4000;

  opts.lambda = 0.8 * lambda_star;
  const auto below = solve_lasso(inst.record, inst.op, opts);
  CHECK(l2_norm(below.s_hat) < 1e-7);

  opts.lambda = 1.3 * lambda_star;
  const auto above = solve_lasso(inst.record, inst.op, opts);
  CHECK(l2_norm(above.s_hat) > 1e-4);
}

TEST_CASE("OMP nails a 1-sparse instance in one iteration") {
  auto inst = make_sparse_instance(256, 128, 1,
                                   SensingKind::kRandomSubsample, 88);
  SolverOptions opts;
  opts.omp_sparsity = 8;
  opts.tol = 1e-12;
  const auto est = solve_omp(inst.record, inst.op, opts);
  CHECK(est.iterations == 1);
  CHECK(support_recovered(est.s_hat, inst.support));
  CHECK(est.residual_norm < 1e-10);
}

TEST_CASE("OMP with orthonormal columns recovers k-sparse in k steps") {
  // M = N subsampling makes A unitary, so the greedy pass is exact.
  auto inst = make_sparse_instance(128, 128, 6,
                                   SensingKind::kRandomSubsample, 99);
  SolverOptions opts;
  opts.omp_sparsity = 6;
  opts.tol = 1e-12;
  const auto est = solve_omp(inst.record, inst.op, opts);
  CHECK(est.iterations == 6);
  CHECK(support_recovered(est.s_hat, inst.support));
  CHECK(l2_error(est.s_hat, inst.truth) < 1e-10);
}

TEST_CASE("OMP residual is non-increasing in the atom budget") {
  auto inst = make_sparse_instance(128, 64, 8, SensingKind::kBernoulli, 111);
  SolverOptions opts;
  opts.tol = 1e-14;
  double prev = l2_norm(inst.record.z);
  for (int k = 1; k <= 12; ++k) {
    opts.omp_sparsity = k;
    const auto est = solve_omp(inst.record, inst.op, opts);
    CHECK(est.residual_norm <= prev + 1e-10);
    prev = est.residual_norm;
  }
}

TEST_CASE("all three solvers agree on noiseless well-conditioned instances") {
  auto inst = make_sparse_instance(128, 96, 3,
                                   SensingKind::kRandomSubsample, 123);
  SolverOptions bp_opts;
  bp_opts.tol = 1e-10;
  bp_opts.max_iter = 6000;
  const auto bp = solve_bp(inst.record, inst.op, bp_opts);

  SolverOptions lasso_opts = bp_opts;
  lasso_opts.lambda = 1e8;
  lasso_opts.max_iter = 8000;
  const auto lasso = solve_lasso(inst.record, inst.op, lasso_opts);

  SolverOptions omp_opts;
  omp_opts.omp_sparsity = 3;
  omp_opts.tol = 1e-12;
  const auto omp = solve_omp(inst.record, inst.op, omp_opts);

  const double scale = l2_norm(inst.truth);
  CHECK(l2_error(bp.s_hat, inst.truth) / scale < 1e-4);
  CHECK(l2_error(lasso.s_hat, inst.truth) / scale < 1e-4);
  CHECK(l2_error(omp.s_hat, inst.truth) / scale < 1e-4);
}

TEST_CASE("recovery error degrades as the compression ratio drops") {
  // k = 40 at N = 256 sits past the recovery phase transition for M = 128
  // but not for M = 230, so the mean error ordering is unambiguous
  const std::size_t n = 256;
  double err_half = 0.0;
  double err_most = 0.0;
  SolverOptions opts;
  opts.tol = 1e-7;
  opts.max_iter = 2000;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const double ratio : {0.5, 0.9}) {
      const auto m = static_cast<std::size_t>(ratio * static_cast<double>(n));
      auto inst = make_sparse_instance(n, m, 40,
                                       SensingKind::kRandomSubsample,
                                       7000 + seed);
      const auto est = solve_bp(inst.record, inst.op, opts);
      const double err = l2_error(est.s_hat, inst.truth);
      (ratio == 0.5 ? err_half : err_most) += err;
    }
  }
  err_half /= 50.0;
  err_most /= 50.0;
  CHECK(err_half >= err_most);
}
