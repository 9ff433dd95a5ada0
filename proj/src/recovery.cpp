#include "wbsc/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "wbsc/fft.hpp"

namespace wbsc {

namespace {

constexpr double kTiny = 1e-300;

std::vector<cplx> shrink(std::vector<cplx> v, double kappa) {
  for (auto& x : v) {
    const double mag = std::abs(x);
    x = (mag > kappa) ? x * ((mag - kappa) / mag) : cplx{0.0, 0.0};
  }
  return v;
}

double norm_diff(std::span<const cplx> a, std::span<const cplx> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::kBp:
      return "bp";
    case SolverKind::kLasso:
      return "lasso";
    case SolverKind::kOmp:
      return "omp";
  }
  return "?";
}

double l2_norm(std::span<const cplx> v) {
  double acc = 0.0;
  for (const auto& x : v) acc += std::norm(x);
  return std::sqrt(acc);
}

struct RecoveryOperator::GramChol {
  Eigen::LLT<Eigen::MatrixXd> llt;
};

RecoveryOperator::RecoveryOperator(SensingMatrix sensing,
                                   std::vector<cplx> channel_gains)
    : sensing_(std::move(sensing)), gains_(std::move(channel_gains)) {
  const std::size_t n = sensing_.cols();
  if (gains_.empty()) {
    gains_.assign(n, cplx{1.0, 0.0});
  }
  if (gains_.size() != n) {
    throw std::invalid_argument("RecoveryOperator: gains length != N");
  }
  if (!Fft::is_power_of_two(n)) {
    throw std::invalid_argument("RecoveryOperator: N must be a power of two");
  }
  for (const auto& g : gains_) {
    if (std::abs(std::norm(g) - 1.0) > 1e-14) {
      unit_magnitude_ = false;
      break;
    }
  }
  if (unit_magnitude_ &&
      sensing_.kind() == SensingKind::kRandomSubsample) {
    identity_gram_ = true;  // A A^H = Theta Theta^T = I exactly
  } else if (unit_magnitude_ && sensing_.kind() == SensingKind::kBernoulli) {
    const std::size_t m = sensing_.rows();
    Eigen::MatrixXd gram(m, m);
    const auto& d = sensing_.bernoulli_entries();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i; j < m; ++j) {
        double acc = 0.0;
        const double* ri = d.data() + i * n;
        const double* rj = d.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) acc += ri[k] * rj[k];
        gram(static_cast<long>(i), static_cast<long>(j)) = acc;
        gram(static_cast<long>(j), static_cast<long>(i)) = acc;
      }
    }
    auto chol = std::make_shared<GramChol>();
    chol->llt.compute(gram);
    if (chol->llt.info() != Eigen::Success) {
      throw std::runtime_error("RecoveryOperator: Gram matrix not SPD");
    }
    chol_ = std::move(chol);
  }
}

std::vector<cplx> RecoveryOperator::forward(
    std::span<const cplx> spectrum) const {
  if (spectrum.size() != cols()) {
    throw std::invalid_argument("RecoveryOperator::forward: bad length");
  }
  std::vector<cplx> t(spectrum.begin(), spectrum.end());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] *= gains_[i];
  fft_plan(t.size()).inverse(std::span<cplx>(t));
  return sensing_.apply(t);
}

std::vector<cplx> RecoveryOperator::adjoint(
    std::span<const cplx> measurements) const {
  if (measurements.size() != rows()) {
    throw std::invalid_argument("RecoveryOperator::adjoint: bad length");
  }
  std::vector<cplx> t = sensing_.adjoint(measurements);
  fft_plan(t.size()).forward(std::span<cplx>(t));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] *= std::conj(gains_[i]);
  return t;
}

std::vector<cplx> RecoveryOperator::gram_solve(std::span<const cplx> r) const {
  if (r.size() != rows()) {
    throw std::invalid_argument("RecoveryOperator::gram_solve: bad length");
  }
  if (identity_gram_) {
    return {r.begin(), r.end()};
  }
  if (chol_) {
    const std::size_t m = rows();
    Eigen::VectorXd re(m), im(m);
    for (std::size_t i = 0; i < m; ++i) {
      re(static_cast<long>(i)) = r[i].real();
      im(static_cast<long>(i)) = r[i].imag();
    }
    const Eigen::VectorXd sre = chol_->llt.solve(re);
    const Eigen::VectorXd sim = chol_->llt.solve(im);
    std::vector<cplx> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = cplx(sre(static_cast<long>(i)), sim(static_cast<long>(i)));
    }
    return out;
  }
  // Conjugate gradient on A A^H; spectra cluster tightly so few iterations
  // are needed in practice.
  const std::size_t m = rows();
  std::vector<cplx> y(m, cplx{0.0, 0.0});
  std::vector<cplx> res(r.begin(), r.end());
  std::vector<cplx> p = res;
  double rs_old = 0.0;
  for (const auto& v : res) rs_old += std::norm(v);
  const double target = 1e-24 * std::max(rs_old, kTiny);
  for (int it = 0; it < 200 && rs_old > target; ++it) {
    const std::vector<cplx> ap = forward(adjoint(p));
    cplx denom{0.0, 0.0};
    for (std::size_t i = 0; i < m; ++i) denom += std::conj(p[i]) * ap[i];
    const double d = denom.real();
    if (d <= 0.0) break;
    const double alpha = rs_old / d;
    for (std::size_t i = 0; i < m; ++i) {
      y[i] += alpha * p[i];
      res[i] -= alpha * ap[i];
    }
    double rs_new = 0.0;
    for (const auto& v : res) rs_new += std::norm(v);
    const double beta = rs_new / rs_old;
    for (std::size_t i = 0; i < m; ++i) p[i] = res[i] + beta * p[i];
    rs_old = rs_new;
  }
  return y;
}

namespace {

struct AdmmState {
  std::vector<cplx> s;
  int iterations = 0;
  bool converged = false;
};

// Equality-constrained l1 minimization: min ||s||_1 s.t. A s = z_unit,
// where z_unit has unit norm (the caller rescales afterwards).
AdmmState admm_bp(const RecoveryOperator& op, const std::vector<cplx>& z_unit,
                  double tol, int max_iter) {
  const std::size_t n = op.cols();
  AdmmState st;
  st.s.assign(n, cplx{0.0, 0.0});
  std::vector<cplx> x(n, cplx{0.0, 0.0});
  std::vector<cplx> u(n, cplx{0.0, 0.0});
  double rho = 1.0;
  for (int it = 1; it <= max_iter; ++it) {
    // x-update: project s - u onto {x : A x = z}
    std::vector<cplx> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = st.s[i] - u[i];
    std::vector<cplx> av = op.forward(v);
    for (std::size_t i = 0; i < av.size(); ++i) av[i] -= z_unit[i];
    const std::vector<cplx> y = op.gram_solve(av);
    const std::vector<cplx> corr = op.adjoint(y);
    for (std::size_t i = 0; i < n; ++i) x[i] = v[i] - corr[i];

    // s-update and dual update
    std::vector<cplx> s_old = std::move(st.s);
    std::vector<cplx> xu(n);
    for (std::size_t i = 0; i < n; ++i) xu[i] = x[i] + u[i];
    st.s = shrink(std::move(xu), 1.0 / rho);
    for (std::size_t i = 0; i < n; ++i) u[i] += x[i] - st.s[i];

    const double r_pri = norm_diff(x, st.s);
    const double r_dua = rho * norm_diff(st.s, s_old);
    st.iterations = it;
    const double x_norm = l2_norm(x);
    const double s_norm = l2_norm(st.s);
    const double eps_pri = tol * std::max({x_norm, s_norm, 1.0});
    const double eps_dua = tol * std::max(rho * l2_norm(u), 1.0);
    if (r_pri <= eps_pri && r_dua <= eps_dua) {
      // the returned iterate is s, so convergence additionally demands
      // that s itself meets the equality constraint at tol (||z|| = 1 here)
      std::vector<cplx> as = op.forward(st.s);
      for (std::size_t i = 0; i < as.size(); ++i) as[i] -= z_unit[i];
      if (l2_norm(as) <= tol) {
        st.converged = true;
        break;
      }
    }
    if (r_pri > 10.0 * r_dua && rho < 1e6) {
      rho *= 2.0;
      for (auto& ui : u) ui *= 0.5;
    } else if (r_dua > 10.0 * r_pri && rho > 1e-6) {
      rho *= 0.5;
      for (auto& ui : u) ui *= 2.0;
    }
  }
  return st;
}

}  // namespace

SpectrumEstimate solve_bp(const MeasurementRecord& z,
                          const RecoveryOperator& op,
                          const SolverOptions& opts) {
  if (z.z.size() != op.rows()) {
    throw std::invalid_argument("solve_bp: measurement dimension mismatch");
  }
  if (opts.tol <= 0.0 || opts.max_iter < 1) {
    throw std::invalid_argument("solve_bp: invalid solver options");
  }
  SpectrumEstimate est;
  est.solver = SolverKind::kBp;
  est.bin_hz = z.sample_rate_hz / static_cast<double>(op.cols());
  const double z_norm = l2_norm(z.z);
  if (z_norm <= 0.0) {
    est.s_hat.assign(op.cols(), cplx{0.0, 0.0});
    est.converged = true;
    return est;
  }
  // BP is positively homogeneous; solving at unit measurement norm makes
  // the penalty parameter scale-free.
  std::vector<cplx> z_unit(z.z);
  for (auto& v : z_unit) v /= z_norm;
  AdmmState st = admm_bp(op, z_unit, opts.tol, opts.max_iter);
  est.s_hat = std::move(st.s);
  for (auto& v : est.s_hat) v *= z_norm;
  est.iterations = st.iterations;
  const std::vector<cplx> as = op.forward(est.s_hat);
  est.residual_norm = norm_diff(as, z.z);
  est.converged = st.converged && est.residual_norm <= opts.tol * z_norm;
  return est;
}

SpectrumEstimate solve_lasso(const MeasurementRecord& z,
                             const RecoveryOperator& op,
                             const SolverOptions& opts) {
  if (z.z.size() != op.rows()) {
    throw std::invalid_argument("solve_lasso: measurement dimension mismatch");
  }
  if (opts.tol <= 0.0 || opts.max_iter < 1) {
    throw std::invalid_argument("solve_lasso: invalid solver options");
  }
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();
  SpectrumEstimate est;
  est.solver = SolverKind::kLasso;
  est.bin_hz = z.sample_rate_hz / static_cast<double>(n);
  const double z_norm = l2_norm(z.z);
  const double lambda =
      (opts.lambda < 0.0) ? 10.0 / std::max(z_norm * z_norm, kTiny)
                          : opts.lambda;
  if (z_norm <= 0.0 || lambda == 0.0) {
    // the l1 term alone is minimized by the zero spectrum
    est.s_hat.assign(n, cplx{0.0, 0.0});
    est.residual_norm = z_norm;
    est.converged = true;
    return est;
  }

  const std::vector<cplx> atz = op.adjoint(z.z);
  std::vector<cplx> s(n, cplx{0.0, 0.0});
  std::vector<cplx> x(n, cplx{0.0, 0.0});
  std::vector<cplx> u(n, cplx{0.0, 0.0});
  double rho = std::max(1.0, 2.0 * lambda);
  bool converged = false;
  int iterations = 0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    // x-update: (2*lambda*A^H A + rho I) x = 2*lambda*A^H z + rho (s - u)
    std::vector<cplx> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      rhs[i] = 2.0 * lambda * atz[i] + rho * (s[i] - u[i]);
    }
    auto normal_op = [&](const std::vector<cplx>& v) {
      std::vector<cplx> av = op.forward(v);
      std::vector<cplx> out = op.adjoint(av);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = 2.0 * lambda * out[i] + rho * v[i];
      }
      return out;
    };
    {
      // warm-started conjugate gradient
      std::vector<cplx> res = normal_op(x);
      for (std::size_t i = 0; i < n; ++i) res[i] = rhs[i] - res[i];
      std::vector<cplx> p = res;
      double rs_old = 0.0;
      for (const auto& v : res) rs_old += std::norm(v);
      double rhs_sq = 0.0;
      for (const auto& v : rhs) rhs_sq += std::norm(v);
      const double target = 1e-20 * std::max(rhs_sq, kTiny);
      for (int cg = 0; cg < 100 && rs_old > target; ++cg) {
        const std::vector<cplx> ap = normal_op(p);
        cplx denom{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) denom += std::conj(p[i]) * ap[i];
        if (denom.real() <= 0.0) break;
        const double alpha = rs_old / denom.real();
        for (std::size_t i = 0; i < n; ++i) {
          x[i] += alpha * p[i];
          res[i] -= alpha * ap[i];
        }
        double rs_new = 0.0;
        for (const auto& v : res) rs_new += std::norm(v);
        const double beta = rs_new / rs_old;
        for (std::size_t i = 0; i < n; ++i) p[i] = res[i] + beta * p[i];
        rs_old = rs_new;
      }
    }

    std::vector<cplx> s_old = std::move(s);
    std::vector<cplx> xu(n);
    for (std::size_t i = 0; i < n; ++i) xu[i] = x[i] + u[i];
    s = shrink(std::move(xu), 1.0 / rho);
    for (std::size_t i = 0; i < n; ++i) u[i] += x[i] - s[i];

    const double r_pri = norm_diff(x, s);
    const double r_dua = rho * norm_diff(s, s_old);
    iterations = it;
    const double ref = std::max({l2_norm(x), l2_norm(s), 1e-12});
    if (r_pri <= opts.tol * ref &&
        r_dua <= opts.tol * std::max(rho * l2_norm(u), 1e-12)) {
      converged = true;
      break;
    }
    if (r_pri > 10.0 * r_dua && rho < 1e9) {
      rho *= 2.0;
      for (auto& ui : u) ui *= 0.5;
    } else if (r_dua > 10.0 * r_pri && rho > 1e-9) {
      rho *= 0.5;
      for (auto& ui : u) ui *= 2.0;
    }
  }
  (void)m;
  est.s_hat = std::move(s);
  est.iterations = iterations;
  est.converged = converged;
  const std::vector<cplx> as = op.forward(est.s_hat);
  est.residual_norm = norm_diff(as, z.z);
  return est;
}

SpectrumEstimate solve_omp(const MeasurementRecord& z,
                           const RecoveryOperator& op,
                           const SolverOptions& opts) {
  if (z.z.size() != op.rows()) {
    throw std::invalid_argument("solve_omp: measurement dimension mismatch");
  }
  if (opts.omp_sparsity < 1) {
    throw std::invalid_argument("solve_omp: omp_sparsity must be >= 1");
  }
  const std::size_t n = op.cols();
  const std::size_t m = op.rows();
  const std::size_t k_max =
      std::min<std::size_t>(static_cast<std::size_t>(opts.omp_sparsity),
                            std::min(m, n));
  SpectrumEstimate est;
  est.solver = SolverKind::kOmp;
  est.bin_hz = z.sample_rate_hz / static_cast<double>(n);
  const double z_norm = l2_norm(z.z);
  est.s_hat.assign(n, cplx{0.0, 0.0});
  if (z_norm <= 0.0) {
    est.converged = true;
    return est;
  }

  Eigen::VectorXcd zvec(m);
  for (std::size_t i = 0; i < m; ++i) zvec(static_cast<long>(i)) = z.z[i];
  Eigen::MatrixXcd cols(m, 0);
  std::vector<std::size_t> support;
  std::vector<char> in_support(n, 0);
  std::vector<cplx> residual(z.z);
  Eigen::VectorXcd beta;

  while (support.size() < k_max && l2_norm(residual) > opts.tol * z_norm) {
    const std::vector<cplx> corr = op.adjoint(residual);
    std::size_t best = n;
    double best_mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_support[i]) continue;
      const double mag = std::abs(corr[i]);
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    if (best == n || best_mag <= 0.0) break;  // no atom can reduce residual
    in_support[best] = 1;
    support.push_back(best);

    std::vector<cplx> e(n, cplx{0.0, 0.0});
    e[best] = cplx{1.0, 0.0};
    const std::vector<cplx> col = op.forward(e);
    cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
    for (std::size_t i = 0; i < m; ++i) {
      cols(static_cast<long>(i), cols.cols() - 1) = col[i];
    }
    beta = cols.householderQr().solve(zvec);
    const Eigen::VectorXcd r = zvec - cols * beta;
    for (std::size_t i = 0; i < m; ++i) residual[i] = r(static_cast<long>(i));
  }

  for (std::size_t j = 0; j < support.size(); ++j) {
    est.s_hat[support[j]] = beta(static_cast<long>(j));
  }
  est.iterations = static_cast<int>(support.size());
  est.residual_norm = l2_norm(residual);
  est.converged = true;
  return est;
}

SpectrumEstimate solve(SolverKind kind, const MeasurementRecord& z,
                       const RecoveryOperator& op, const SolverOptions& opts) {
  switch (kind) {
    case SolverKind::kBp:
      return solve_bp(z, op, opts);
    case SolverKind::kLasso:
      return solve_lasso(z, op, opts);
    case SolverKind::kOmp:
      return solve_omp(z, op, opts);
  }
  throw std::invalid_argument("unknown solver kind");
}

}  // namespace wbsc
