#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "wbsc/sensing.hpp"

namespace wbsc {

enum class SolverKind { kBp, kLasso, kOmp };

const char* to_string(SolverKind kind);

// Composite measurement operator A = Theta * F^-1 * H applied matrix-free:
// spectrum -> (diagonal channel) -> inverse unitary DFT -> compressive rows.
// H is the diagonal of known per-bin channel gains (defaults to identity).
class RecoveryOperator {
 public:
  explicit RecoveryOperator(SensingMatrix sensing,
                            std::vector<cplx> channel_gains = {});

  std::size_t rows() const { return sensing_.rows(); }
  std::size_t cols() const { return sensing_.cols(); }
  const SensingMatrix& sensing() const { return sensing_; }
  const std::vector<cplx>& channel_gains() const { return gains_; }

  std::vector<cplx> forward(std::span<const cplx> spectrum) const;
  std::vector<cplx> adjoint(std::span<const cplx> measurements) const;

  // Solves (A A^H) y = r. Exact shortcut for one-hot rows with
  // unit-magnitude gains, Cholesky for Bernoulli, CG otherwise.
  std::vector<cplx> gram_solve(std::span<const cplx> r) const;

 private:
  struct GramChol;
  SensingMatrix sensing_;
  std::vector<cplx> gains_;
  bool unit_magnitude_ = true;
  bool identity_gram_ = false;
  std::shared_ptr<const GramChol> chol_;
};

struct SolverOptions {
  double lambda = -1.0;  // <0 selects the default 10/||z||^2
  double tol = 1e-6;
  int max_iter = 2000;
  int omp_sparsity = 32;
};

struct SpectrumEstimate {
  std::vector<cplx> s_hat;
  double residual_norm = 0.0;
  int iterations = 0;
  SolverKind solver = SolverKind::kBp;
  bool converged = false;
  double bin_hz = 0.0;
};

// Basis pursuit: min ||s||_1 s.t. A s = z, via ADMM with the projection
// x-update and magnitude soft-thresholding on the complex bins.
SpectrumEstimate solve_bp(const MeasurementRecord& z,
                          const RecoveryOperator& op,
                          const SolverOptions& opts = {});

// l1-regularized least squares with the weight on the data term:
// min ||s||_1 + lambda * ||z - A s||_2^2.
SpectrumEstimate solve_lasso(const MeasurementRecord& z,
                             const RecoveryOperator& op,
                             const SolverOptions& opts = {});

// Orthogonal matching pursuit with a least-squares refit per iteration.
SpectrumEstimate solve_omp(const MeasurementRecord& z,
                           const RecoveryOperator& op,
                           const SolverOptions& opts = {});

SpectrumEstimate solve(SolverKind kind, const MeasurementRecord& z,
                       const RecoveryOperator& op,
                       const SolverOptions& opts = {});

double l2_norm(std::span<const cplx> v);

}  // namespace wbsc
