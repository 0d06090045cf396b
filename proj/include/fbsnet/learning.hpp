#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fbsnet/dynamics.hpp"
#include "fbsnet/regularizer.hpp"
#include "fbsnet/types.hpp"

namespace fbsnet {

/// Locally Lipschitz outer map applied to the averaged parameter powers.
struct Psi {
  enum class Kind { Identity, Scaled } kind = Kind::Identity;
  double c = 1.0;

  double operator()(double s) const { return kind == Kind::Identity ? s : c * s; }
  double derivative(double /*s*/) const { return kind == Kind::Identity ? 1.0 : c; }
};

struct ObjectiveConfig {
  double beta1 = 1e-7;
  double beta2 = 1e-7;
  double beta3 = 1e-7;
  double pnorm = 2.0;
  Psi psi;

  void validate() const;
};

enum class AInit { OrthTranspose, Given };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  double r0 = 1e-3;
  double momentum = 0.9;
  /// Per-group learning rate r0 * N^e for (A, alpha, lambda).
  int lr_exp_A = 1;
  int lr_exp_alpha = 3;
  int lr_exp_lambda = 1;
  std::uint64_t seed = 1;
  double alpha_max = 1e6;
  double lambda_max = 1e6;
  double alpha0 = 4.0;
  double lambda0 = 0.05;
  AInit A_init = AInit::OrthTranspose;
  /// Worker cap, 0 = FBS_UNROLL_THREADS or 1. Results do not depend on it.
  std::size_t threads = 0;

  void validate() const;
  double rate_A(std::size_t N) const;
  double rate_alpha(std::size_t N) const;
  double rate_lambda(std::size_t N) const;
};

struct GenMeta {
  Mat A_true;
  double sparsity = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

/// Samples (b_j, y_j) with initial states x0_j. The first train_count
/// samples form the training split, the rest the validation split.
struct Dataset {
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::vector<Vec> b;
  std::vector<Vec> y;
  std::vector<Vec> x0;
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  GenMeta meta;

  std::size_t size() const { return b.size(); }
  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> val_indices() const;
  void validate() const;
};

struct Gradients {
  std::vector<Mat> dA;
  std::vector<double> dalpha;
  std::vector<double> dlambda;

  static Gradients zeros_like(const NetworkParams& p);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

struct RegTerms {
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
};

/// 0.5 |x - y|^2
double loss(const Vec& x, const Vec& y);

/// psi((1/N) sum |A_k|_F^p), psi((1/N) sum |alpha_k|^p), psi((1/N) sum |lambda_k|^p).
RegTerms reg_terms(const NetworkParams& p, const ObjectiveConfig& cfg);

/// Mean terminal data loss over the given samples (no regularizer terms).
double data_loss(const NetworkParams& p, const Dataset& data, std::span<const std::size_t> idx,
                 const Regularizer& reg, std::size_t threads = 1);

double objective_discrete(const NetworkParams& p, const Dataset& data,
                          std::span<const std::size_t> idx, const Regularizer& reg,
                          const ObjectiveConfig& cfg, std::size_t threads = 1);

/// Objective of the continuous-time problem: terminal states from the
/// fine-grid solver at depth N_ref (rounded up to a multiple of u.grid()),
/// regularizers as exact cell sums over the piecewise-constant control.
double objective_continuous(const Control& u, const Dataset& data,
                            std::span<const std::size_t> idx, const Regularizer& reg,
                            const ObjectiveConfig& cfg, std::size_t N_ref = kDefaultNRef,
                            std::size_t threads = 1);

struct ValueAndGrad {
  double value = 0.0;
  Gradients grads;
};

/// Objective value and exact reverse-mode gradient over the batch.
///
/// Samples are processed in fixed chunks; chunk results are reduced in
/// index order, so the output does not depend on `threads`.
ValueAndGrad grad_objective(const NetworkParams& p, const Dataset& batch_data,
                            std::span<const std::size_t> idx, const Regularizer& reg,
                            const ObjectiveConfig& cfg, std::size_t threads = 1);

struct CurvePoint {
  std::size_t epoch = 0;
  double train_objective = 0.0;
  double train_data_loss = 0.0;
  double val_data_loss = 0.0;
};

struct TrainResult {
  NetworkParams params;
  std::vector<CurvePoint> curve;
};

/// Raised when the training objective stops being finite.
class DivergenceError : public NumericError {
 public:
  DivergenceError(std::size_t epoch, std::size_t batch, const std::string& detail);
  std::size_t epoch;
  std::size_t batch;
};

/// Called after every optimizer step with (epoch, batch, params).
using StepObserver = std::function<void(std::size_t, std::size_t, const NetworkParams&)>;

/// Momentum SGD with per-group rates and projection of alpha, lambda onto
/// [0, alpha_max] x [0, lambda_max] after each step.
TrainResult sgd_train(const NetworkParams& p0, const Dataset& data, const Regularizer& reg,
                      const ObjectiveConfig& ocfg, const TrainConfig& tcfg,
                      const StepObserver& observer = {});

/// Every layer's A is the transpose of the orthonormalized columns of
/// A_base^T (QR with nonnegative R diagonal) or A_base itself for
/// AInit::Given; alpha = alpha0 and lambda = lambda0.
NetworkParams init_params(std::size_t N, double T, const Mat& A_base, const TrainConfig& tcfg);

/// Deterministic permutation of 0..count-1 for the given (seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed,
                                           std::size_t epoch);

}  // namespace fbsnet
