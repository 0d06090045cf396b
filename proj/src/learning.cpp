#include "fbsnet/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "fbsnet/parallel.hpp"

namespace fbsnet {

namespace {

// Samples per chunk. Fixed so that chunk boundaries, and with them every
// floating-point summation order, are independent of the worker count.
constexpr std::size_t kChunk = 32;

std::size_t chunk_count(std::size_t n) { return (n + kChunk - 1) / kChunk; }

std::span<const std::size_t> chunk_of(std::span<const std::size_t> idx, std::size_t c) {
  const std::size_t lo = c * kChunk;
  const std::size_t hi = std::min(idx.size(), lo + kChunk);
  return idx.subspan(lo, hi - lo);
}

Mat gather(const std::vector<Vec>& src, std::span<const std::size_t> idx, Eigen::Index rows) {
  Mat out(rows, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = src[idx[c]];
  }
  return out;
}

// Forward pass over a chunk: X[k] holds the n x B layer states, Z[k] the
// pre-prox inputs of layer k.
struct ChunkForward {
  std::vector<Mat> X;
  std::vector<Mat> Z;
  Mat B;
};

ChunkForward forward_chunk(const NetworkParams& p, const Dataset& data,
                           std::span<const std::size_t> idx, const Regularizer& reg,
                           bool keep_states) {
  ChunkForward f;
  f.B = gather(data.b, idx, data.m);
  Mat X = gather(data.x0, idx, data.n);
  const double h = p.step();
  const std::size_t N = p.depth();
  if (keep_states) {
    f.X.reserve(N + 1);
    f.Z.reserve(N);
  }
  for (std::size_t k = 0; k < N; ++k) {
    const Mat& A = p.A[k];
    Mat Z = X - (h * p.alpha[k]) * (A.transpose() * (A * X - f.B));
    Mat next = prox_columns(reg, h * p.alpha[k] * p.lambda[k], Z);
    if (keep_states) {
      f.X.push_back(std::move(X));
      f.Z.push_back(std::move(Z));
    }
    X = std::move(next);
  }
  f.X.push_back(std::move(X));
  return f;
}

double chunk_loss_sum(const Mat& terminal, const Dataset& data, std::span<const std::size_t> idx) {
  double acc = 0.0;
  for (std::size_t c = 0; c < idx.size(); ++c) {
    acc += loss(terminal.col(static_cast<Eigen::Index>(c)), data.y[idx[c]]);
  }
  return acc;
}

void check_dims(const NetworkParams& p, const Dataset& data) {
  p.validate();
  if (p.rows() != data.m || p.cols() != data.n) {
    throw DimensionError("network layers are " + std::to_string(p.rows()) + "x" +
                         std::to_string(p.cols()) + " but the dataset has m=" +
                         std::to_string(data.m) + ", n=" + std::to_string(data.n));
  }
}

void check_indices(const Dataset& data, std::span<const std::size_t> idx, const char* what) {
  if (idx.empty()) throw DomainError(std::string(what) + ": empty sample slice");
  for (auto i : idx) {
    if (i >= data.size()) throw DomainError(std::string(what) + ": sample index out of range");
  }
}

// Pairwise reduction in index order.
template <typename T, typename Add>
T tree_reduce(std::vector<T> parts, Add add) {
  while (parts.size() > 1) {
    std::vector<T> next;
    next.reserve((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) {
      add(parts[i], parts[i + 1]);
      next.push_back(std::move(parts[i]));
    }
    if (parts.size() % 2 == 1) next.push_back(std::move(parts.back()));
    parts = std::move(next);
  }
  return std::move(parts.front());
}

double pow_p(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

// d/dx |x|^p for the scalar groups.
double dpow_p(double x, double p) {
  if (p == 2.0) return 2.0 * x;
  if (x == 0.0) return 0.0;
  return p * std::pow(std::abs(x), p - 1.0) * (x > 0.0 ? 1.0 : -1.0);
}

double mean_pow(const std::vector<double>& v, double p) {
  double acc = 0.0;
  for (double x : v) acc += pow_p(std::abs(x), p);
  return acc / static_cast<double>(v.size());
}

double regularizer_value(const RegTerms& h, const ObjectiveConfig& cfg) {
  return cfg.beta1 * h.h1 + cfg.beta2 * h.h2 + cfg.beta3 * h.h3;
}

}  // namespace

void ObjectiveConfig::validate() const {
  if (!(beta1 >= 0.0)) throw DomainError("beta1 must be >= 0");
  if (!(beta2 >= 0.0)) throw DomainError("beta2 must be >= 0");
  if (!(beta3 >= 0.0)) throw DomainError("beta3 must be >= 0");
  if (!(pnorm >= 1.0) || !std::isfinite(pnorm)) throw DomainError("pnorm must be finite and >= 1");
  if (psi.kind == Psi::Kind::Scaled && !(psi.c >= 0.0)) {
    throw DomainError("psi scale must be >= 0 so that psi maps into R+");
  }
}

void TrainConfig::validate() const {
  if (epochs > 0 && batch_size == 0) throw DomainError("batch_size must be >= 1");
  if (!(r0 >= 0.0) || !std::isfinite(r0)) throw DomainError("r0 must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  if (!(alpha_max > 0.0)) throw DomainError("alpha_max must be > 0");
  if (!(lambda_max > 0.0)) throw DomainError("lambda_max must be > 0");
  if (!(alpha0 >= 0.0 && alpha0 <= alpha_max)) throw DomainError("alpha0 must lie in [0, alpha_max]");
  if (!(lambda0 >= 0.0 && lambda0 <= lambda_max)) {
    throw DomainError("lambda0 must lie in [0, lambda_max]");
  }
}

double TrainConfig::rate_A(std::size_t N) const {
  return r0 * std::pow(static_cast<double>(N), lr_exp_A);
}
double TrainConfig::rate_alpha(std::size_t N) const {
  return r0 * std::pow(static_cast<double>(N), lr_exp_alpha);
}
double TrainConfig::rate_lambda(std::size_t N) const {
  return r0 * std::pow(static_cast<double>(N), lr_exp_lambda);
}

std::vector<std::size_t> Dataset::train_indices() const {
  std::vector<std::size_t> idx(train_count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<std::size_t> Dataset::val_indices() const {
  std::vector<std::size_t> idx(val_count);
  std::iota(idx.begin(), idx.end(), train_count);
  return idx;
}

void Dataset::validate() const {
  if (m <= 0 || n <= 0) throw DomainError("dataset dimensions must be positive");
  if (y.size() != b.size() || x0.size() != b.size()) {
    throw DimensionError("dataset: b, y and x0 must have one entry per sample");
  }
  if (train_count + val_count != b.size()) {
    throw DimensionError("dataset: train + val counts do not match the sample count");
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b[j].size() != m || y[j].size() != n || x0[j].size() != n) {
      throw DimensionError("dataset: sample " + std::to_string(j) + " has inconsistent dimensions");
    }
  }
}

Gradients Gradients::zeros_like(const NetworkParams& p) {
  Gradients g;
  g.dA.assign(p.depth(), Mat::Zero(p.rows(), p.cols()));
  g.dalpha.assign(p.depth(), 0.0);
  g.dlambda.assign(p.depth(), 0.0);
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t k = 0; k < dA.size(); ++k) {
    dA[k] += other.dA[k];
    dalpha[k] += other.dalpha[k];
    dlambda[k] += other.dlambda[k];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t k = 0; k < dA.size(); ++k) {
    dA[k] *= s;
    dalpha[k] *= s;
    dlambda[k] *= s;
  }
  return *this;
}

double loss(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw DimensionError("loss: x and y differ in length");
  return 0.5 * (x - y).squaredNorm();
}

RegTerms reg_terms(const NetworkParams& p, const ObjectiveConfig& cfg) {
  std::vector<double> a_norms;
  a_norms.reserve(p.depth());
  for (const auto& A : p.A) a_norms.push_back(A.norm());
  return {cfg.psi(mean_pow(a_norms, cfg.pnorm)), cfg.psi(mean_pow(p.alpha, cfg.pnorm)),
          cfg.psi(mean_pow(p.lambda, cfg.pnorm))};
}

double data_loss(const NetworkParams& p, const Dataset& data, std::span<const std::size_t> idx,
                 const Regularizer& reg, std::size_t threads) {
  check_dims(p, data);
  check_indices(data, idx, "data_loss");
  const std::size_t chunks = chunk_count(idx.size());
  std::vector<double> sums(chunks, 0.0);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    const auto part = chunk_of(idx, c);
    const auto f = forward_chunk(p, data, part, reg, false);
    sums[c] = chunk_loss_sum(f.X.back(), data, part);
  });
  const double total = tree_reduce(std::move(sums), [](double& a, double b) { a += b; });
  return total / static_cast<double>(idx.size());
}

double objective_discrete(const NetworkParams& p, const Dataset& data,
                          std::span<const std::size_t> idx, const Regularizer& reg,
                          const ObjectiveConfig& cfg, std::size_t threads) {
  cfg.validate();
  const double fit = data_loss(p, data, idx, reg, threads);
  return fit + regularizer_value(reg_terms(p, cfg), cfg);
}

double objective_continuous(const Control& u, const Dataset& data,
                            std::span<const std::size_t> idx, const Regularizer& reg,
                            const ObjectiveConfig& cfg, std::size_t N_ref, std::size_t threads) {
  cfg.validate();
  u.validate();
  if (N_ref == 0) throw DomainError("objective_continuous: N_ref must be at least 1");
  const std::size_t M = u.grid();
  const std::size_t depth = (N_ref + M - 1) / M * M;
  const double fit = data_loss(project_control(u, depth), data, idx, reg, threads);
  // (1/T) int |V(t)|^p dt = (1/M) sum over cells for piecewise-constant V.
  const NetworkParams cells{u.T, u.A, u.alpha, u.lambda};
  return fit + regularizer_value(reg_terms(cells, cfg), cfg);
}

ValueAndGrad grad_objective(const NetworkParams& p, const Dataset& batch_data,
                            std::span<const std::size_t> idx, const Regularizer& reg,
                            const ObjectiveConfig& cfg, std::size_t threads) {
  cfg.validate();
  check_dims(p, batch_data);
  check_indices(batch_data, idx, "grad_objective");
  const std::size_t N = p.depth();
  const double h = p.step();
  const double inv_batch = 1.0 / static_cast<double>(idx.size());

  struct Part {
    double loss_sum = 0.0;
    Gradients grads;
  };
  const std::size_t chunks = chunk_count(idx.size());
  std::vector<Part> parts(chunks);
  parallel_for(chunks, resolve_threads(threads), [&](std::size_t c) {
    const auto part = chunk_of(idx, c);
    const auto f = forward_chunk(p, batch_data, part, reg, true);
    Part out;
    out.grads = Gradients::zeros_like(p);
    out.loss_sum = chunk_loss_sum(f.X.back(), batch_data, part);
    if (!std::isfinite(out.loss_sum)) {
      throw NumericError("grad_objective: non-finite loss in samples starting at batch index " +
                         std::to_string(c * kChunk));
    }
    Mat G = f.X.back() - gather(batch_data.y, part, batch_data.n);
    for (std::size_t k = N; k-- > 0;) {
      const Mat& A = p.A[k];
      const Mat& X = f.X[k];
      const double alpha = p.alpha[k];
      const double lam = p.lambda[k];
      double drho = 0.0;
      const Mat dZ = prox_vjp_columns(reg, h * alpha * lam, f.Z[k], f.X[k + 1], G, &drho);
      // Z = X - h alpha A^T (A X - B)
      const Mat R = A * X - f.B;
      const Mat AdZ = A * dZ;
      out.grads.dalpha[k] += drho * h * lam - h * (R.array() * AdZ.array()).sum();
      out.grads.dlambda[k] += drho * h * alpha;
      out.grads.dA[k].noalias() -= (h * alpha) * (R * dZ.transpose() + AdZ * X.transpose());
      G = dZ - (h * alpha) * (A.transpose() * AdZ);
    }
    parts[c] = std::move(out);
  });

  Part total = tree_reduce(std::move(parts), [](Part& a, const Part& b) {
    a.loss_sum += b.loss_sum;
    a.grads += b.grads;
  });
  ValueAndGrad out;
  out.grads = std::move(total.grads);
  out.grads *= inv_batch;

  // Closed-form regularizer gradients: d/dv psi((1/N) sum |v_k|^p).
  const RegTerms terms = reg_terms(p, cfg);
  out.value = total.loss_sum * inv_batch + regularizer_value(terms, cfg);

  const double invN = 1.0 / static_cast<double>(N);
  std::vector<double> a_norms;
  for (const auto& A : p.A) a_norms.push_back(A.norm());
  const double s1 = cfg.psi.derivative(mean_pow(a_norms, cfg.pnorm));
  const double s2 = cfg.psi.derivative(mean_pow(p.alpha, cfg.pnorm));
  const double s3 = cfg.psi.derivative(mean_pow(p.lambda, cfg.pnorm));
  for (std::size_t k = 0; k < N; ++k) {
    if (cfg.beta1 > 0.0) {
      if (cfg.pnorm == 2.0) {
        out.grads.dA[k] += (cfg.beta1 * s1 * 2.0 * invN) * p.A[k];
      } else if (a_norms[k] > 0.0) {
        const double w = cfg.pnorm * std::pow(a_norms[k], cfg.pnorm - 2.0);
        out.grads.dA[k] += (cfg.beta1 * s1 * invN * w) * p.A[k];
      }
    }
    out.grads.dalpha[k] += cfg.beta2 * s2 * invN * dpow_p(p.alpha[k], cfg.pnorm);
    out.grads.dlambda[k] += cfg.beta3 * s3 * invN * dpow_p(p.lambda[k], cfg.pnorm);
  }
  return out;
}

DivergenceError::DivergenceError(std::size_t epoch_, std::size_t batch_, const std::string& detail)
    : NumericError("training diverged at epoch " + std::to_string(epoch_) + ", batch " +
                   std::to_string(batch_) + ": " + detail),
      epoch(epoch_),
      batch(batch_) {}

std::vector<std::size_t> epoch_permutation(std::size_t count, std::uint64_t seed,
                                           std::size_t epoch) {
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm;
}

TrainResult sgd_train(const NetworkParams& p0, const Dataset& data, const Regularizer& reg,
                      const ObjectiveConfig& ocfg, const TrainConfig& tcfg,
                      const StepObserver& observer) {
  ocfg.validate();
  tcfg.validate();
  data.validate();
  check_dims(p0, data);
  TrainResult result{p0, {}};
  if (tcfg.epochs == 0) return result;
  if (data.train_count == 0) throw DomainError("sgd_train: empty training split");

  NetworkParams& p = result.params;
  const std::size_t N = p.depth();
  const std::size_t threads = resolve_threads(tcfg.threads);
  const double rA = tcfg.rate_A(N);
  const double ralpha = tcfg.rate_alpha(N);
  const double rlambda = tcfg.rate_lambda(N);
  Gradients velocity = Gradients::zeros_like(p);
  const auto train_idx = data.train_indices();
  const auto val_idx = data.val_indices();
  const std::size_t J = train_idx.size();

  for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
    const auto perm = epoch_permutation(J, tcfg.seed, epoch);
    std::size_t batch = 0;
    for (std::size_t start = 0; start < J; start += tcfg.batch_size, ++batch) {
      const std::size_t stop = std::min(J, start + tcfg.batch_size);
      const std::span<const std::size_t> idx(perm.data() + start, stop - start);
      ValueAndGrad vg;
      try {
        vg = grad_objective(p, data, idx, reg, ocfg, threads);
      } catch (const NumericError& e) {
        throw DivergenceError(epoch + 1, batch, e.what());
      }
      if (!std::isfinite(vg.value)) {
        throw DivergenceError(epoch + 1, batch, "non-finite training objective");
      }
      velocity *= tcfg.momentum;
      velocity += vg.grads;
      for (std::size_t k = 0; k < N; ++k) {
        p.A[k] -= rA * velocity.dA[k];
        p.alpha[k] = std::clamp(p.alpha[k] - ralpha * velocity.dalpha[k], 0.0, tcfg.alpha_max);
        p.lambda[k] = std::clamp(p.lambda[k] - rlambda * velocity.dlambda[k], 0.0, tcfg.lambda_max);
        if (!p.A[k].allFinite() || !std::isfinite(p.alpha[k]) || !std::isfinite(p.lambda[k])) {
          throw DivergenceError(epoch + 1, batch, "non-finite parameters after update");
        }
      }
      if (observer) observer(epoch + 1, batch, p);
    }

    CurvePoint point;
    point.epoch = epoch + 1;
    try {
      point.train_data_loss = data_loss(p, data, train_idx, reg, threads);
      point.val_data_loss = val_idx.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : data_loss(p, data, val_idx, reg, threads);
    } catch (const NumericError& e) {
      throw DivergenceError(epoch + 1, batch, e.what());
    }
    point.train_objective = point.train_data_loss + regularizer_value(reg_terms(p, ocfg), ocfg);
    if (!std::isfinite(point.train_objective)) {
      throw DivergenceError(epoch + 1, batch, "non-finite training objective");
    }
    result.curve.push_back(point);
  }
  return result;
}

NetworkParams init_params(std::size_t N, double T, const Mat& A_base, const TrainConfig& tcfg) {
  if (N == 0) throw DomainError("init_params: N must be at least 1");
  Mat layer;
  if (tcfg.A_init == AInit::Given) {
    layer = A_base;
  } else {
    const Eigen::Index m = A_base.rows();
    const Eigen::Index n = A_base.cols();
    if (m > n) throw DomainError("init_params: orthogonal init needs m <= n");
    Eigen::HouseholderQR<Mat> qr(A_base.transpose());
    const Vec diag = qr.matrixQR().diagonal().head(m);
    const double scale = diag.cwiseAbs().maxCoeff();
    if (!(scale > 0.0) || diag.cwiseAbs().minCoeff() <= 1e-12 * scale) {
      throw DomainError("init_params: A_base is rank deficient");
    }
    Mat Q = qr.householderQ() * Mat::Identity(n, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (diag(i) < 0.0) Q.col(i) *= -1.0;
    }
    layer = Q.transpose();
  }
  return NetworkParams::constant(T, N, layer, tcfg.alpha0, tcfg.lambda0);
}

}  // namespace fbsnet
