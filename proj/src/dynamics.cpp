#include "fbsnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fbsnet {

namespace {

bool same_matrices(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols()) return false;
    if (!(a[k].array() == b[k].array()).all()) return false;
  }
  return true;
}

template <typename Layers>
void validate_layers(const Layers& p, const char* what, const char* count_name) {
  if (!(p.T > 0.0) || !std::isfinite(p.T)) {
    throw DomainError(std::string(what) + ": horizon T must be positive and finite");
  }
  const std::size_t n = p.A.size();
  if (n == 0) throw DomainError(std::string(what) + ": " + count_name + " must be at least 1");
  if (p.alpha.size() != n || p.lambda.size() != n) {
    throw DimensionError(std::string(what) + ": A, alpha and lambda must have the same length");
  }
  const auto rows = p.A.front().rows();
  const auto cols = p.A.front().cols();
  for (std::size_t k = 0; k < n; ++k) {
    if (p.A[k].rows() != rows || p.A[k].cols() != cols) {
      throw DimensionError(std::string(what) + ": layer " + std::to_string(k) +
                           " has a different matrix shape");
    }
    if (!p.A[k].allFinite()) {
      throw NumericError(std::string(what) + ": non-finite matrix at layer " + std::to_string(k));
    }
    if (!(p.alpha[k] >= 0.0) || !std::isfinite(p.alpha[k])) {
      throw DomainError(std::string(what) + ": alpha[" + std::to_string(k) +
                        "] must be finite and nonnegative");
    }
    if (!(p.lambda[k] >= 0.0) || !std::isfinite(p.lambda[k])) {
      throw DomainError(std::string(what) + ": lambda[" + std::to_string(k) +
                        "] must be finite and nonnegative");
    }
  }
}

// Rethrows e with a layer prefix while keeping its type.
[[noreturn]] void rethrow_at_layer(std::size_t k) {
  const std::string prefix = "layer " + std::to_string(k) + ": ";
  try {
    throw;
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  }
}

// Adds the integral of u over [a, b] intersected with [0, T] to the
// accumulators.
void integrate_window(const Control& u, double a, double b, Mat& A, double& alpha, double& lambda) {
  const double lo = std::max(a, 0.0);
  const double hi = std::min(b, u.T);
  if (!(hi > lo)) return;
  const auto M = static_cast<double>(u.grid());
  const double cell = u.T / M;
  auto first = static_cast<std::size_t>(std::floor(lo / cell));
  first = std::min(first, u.grid() - 1);
  for (std::size_t j = first; j < u.grid(); ++j) {
    const double c_lo = static_cast<double>(j) * cell;
    const double c_hi = static_cast<double>(j + 1) * cell;
    if (c_lo >= hi) break;
    const double w = std::min(hi, c_hi) - std::max(lo, c_lo);
    if (w <= 0.0) continue;
    A += w * u.A[j];
    alpha += w * u.alpha[j];
    lambda += w * u.lambda[j];
  }
}

double layer_norm(const Mat& A, double alpha, double lambda) {
  return spectral_norm(A) + std::abs(alpha) + std::abs(lambda);
}

template <typename Layers>
double weighted_lp(const Layers& p, double pnorm) {
  if (!(pnorm >= 1.0)) throw DomainError("param_norm_lp: pnorm must be >= 1");
  const std::size_t n = p.A.size();
  if (n == 0) throw DomainError("param_norm_lp: empty parameter set");
  if (std::isinf(pnorm)) {
    double best = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      best = std::max(best, layer_norm(p.A[k], p.alpha[k], p.lambda[k]));
    }
    return best;
  }
  const double w = p.T / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += std::pow(layer_norm(p.A[k], p.alpha[k], p.lambda[k]), pnorm);
  }
  return std::pow(w * acc, 1.0 / pnorm);
}

}  // namespace

bool operator==(const NetworkParams& a, const NetworkParams& b) {
  return a.T == b.T && a.alpha == b.alpha && a.lambda == b.lambda && same_matrices(a.A, b.A);
}

bool operator==(const Control& a, const Control& b) {
  return a.T == b.T && a.alpha == b.alpha && a.lambda == b.lambda && same_matrices(a.A, b.A);
}

void NetworkParams::validate() const { validate_layers(*this, "NetworkParams", "depth N"); }

NetworkParams NetworkParams::constant(double T, std::size_t N, const Mat& A, double alpha,
                                      double lambda) {
  NetworkParams p;
  p.T = T;
  p.A.assign(N, A);
  p.alpha.assign(N, alpha);
  p.lambda.assign(N, lambda);
  p.validate();
  return p;
}

void Control::validate() const { validate_layers(*this, "Control", "grid M"); }

std::size_t Control::cell_of(double t) const {
  if (!(t >= 0.0 && t <= T)) throw DomainError("Control::cell_of: t outside [0, T]");
  const auto M = grid();
  const auto k = static_cast<std::size_t>(std::floor(t / T * static_cast<double>(M)));
  return std::min(k, M - 1);
}

void LISTAParams::validate() const {
  if (!(T > 0.0)) throw DomainError("LISTAParams: T must be positive");
  if (N == 0) throw DomainError("LISTAParams: depth N must be at least 1");
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw DomainError("LISTAParams: theta must be finite and nonnegative");
  }
  if (W1.rows() != W1.cols() || W2.rows() != W1.rows()) {
    throw DimensionError("LISTAParams: W1 must be n x n and W2 n x m");
  }
}

Vec fbs_step(const Mat& A, double alpha, double lam, double h, const Vec& b, const Vec& x,
             const Regularizer& reg) {
  if (A.rows() != b.size() || A.cols() != x.size()) {
    throw DimensionError("fbs_step: A is " + std::to_string(A.rows()) + "x" +
                         std::to_string(A.cols()) + " but b has " + std::to_string(b.size()) +
                         " and x has " + std::to_string(x.size()) + " entries");
  }
  if (!(alpha >= 0.0) || !(lam >= 0.0)) throw DomainError("fbs_step: alpha and lambda must be >= 0");
  if (!(h > 0.0)) throw DomainError("fbs_step: step h must be positive");
  const Vec z = x - (h * alpha) * (A.transpose() * (A * x - b));
  if (!z.allFinite()) throw NumericError("fbs_step: non-finite gradient step");
  return prox(reg, h * alpha * lam, z);
}

Trajectory fbs_forward(const NetworkParams& params, const Vec& x0, const Vec& b,
                       const Regularizer& reg) {
  params.validate();
  if (!x0.allFinite() || !b.allFinite()) throw NumericError("fbs_forward: non-finite x0 or b");
  const double h = params.step();
  Trajectory traj{params.T, {}};
  traj.states.reserve(params.depth() + 1);
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < params.depth(); ++k) {
    try {
      traj.states.push_back(
          fbs_step(params.A[k], params.alpha[k], params.lambda[k], h, b, traj.states.back(), reg));
    } catch (...) {
      rethrow_at_layer(k);
    }
  }
  return traj;
}

Trajectory lista_forward(const LISTAParams& params, const Vec& x0, const Vec& b) {
  params.validate();
  if (x0.size() != params.W1.rows() || b.size() != params.W2.cols()) {
    throw DimensionError("lista_forward: x0 or b does not match W1/W2");
  }
  const double h = params.T / static_cast<double>(params.N);
  const Regularizer l1 = Regularizer::l1();
  const Vec drive = params.W2 * b;
  Trajectory traj{params.T, {}};
  traj.states.reserve(params.N + 1);
  traj.states.push_back(x0);
  for (std::size_t k = 0; k < params.N; ++k) {
    const Vec& x = traj.states.back();
    traj.states.push_back(prox(l1, h * params.theta, x - h * (params.W1 * x - drive)));
  }
  return traj;
}

NetworkParams project_control(const Control& u, std::size_t N) {
  if (N == 0) throw DomainError("project_control: N must be at least 1");
  u.validate();
  const std::size_t M = u.grid();
  NetworkParams p;
  p.T = u.T;
  p.A.reserve(N);
  p.alpha.reserve(N);
  p.lambda.reserve(N);
  // Work in units of T / (N M): output cell k is [kM, (k+1)M), input cell
  // j is [jN, (j+1)N). Overlaps are integers, so the weights are exact.
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t lo = k * M;
    const std::size_t hi = (k + 1) * M;
    const std::size_t j_first = lo / N;
    const std::size_t j_last = std::min((hi + N - 1) / N, M);
    Mat A;
    double alpha = 0.0;
    double lambda = 0.0;
    bool first = true;
    for (std::size_t j = j_first; j < j_last; ++j) {
      const std::size_t ov_lo = std::max(lo, j * N);
      const std::size_t ov_hi = std::min(hi, (j + 1) * N);
      if (ov_hi <= ov_lo) continue;
      const double w = static_cast<double>(ov_hi - ov_lo) / static_cast<double>(M);
      if (first) {
        A = w * u.A[j];
        alpha = w * u.alpha[j];
        lambda = w * u.lambda[j];
        first = false;
      } else {
        A += w * u.A[j];
        alpha += w * u.alpha[j];
        lambda += w * u.lambda[j];
      }
    }
    p.A.push_back(std::move(A));
    p.alpha.push_back(alpha);
    p.lambda.push_back(lambda);
  }
  return p;
}

Control extend_params(const NetworkParams& p) {
  p.validate();
  return Control{p.T, p.A, p.alpha, p.lambda};
}

double spectral_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  const Mat G = A.transpose() * A;
  Vec v = Vec::Ones(A.cols());
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = G * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    v = w / norm;
    const bool converged = std::abs(next - estimate) <= 1e-10 * std::max(1.0, next);
    estimate = next;
    if (converged) break;
  }
  return estimate;
}

double param_norm_lp(const NetworkParams& p, double pnorm) { return weighted_lp(p, pnorm); }

double param_norm_lp(const Control& u, double pnorm) { return weighted_lp(u, pnorm); }

std::size_t effective_nref(std::size_t N_ref, std::size_t M) {
  if (M == 0) throw DomainError("effective_nref: control grid is empty");
  const std::size_t step = std::lcm(M, std::size_t{2});
  const std::size_t n = std::max<std::size_t>(N_ref, 2);
  return (n + step - 1) / step * step;
}

LimitSolution limit_solve(const Control& u, const Vec& x0, const Vec& b, const Regularizer& reg,
                          std::size_t N_ref) {
  u.validate();
  const std::size_t fine = effective_nref(N_ref, u.grid());
  Trajectory traj = fbs_forward(project_control(u, fine), x0, b, reg);
  const Trajectory coarse = fbs_forward(project_control(u, fine / 2), x0, b, reg);
  LimitSolution out;
  out.terminal = traj.terminal();
  out.err_est = (traj.terminal() - coarse.terminal()).norm();
  out.trajectory = std::move(traj);
  return out;
}

Vec interpolate_pl(const Trajectory& traj, double t) {
  const std::size_t N = traj.depth();
  if (N == 0) throw DomainError("interpolate_pl: empty trajectory");
  if (!(t >= 0.0 && t <= traj.T)) throw DomainError("interpolate_pl: t outside [0, T]");
  const double h = traj.T / static_cast<double>(N);
  const auto k = std::min(static_cast<std::size_t>(std::floor(t / h)), N - 1);
  const double s = (t - static_cast<double>(k) * h) / h;
  if (s == 0.0) return traj.states[k];
  return traj.states[k] + s * (traj.states[k + 1] - traj.states[k]);
}

Control refine_control(const Control& u, std::size_t K) {
  if (K == 0) throw DomainError("refine_control: K must be at least 1");
  const NetworkParams p = project_control(u, u.grid() * K);
  return Control{p.T, p.A, p.alpha, p.lambda};
}

Control zero_like(const Control& u) {
  Control z;
  z.T = u.T;
  z.A.assign(u.grid(), Mat::Zero(u.rows(), u.cols()));
  z.alpha.assign(u.grid(), 0.0);
  z.lambda.assign(u.grid(), 0.0);
  return z;
}

Control shift_control(const Control& u, double h) {
  u.validate();
  if (!std::isfinite(h)) throw DomainError("shift_control: h must be finite");
  if (h == 0.0) return u;
  const std::size_t M = u.grid();
  if (std::abs(h) >= u.T) return zero_like(u);

  constexpr std::size_t kMaxRefine = 64;
  for (std::size_t K = 1; K <= kMaxRefine; ++K) {
    const double cells = h * static_cast<double>(M * K) / u.T;
    const double shift = std::round(cells);
    if (std::abs(cells - shift) > 1e-9 * std::max(1.0, std::abs(cells))) continue;
    const auto d = static_cast<long long>(shift);
    const auto MK = static_cast<long long>(M * K);
    Control out;
    out.T = u.T;
    out.A.reserve(M * K);
    for (long long i = 0; i < MK; ++i) {
      const long long src = i + d;
      if (src < 0 || src >= MK) {
        out.A.push_back(Mat::Zero(u.rows(), u.cols()));
        out.alpha.push_back(0.0);
        out.lambda.push_back(0.0);
      } else {
        const auto j = static_cast<std::size_t>(src) / K;
        out.A.push_back(u.A[j]);
        out.alpha.push_back(u.alpha[j]);
        out.lambda.push_back(u.lambda[j]);
      }
    }
    return out;
  }

  // Unaligned shift: exact averages of the shifted control on the refined grid.
  const std::size_t MK = M * kMaxRefine;
  const double cell = u.T / static_cast<double>(MK);
  Control out;
  out.T = u.T;
  for (std::size_t i = 0; i < MK; ++i) {
    Mat A = Mat::Zero(u.rows(), u.cols());
    double alpha = 0.0;
    double lambda = 0.0;
    const double a = static_cast<double>(i) * cell + h;
    integrate_window(u, a, a + cell, A, alpha, lambda);
    out.A.push_back(A / cell);
    out.alpha.push_back(alpha / cell);
    out.lambda.push_back(lambda / cell);
  }
  return out;
}

Control difference(const Control& a, const Control& b) {
  if (a.grid() != b.grid() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("difference: controls live on different grids or shapes");
  }
  Control d;
  d.T = a.T;
  for (std::size_t k = 0; k < a.grid(); ++k) {
    d.A.push_back(a.A[k] - b.A[k]);
    d.alpha.push_back(a.alpha[k] - b.alpha[k]);
    d.lambda.push_back(a.lambda[k] - b.lambda[k]);
  }
  return d;
}

NetworkParams difference(const NetworkParams& a, const NetworkParams& b) {
  if (a.depth() != b.depth() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("difference: parameter sets have different shapes");
  }
  NetworkParams d;
  d.T = a.T;
  for (std::size_t k = 0; k < a.depth(); ++k) {
    d.A.push_back(a.A[k] - b.A[k]);
    d.alpha.push_back(a.alpha[k] - b.alpha[k]);
    d.lambda.push_back(a.lambda[k] - b.lambda[k]);
  }
  return d;
}

}  // namespace fbsnet
