#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "fbsnet/regularizer.hpp"
#include "fbsnet/types.hpp"

namespace fbsnet {

/// Per-layer learnables of an N-layer FBS network on the horizon [0, T].
/// Layer k acts on the subinterval [kT/N, (k+1)T/N) with step h = T/N.
struct NetworkParams {
  double T = 1.0;
  std::vector<Mat> A;
  std::vector<double> alpha;
  std::vector<double> lambda;

  std::size_t depth() const { return A.size(); }
  double step() const { return T / static_cast<double>(depth()); }
  Eigen::Index rows() const { return A.empty() ? 0 : A.front().rows(); }
  Eigen::Index cols() const { return A.empty() ? 0 : A.front().cols(); }

  /// Throws on N = 0, ragged shapes, negative or non-finite entries.
  void validate() const;

  /// Copy with every layer equal to (A, alpha, lambda).
  static NetworkParams constant(double T, std::size_t N, const Mat& A, double alpha, double lambda);

  /// Exact equality, shapes included.
  friend bool operator==(const NetworkParams& a, const NetworkParams& b);
};

/// Piecewise-constant control (A(t), alpha(t), lambda(t)) on a uniform grid
/// of M cells over [0, T]. Cell j covers [jT/M, (j+1)T/M), the last one
/// closed at T.
struct Control {
  double T = 1.0;
  std::vector<Mat> A;
  std::vector<double> alpha;
  std::vector<double> lambda;

  std::size_t grid() const { return A.size(); }
  Eigen::Index rows() const { return A.empty() ? 0 : A.front().rows(); }
  Eigen::Index cols() const { return A.empty() ? 0 : A.front().cols(); }

  void validate() const;

  /// Index of the cell containing t in [0, T].
  std::size_t cell_of(double t) const;

  friend bool operator==(const Control& a, const Control& b);
};

/// Layer states x^{N,0..N} of one forward pass.
struct Trajectory {
  double T = 1.0;
  std::vector<Vec> states;

  std::size_t depth() const { return states.empty() ? 0 : states.size() - 1; }
  const Vec& terminal() const { return states.back(); }
};

/// LISTA layer: x' = soft_{h theta}(x - h (W1 x - W2 b)), shared across layers.
struct LISTAParams {
  double T = 1.0;
  std::size_t N = 1;
  Mat W1;  // n x n
  Mat W2;  // n x m
  double theta = 0.0;

  void validate() const;
};

/// One layer of the unrolled network, in resolvent form:
/// prox(reg, h alpha lam, x - h alpha A^T (A x - b)).
Vec fbs_step(const Mat& A, double alpha, double lam, double h, const Vec& b, const Vec& x,
             const Regularizer& reg);

Trajectory fbs_forward(const NetworkParams& params, const Vec& x0, const Vec& b,
                       const Regularizer& reg);

Trajectory lista_forward(const LISTAParams& params, const Vec& x0, const Vec& b);

/// Exact cell averages of u over the N-cell partition of [0, T].
NetworkParams project_control(const Control& u, std::size_t N);

/// Piecewise-constant extension: grid M = N with the layer values as cells.
Control extend_params(const NetworkParams& p);

/// Spectral norm by power iteration on A^T A (all-ones start, tol 1e-10,
/// at most 500 iterations).
double spectral_norm(const Mat& A);

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// l^p norm on (R^{m x n})^N x R^N x R^N with the T/N weight, where one
/// layer contributes |A_k|_2 + |alpha_k| + |lambda_k|. pnorm = kInfNorm
/// gives the max over layers.
double param_norm_lp(const NetworkParams& p, double pnorm);
/// L^p norm of a piecewise-constant control; same per-cell weighting T/M.
double param_norm_lp(const Control& u, double pnorm);

struct LimitSolution {
  Vec terminal;
  Trajectory trajectory;
  double err_est = 0.0;
};

inline constexpr std::size_t kDefaultNRef = 2048;

/// Fine-grid approximation of the continuous-time limit system.
///
/// Runs the unrolled scheme at depth N_ref on project_control(u, N_ref).
/// N_ref is rounded up to an even multiple of u.grid() when needed. The
/// error estimate is the terminal gap against depth N_ref / 2.
LimitSolution limit_solve(const Control& u, const Vec& x0, const Vec& b, const Regularizer& reg,
                          std::size_t N_ref = kDefaultNRef);

/// The depth limit_solve actually uses for a requested N_ref on grid M.
std::size_t effective_nref(std::size_t N_ref, std::size_t M);

/// Piecewise-linear interpolation of the layer states at t in [0, T].
Vec interpolate_pl(const Trajectory& traj, double t);

/// (tau_h u)(t) = u(t + h) restricted to [0, T], zero outside the window.
///
/// The result lives on grid M * K with K the smallest refinement (up to 64)
/// on which the shifted breakpoints align. Otherwise it is the exact cell
/// average of the shifted control on the 64-fold refined grid.
Control shift_control(const Control& u, double h);

/// The same function on the K-fold refined grid M * K (exact copy of cells).
Control refine_control(const Control& u, std::size_t K);

/// Control with every cell zero and the same shape as u.
Control zero_like(const Control& u);

/// Pointwise difference of two controls on the same grid.
Control difference(const Control& a, const Control& b);

/// Difference of two parameter sets of identical shape.
NetworkParams difference(const NetworkParams& a, const NetworkParams& b);

}  // namespace fbsnet
