#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "fbsnet/dynamics.hpp"
#include "fbsnet/learning.hpp"

namespace fbsnet {

/// Synthetic sparse-recovery data b_j = A y_j + eps_j.
///
/// A has i.i.d. N(0, 1/m) entries, y_j has ceil(sparsity * n) nonzero
/// standard-normal entries on a uniformly drawn support, eps_j ~ N(0,
/// noise_sigma^2). Initial states are zero. Everything is a function of seed.
Dataset gen_dataset(Eigen::Index m, Eigen::Index n, std::size_t train, std::size_t val,
                    double sparsity, double noise_sigma, std::uint64_t seed);

/// Shared inputs of a training-based experiment.
struct ProblemInstance {
  Dataset data;
  Regularizer reg;
  ObjectiveConfig objective;
  TrainConfig train;
  double T = 1.0;
};

struct SweepRow {
  std::size_t N = 0;
  double final_train_objective = 0.0;
  double final_train_data_loss = 0.0;
  double final_val_data_loss = 0.0;
  double wall_time = 0.0;
  bool ok = true;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Per-row training curves, same order as rows.
  std::vector<std::vector<CurvePoint>> curves;
  std::vector<NetworkParams> params;
};

/// Trains one network per depth in N_list (strictly increasing), each from
/// init_params(N, T, data.meta.A_true, train). A failing row is recorded
/// with ok = false and the remaining rows still run.
SweepResult depth_sweep(const std::vector<std::size_t>& N_list, const ProblemInstance& base);

struct GammaRow {
  std::size_t N = 0;
  double value = 0.0;  // (J_N o P_N)(target)
  double gap = 0.0;    // |value - J(target)|
};

struct GammaResult {
  std::vector<GammaRow> rows;
  double reference = 0.0;  // J(target) at depth N_ref
  /// |J at N_ref - J at N_ref / 2|
  double err_est = 0.0;
};

GammaResult gamma_check(const Control& target, const std::vector<std::size_t>& N_list,
                        const Dataset& data, const std::vector<std::size_t>& idx,
                        const Regularizer& reg, const ObjectiveConfig& cfg, std::size_t N_ref,
                        std::size_t threads = 1);

/// Least-squares slope of log(gap) against log(N), negated.
double empirical_order(const std::vector<GammaRow>& rows);

enum class PerturbTarget { X0, B, Y, All };

struct PerturbationSchedule {
  PerturbTarget target = PerturbTarget::Y;
  std::vector<double> magnitudes;  // strictly decreasing, positive
  std::uint64_t direction_seed = 0;

  void validate() const;
  /// 2^-first, ..., 2^-last
  static PerturbationSchedule geometric(PerturbTarget target, int first, int last,
                                        std::uint64_t direction_seed);
};

struct StabilityMode {
  enum class Kind { Discrete, Continuous } kind = Kind::Discrete;
  /// Network depth N (Discrete) or fine-grid depth N_ref (Continuous).
  std::size_t depth = 8;
};

struct StabilityRow {
  std::size_t r = 0;
  double magnitude = 0.0;
  double optimal_value_gap = 0.0;
  double solution_distance_lp = 0.0;
  bool ok = true;
  std::string error;
};

struct StabilityResult {
  std::vector<StabilityRow> rows;  // rows[0] is the magnitude-0 control row
  double base_value = 0.0;
};

/// Copy of data with each training sample's target quantities moved by
/// magnitude * d_j, where the d_j are unit vectors (over the concatenated
/// x0_j, b_j, y_j parts being moved) drawn in sample order from one seed.
Dataset perturb_dataset(const Dataset& data, PerturbTarget target, double magnitude,
                        std::uint64_t direction_seed);

/// Retrains on perturbed data from identical init and seed for each
/// magnitude and reports the optimal-value gap and the l^p distance to the
/// unperturbed solution.
StabilityResult stability_run(const ProblemInstance& base, const PerturbationSchedule& sched,
                              const StabilityMode& mode);

struct ListaComparison {
  double lista_value = 0.0;
  double fbs_value = 0.0;
};

/// LISTA objective (regularizers psi(|W1|_F^p), psi(|W2|_F^p), psi(|theta|^p))
/// next to the FBS objective on the same samples.
ListaComparison lista_compare(const Dataset& data, const std::vector<std::size_t>& idx,
                              const LISTAParams& lista, const NetworkParams& fbs,
                              const Regularizer& reg, const ObjectiveConfig& cfg);

/// Time-dependent control values at time t.
using ControlFn = std::function<std::tuple<Mat, double, double>(double)>;

/// Samples fn at the midpoints of M uniform cells of [0, T].
Control sample_control(double T, std::size_t M, const ControlFn& fn);

/// Lipschitz test control around a base matrix:
/// A(t) = A_base (1 + 0.25 sin(2 pi t / T)), alpha(t) = alpha0 (1 + 0.5 sin(2 pi t / T)),
/// lambda(t) = lambda0 (1 + 0.5 cos(2 pi t / T)).
Control smooth_control(double T, std::size_t M, const Mat& A_base, double alpha0, double lambda0);

const char* to_string(PerturbTarget target);
PerturbTarget parse_perturb_target(const std::string& s);

}  // namespace fbsnet
