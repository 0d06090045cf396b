#include "fbsnet/experiments.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace fbsnet {

Dataset gen_dataset(Eigen::Index m, Eigen::Index n, std::size_t train, std::size_t val,
                    double sparsity, double noise_sigma, std::uint64_t seed) {
  if (m <= 0 || n <= 0) throw DomainError("gen_dataset: m and n must be positive");
  if (!(sparsity > 0.0 && sparsity <= 1.0)) throw DomainError("gen_dataset: sparsity must lie in (0, 1]");
  if (!(noise_sigma >= 0.0)) throw DomainError("gen_dataset: noise sigma must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset d;
  d.m = m;
  d.n = n;
  d.train_count = train;
  d.val_count = val;
  d.meta.sparsity = sparsity;
  d.meta.noise_sigma = noise_sigma;
  d.meta.seed = seed;

  Mat A(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = scale * normal(rng);
  }
  d.meta.A_true = A;

  const auto nnz = static_cast<Eigen::Index>(
      std::ceil(sparsity * static_cast<double>(n) - 1e-9));
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  const std::size_t total = train + val;
  d.b.reserve(total);
  d.y.reserve(total);
  d.x0.reserve(total);
  for (std::size_t s = 0; s < total; ++s) {
    // Partial Fisher-Yates for the support.
    for (Eigen::Index i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    Vec y = Vec::Zero(n);
    for (Eigen::Index i = 0; i < nnz; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
      y(pool[static_cast<std::size_t>(i)]) = normal(rng);
    }
    Vec b = A * y;
    if (noise_sigma > 0.0) {
      for (Eigen::Index i = 0; i < m; ++i) b(i) += noise_sigma * normal(rng);
    }
    d.b.push_back(std::move(b));
    d.y.push_back(std::move(y));
    d.x0.push_back(Vec::Zero(n));
  }
  return d;
}

SweepResult depth_sweep(const std::vector<std::size_t>& N_list, const ProblemInstance& base) {
  if (N_list.empty()) throw DomainError("depth_sweep: empty layer list");
  for (std::size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] == 0) throw DomainError("depth_sweep: depths must be >= 1");
    if (i > 0 && N_list[i] <= N_list[i - 1]) {
      throw DomainError("depth_sweep: depths must be strictly increasing");
    }
  }
  SweepResult out;
  for (const std::size_t N : N_list) {
    SweepRow row;
    row.N = N;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const NetworkParams p0 = init_params(N, base.T, base.data.meta.A_true, base.train);
      TrainResult tr = sgd_train(p0, base.data, base.reg, base.objective, base.train);
      if (tr.curve.empty()) {
        const auto train_idx = base.data.train_indices();
        const auto val_idx = base.data.val_indices();
        const std::size_t threads = base.train.threads;
        row.final_train_data_loss = data_loss(p0, base.data, train_idx, base.reg, threads);
        row.final_train_objective =
            objective_discrete(p0, base.data, train_idx, base.reg, base.objective, threads);
        row.final_val_data_loss = val_idx.empty()
                                      ? std::numeric_limits<double>::quiet_NaN()
                                      : data_loss(p0, base.data, val_idx, base.reg, threads);
      } else {
        row.final_train_objective = tr.curve.back().train_objective;
        row.final_train_data_loss = tr.curve.back().train_data_loss;
        row.final_val_data_loss = tr.curve.back().val_data_loss;
      }
      out.curves.push_back(std::move(tr.curve));
      out.params.push_back(std::move(tr.params));
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.final_train_objective = std::numeric_limits<double>::quiet_NaN();
      row.final_train_data_loss = std::numeric_limits<double>::quiet_NaN();
      row.final_val_data_loss = std::numeric_limits<double>::quiet_NaN();
      out.curves.emplace_back();
      out.params.emplace_back();
    }
    row.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.rows.push_back(std::move(row));
  }
  return out;
}

GammaResult gamma_check(const Control& target, const std::vector<std::size_t>& N_list,
                        const Dataset& data, const std::vector<std::size_t>& idx,
                        const Regularizer& reg, const ObjectiveConfig& cfg, std::size_t N_ref,
                        std::size_t threads) {
  target.validate();
  if (N_list.empty()) throw DomainError("gamma_check: empty layer list");
  std::size_t max_N = 0;
  for (std::size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] == 0 || (i > 0 && N_list[i] <= N_list[i - 1])) {
      throw DomainError("gamma_check: depths must be positive and strictly increasing");
    }
    max_N = std::max(max_N, N_list[i]);
  }
  if (N_ref <= max_N) throw DomainError("gamma_check: N_ref must exceed every depth in the list");

  GammaResult out;
  out.reference = objective_continuous(target, data, idx, reg, cfg, N_ref, threads);
  const double coarse = objective_continuous(target, data, idx, reg, cfg, N_ref / 2, threads);
  out.err_est = std::abs(out.reference - coarse);
  for (const std::size_t N : N_list) {
    GammaRow row;
    row.N = N;
    row.value = objective_discrete(project_control(target, N), data, idx, reg, cfg, threads);
    row.gap = std::abs(row.value - out.reference);
    out.rows.push_back(row);
  }
  return out;
}

double empirical_order(const std::vector<GammaRow>& rows) {
  if (rows.size() < 2) throw DomainError("empirical_order: need at least two rows");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& r : rows) {
    if (!(r.gap > 0.0)) throw DomainError("empirical_order: gaps must be positive");
    const double x = std::log(static_cast<double>(r.N));
    const double y = std::log(r.gap);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const auto k = static_cast<double>(rows.size());
  return -(k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void PerturbationSchedule::validate() const {
  if (magnitudes.empty()) throw DomainError("perturbation schedule: no magnitudes");
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    if (!(magnitudes[i] > 0.0) || !std::isfinite(magnitudes[i])) {
      throw DomainError("perturbation schedule: magnitudes must be positive and finite");
    }
    if (i > 0 && !(magnitudes[i] < magnitudes[i - 1])) {
      throw DomainError("perturbation schedule: magnitudes must be strictly decreasing");
    }
  }
}

PerturbationSchedule PerturbationSchedule::geometric(PerturbTarget target, int first, int last,
                                                     std::uint64_t direction_seed) {
  PerturbationSchedule s;
  s.target = target;
  s.direction_seed = direction_seed;
  for (int e = first; e <= last; ++e) s.magnitudes.push_back(std::ldexp(1.0, -e));
  s.validate();
  return s;
}

Dataset perturb_dataset(const Dataset& data, PerturbTarget target, double magnitude,
                        std::uint64_t direction_seed) {
  Dataset out = data;
  if (magnitude == 0.0) return out;
  const bool do_x0 = target == PerturbTarget::X0 || target == PerturbTarget::All;
  const bool do_b = target == PerturbTarget::B || target == PerturbTarget::All;
  const bool do_y = target == PerturbTarget::Y || target == PerturbTarget::All;
  const Eigen::Index len = (do_x0 ? data.n : 0) + (do_b ? data.m : 0) + (do_y ? data.n : 0);
  std::mt19937_64 rng(direction_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec dir(len);
  for (std::size_t j = 0; j < data.train_count; ++j) {
    for (Eigen::Index i = 0; i < len; ++i) dir(i) = normal(rng);
    dir *= magnitude / dir.norm();
    Eigen::Index at = 0;
    auto take = [&](Vec& v) {
      v += dir.segment(at, v.size());
      at += v.size();
    };
    if (do_x0) take(out.x0[j]);
    if (do_b) take(out.b[j]);
    if (do_y) take(out.y[j]);
  }
  return out;
}

namespace {

struct Trained {
  NetworkParams params;
  double value = 0.0;
};

Trained train_instance(const ProblemInstance& inst, const StabilityMode& mode) {
  const NetworkParams p0 = init_params(mode.depth, inst.T, inst.data.meta.A_true, inst.train);
  const TrainResult tr = sgd_train(p0, inst.data, inst.reg, inst.objective, inst.train);
  const auto idx = inst.data.train_indices();
  Trained out{tr.params, 0.0};
  if (mode.kind == StabilityMode::Kind::Discrete) {
    out.value = objective_discrete(tr.params, inst.data, idx, inst.reg, inst.objective,
                                   inst.train.threads);
  } else {
    out.value = objective_continuous(extend_params(tr.params), inst.data, idx, inst.reg,
                                     inst.objective, mode.depth, inst.train.threads);
  }
  return out;
}

}  // namespace

StabilityResult stability_run(const ProblemInstance& base, const PerturbationSchedule& sched,
                              const StabilityMode& mode) {
  sched.validate();
  if (mode.depth == 0) throw DomainError("stability_run: depth must be >= 1");
  const Trained ref = train_instance(base, mode);
  StabilityResult out;
  out.base_value = ref.value;

  std::vector<double> mags{0.0};
  mags.insert(mags.end(), sched.magnitudes.begin(), sched.magnitudes.end());
  for (std::size_t r = 0; r < mags.size(); ++r) {
    StabilityRow row;
    row.r = r;
    row.magnitude = mags[r];
    try {
      ProblemInstance inst = base;
      inst.data = perturb_dataset(base.data, sched.target, mags[r], sched.direction_seed);
      const Trained t = train_instance(inst, mode);
      row.optimal_value_gap = std::abs(t.value - ref.value);
      row.solution_distance_lp =
          param_norm_lp(difference(t.params, ref.params), base.objective.pnorm);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.optimal_value_gap = std::numeric_limits<double>::quiet_NaN();
      row.solution_distance_lp = std::numeric_limits<double>::quiet_NaN();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

ListaComparison lista_compare(const Dataset& data, const std::vector<std::size_t>& idx,
                              const LISTAParams& lista, const NetworkParams& fbs,
                              const Regularizer& reg, const ObjectiveConfig& cfg) {
  cfg.validate();
  lista.validate();
  if (idx.empty()) throw DomainError("lista_compare: empty sample slice");
  if (lista.W1.rows() != data.n || lista.W2.cols() != data.m) {
    throw DimensionError("lista_compare: LISTA weights do not match the dataset");
  }
  double fit = 0.0;
  for (const auto j : idx) {
    fit += loss(lista_forward(lista, data.x0[j], data.b[j]).terminal(), data.y[j]);
  }
  fit /= static_cast<double>(idx.size());
  const double p = cfg.pnorm;
  const double reg_lista = cfg.beta1 * cfg.psi(std::pow(lista.W1.norm(), p)) +
                           cfg.beta2 * cfg.psi(std::pow(lista.W2.norm(), p)) +
                           cfg.beta3 * cfg.psi(std::pow(std::abs(lista.theta), p));
  ListaComparison out;
  out.lista_value = fit + reg_lista;
  out.fbs_value = objective_discrete(fbs, data, idx, reg, cfg);
  return out;
}

Control sample_control(double T, std::size_t M, const ControlFn& fn) {
  if (M == 0) throw DomainError("sample_control: grid must have at least one cell");
  Control u;
  u.T = T;
  for (std::size_t j = 0; j < M; ++j) {
    const double t = (static_cast<double>(j) + 0.5) * T / static_cast<double>(M);
    auto [A, alpha, lambda] = fn(t);
    u.A.push_back(std::move(A));
    u.alpha.push_back(alpha);
    u.lambda.push_back(lambda);
  }
  u.validate();
  return u;
}

Control smooth_control(double T, std::size_t M, const Mat& A_base, double alpha0, double lambda0) {
  const double w = 2.0 * std::numbers::pi / T;
  return sample_control(T, M, [&](double t) {
    return std::make_tuple(Mat(A_base * (1.0 + 0.25 * std::sin(w * t))),
                           alpha0 * (1.0 + 0.5 * std::sin(w * t)),
                           lambda0 * (1.0 + 0.5 * std::cos(w * t)));
  });
}

const char* to_string(PerturbTarget target) {
  switch (target) {
    case PerturbTarget::X0:
      return "x0";
    case PerturbTarget::B:
      return "b";
    case PerturbTarget::Y:
      return "y";
    case PerturbTarget::All:
      return "all";
  }
  return "?";
}

PerturbTarget parse_perturb_target(const std::string& s) {
  if (s == "x0") return PerturbTarget::X0;
  if (s == "b") return PerturbTarget::B;
  if (s == "y") return PerturbTarget::Y;
  if (s == "all") return PerturbTarget::All;
  throw DomainError("unknown perturbation target '" + s + "' (expected x0, b, y or all)");
}

}  // namespace fbsnet
