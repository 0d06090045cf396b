// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "fbsnet/cli.hpp"
#include "fbsnet/csv.hpp"
#include "fbsnet/experiments.hpp"
#include "fbsnet/params_io.hpp"
#include "gradcheck.hpp"

using namespace fbsnet;
namespace fs = std::filesystem;
using fbtest::Rng;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path g_dir;

std::string path_of(const std::string& name) { return (g_dir / name).string(); }

void cli_or_throw(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  if (run(args, out, err) != 0) throw std::runtime_error(err.str());
}

const std::string kDesk = FBSNET_CONFIG_DIR "/desk.toml";

Verdict gradient_oracle() {
  Rng g(2024);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) worst = std::max(worst, fbtest::max_rel_grad_error(fbtest::make_grad_fixture(g)));
  return {worst <= 1e-5, "max relative error " + fmt("%.2e", worst) + " over 50 fixtures"};
}

Verdict operator_identity() {
  Rng g(77);
  double proj = 0.0, obj = 0.0;
  for (std::size_t N : {1, 3, 16, 257}) {
    for (int i = 0; i < 100; ++i) {
      const NetworkParams p = fbtest::rand_params(g, N, 2, 3, fbtest::uniform(g, 0.5, 2.0));
      const NetworkParams q = project_control(extend_params(p), N);
      for (std::size_t k = 0; k < N; ++k) {
        proj = std::max({proj, (q.A[k] - p.A[k]).cwiseAbs().maxCoeff(), std::abs(q.alpha[k] - p.alpha[k]),
                         std::abs(q.lambda[k] - p.lambda[k])});
      }
      if (i % 10 == 0) {
        const Dataset d = fbtest::rand_dataset(g, 2, 3, 3);
        const std::vector<std::size_t> idx{0, 1, 2};
        ObjectiveConfig c;
        c.beta1 = c.beta2 = c.beta3 = 0.01;
        const double a = objective_continuous(extend_params(p), d, idx, Regularizer::l1(), c, N);
        const double b = objective_discrete(p, d, idx, Regularizer::l1(), c);
        obj = std::max(obj, std::abs(a - b));
      }
    }
  }
  return {proj <= 1e-14 && obj <= 1e-12,
          "projection deviation " + fmt("%.1e", proj) + ", objective deviation " + fmt("%.1e", obj)};
}

Verdict deep_layer_convergence() {
  const std::string out = path_of("gamma.csv");
  cli_or_throw({"gamma-check", "--out", out});
  const CsvTable t = read_csv(out);
  const auto gaps = t.numeric_column("gap");
  const auto depths = t.numeric_column("N");
  std::vector<GammaRow> rows;
  for (std::size_t i = 0; i < gaps.size(); ++i) rows.push_back({static_cast<std::size_t>(depths[i]), 0.0, gaps[i]});
  bool monotone = gaps.size() == 5;
  for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] < gaps[i - 1];
  const double order = empirical_order(rows);
  return {monotone && gaps.back() <= 1e-3 && order >= 0.8,
          std::string(monotone ? "monotone" : "non-monotone") + " gaps, final " + fmt("%.2e", gaps.back()) +
              ", order " + fmt("%.3f", order)};
}

Verdict depth_sweep_trend() {
  const std::string out = path_of("sweep_t1.csv");
  cli_or_throw({"sweep-depth", "--config", kDesk, "--layers", "4,8,16,32", "--threads", "1", "--out", out});
  const CsvTable t = read_csv(out);
  const auto loss = t.numeric_column("final_train_data_loss");
  bool ok = loss.size() == 4;
  for (const auto& row : t.rows) ok = ok && row.back() == "ok";
  std::string detail = "losses";
  for (double l : loss) detail += " " + fmt("%.4f", l);
  for (std::size_t i = 1; i < loss.size(); ++i) ok = ok && loss[i] <= 1.05 * loss[i - 1];
  for (std::size_t i = 2; i < loss.size(); ++i) ok = ok && loss[i - 1] - loss[i] < loss[i - 2] - loss[i - 1];
  return {ok, detail};
}

Verdict stability_trend() {
  bool ok = true;
  std::string detail;
  for (const std::string target : {"x0", "b", "y"}) {
    const std::string out = path_of("stability_" + target + "_t1.csv");
    cli_or_throw({"stability", "--config", kDesk, "--target", target, "--threads", "1", "--out", out});
    const auto gap = read_csv(out).numeric_column("optimal_value_gap");
    bool t_ok = gap.size() == 7 && gap[0] == 0.0 && gap.back() <= 1e-3;
    for (std::size_t i = 2; i < gap.size(); ++i) t_ok = t_ok && gap[i] <= 1.1 * gap[i - 1];
    ok = ok && t_ok;
    detail += (detail.empty() ? "" : ", ") + target + (t_ok ? " ok" : " FAIL") + " (smallest " +
              fmt("%.2e", gap.back()) + ")";
  }
  return {ok, detail};
}

const Regularizer kRegs[] = {Regularizer::l1(), Regularizer::l1(0.7), Regularizer::squared_l2(),
                             Regularizer::squared_l2(2.5), Regularizer::zero()};

Verdict prox_suite() {
  Rng g(6);
  double expansion = 0.0, origin = 0.0, convexity = 0.0;
  bool shrinking = true;
  for (const auto& reg : kRegs) {
    for (int i = 0; i < 1000; ++i) {
      const double rho = fbtest::uniform(g, 0.0, 3.0);
      const Vec v = fbtest::rand_vec(g, 7, -4, 4), w = fbtest::rand_vec(g, 7, -4, 4);
      expansion = std::max(expansion, (prox(reg, rho, v) - prox(reg, rho, w)).norm() - (v - w).norm());
    }
    for (double rho : {0.0, 0.1, 1.0, 10.0}) origin = std::max(origin, prox(reg, rho, Vec::Zero(6)).norm());
    const Vec v = fbtest::rand_vec(g, 10, -3, 3);
    const double rho = 1.0;
    double prev = INFINITY;
    auto f = [&](double r, const Vec& x) { return reg.value(x) + (x - v).squaredNorm() / (2.0 * r); };
    for (double d : {1e-1, 1e-2, 1e-3}) {
      const double gap = prox_rho_continuity_gap(reg, rho, d, v);
      shrinking = shrinking && gap <= prev;
      prev = gap;
      const Vec x0 = prox(reg, rho, v), x1 = prox(reg, rho + d, v);
      convexity = std::max(convexity, (x1 - x0).squaredNorm() / (2.0 * rho) - (f(rho, x1) - f(rho, x0)));
    }
  }
  return {expansion <= 1e-12 && origin == 0.0 && convexity <= 1e-12 && shrinking,
          "worst expansion " + fmt("%.1e", expansion) + ", strong-convexity slack " + fmt("%.1e", convexity)};
}

Verdict forward_envelope() {
  Rng g(31);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t N = 1 + static_cast<std::size_t>(trial % 16);
    NetworkParams p = fbtest::rand_params(g, N, 3, 6, fbtest::uniform(g, 0.2, 3.0));
    for (auto& a : p.alpha) a = fbtest::uniform(g, 0.0, 4.0);
    double MA = 0.0, Ma = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      MA = std::max(MA, spectral_norm(p.A[k]));
      Ma = std::max(Ma, p.alpha[k]);
    }
    const Vec x0 = fbtest::rand_vec(g, 6, -2, 2), b = fbtest::rand_vec(g, 3, -2, 2);
    const double e = std::exp(Ma * MA * MA * p.T);
    const double bound = x0.norm() * e + Ma * MA * p.T * b.norm() * e;
    const Regularizer& reg = kRegs[trial % 5];
    for (const auto& s : fbs_forward(p, x0, b, reg).states) worst = std::max(worst, s.norm() / bound);
  }
  return {worst <= 1.0 + 1e-12, "largest state/bound ratio " + fmt("%.3f", worst)};
}

Verdict determinism() {
  std::vector<std::string> diffs;
  auto compare = [&](const std::string& a, const std::string& b) {
    if (read_file(a) != read_file(b)) diffs.push_back(fs::path(b).filename().string());
  };
  cli_or_throw({"sweep-depth", "--config", kDesk, "--layers", "4,8,16,32", "--threads", "4", "--out",
                path_of("sweep_t4.csv")});
  compare(path_of("sweep_t1.csv"), path_of("sweep_t4.csv"));
  cli_or_throw({"gamma-check", "--threads", "4", "--out", path_of("gamma_t4.csv")});
  compare(path_of("gamma.csv"), path_of("gamma_t4.csv"));
  cli_or_throw({"stability", "--config", kDesk, "--target", "y", "--threads", "4", "--out",
                path_of("stability_y_t4.csv")});
  compare(path_of("stability_y_t1.csv"), path_of("stability_y_t4.csv"));
  std::string detail = "sweep, gamma and stability CSVs with 1 vs 4 threads";
  for (const auto& d : diffs) detail += "; differs: " + d;
  return {diffs.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  g_dir = fs::temp_directory_path() / ("fbsnet_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(g_dir);

  const std::vector<Criterion> criteria{
      {1, "gradient oracle", 10, gradient_oracle},
      {2, "operator identity", 60, operator_identity},
      {3, "deep-layer convergence", 30, deep_layer_convergence},
      {4, "depth sweep trend", 300, depth_sweep_trend},
      {5, "stability", 600, stability_trend},
      {6, "prox properties", 5, prox_suite},
      {7, "forward bound envelope", 5, forward_envelope},
      {8, "determinism", 1200, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_s) {
      v.pass = false;
      v.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    if (!v.detail.empty() && v.detail.back() == '\n') v.detail.pop_back();
    std::cout << "C" << c.id << " " << (v.pass ? "PASS" : "FAIL") << " " << c.name << ": " << v.detail
              << " [" << fmt("%.1f", secs) << " s]" << std::endl;
    failures += v.pass ? 0 : 1;
  }
  fs::remove_all(g_dir);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
