#include "fbsnet/cli.hpp"

#include <chrono>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fbsnet/config.hpp"
#include "fbsnet/csv.hpp"
#include "fbsnet/experiments.hpp"
#include "fbsnet/manifest.hpp"
#include "fbsnet/parallel.hpp"
#include "fbsnet/params_io.hpp"
#include "fbsnet/report.hpp"
#include "fbsnet/svg.hpp"

namespace fbsnet {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
      out += c;
    } else if (c == '\n') {
      out += "\\n";
    } else {
      out += c;
    }
  }
  return out;
}

int report_error(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << "error kind=" << kind << " message=\"" << escape(message) << "\"\n";
  return code;
}

// Values of every flag; which ones were given is tracked through the
// returned CLI::Option pointers.
struct Flags {
  std::string config;
  std::string out;
  std::string data;
  std::size_t threads = 0;

  Eigen::Index m = 0;
  Eigen::Index n = 0;
  std::size_t train = 0;
  std::size_t val = 0;
  double sparsity = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> layers;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double r0 = 0.0;
  std::string curve;

  std::string params;
  std::size_t nref = kDefaultNRef;

  std::string target;
  int first = 0;
  int last = 0;
  std::string mode;
  std::size_t depth = 0;
  std::uint64_t direction_seed = 0;

  std::string in;
  std::string x;
  std::vector<std::string> y;
  std::string title;
  bool log_y = false;
};

struct Given {
  std::multimap<std::string, CLI::Option*> opts;
  void put(const std::string& name, CLI::Option* opt) { opts.emplace(name, opt); }
  bool has(const std::string& name) const {
    auto [lo, hi] = opts.equal_range(name);
    for (auto it = lo; it != hi; ++it) {
      if (it->second->count() > 0) return true;
    }
    return false;
  }
};

template <typename T>
void add(CLI::App* sub, Given& g, const std::string& name, T& var, const std::string& desc) {
  g.put(name, sub->add_option("--" + name, var, desc));
}

void add_common(CLI::App* sub, Given& g, Flags& f, bool with_config = true) {
  if (with_config) add(sub, g, "config", f.config, "Config file (TOML subset, JSON or run manifest)");
  add(sub, g, "threads", f.threads, "Worker cap; falls back to FBS_UNROLL_THREADS");
  g.put("out", sub->add_option("--out", f.out, "Output path")->required());
}

void add_training(CLI::App* sub, Given& g, Flags& f) {
  add(sub, g, "data", f.data, "Dataset file (generated from [data] when absent)");
  add(sub, g, "epochs", f.epochs, "Training epochs");
  add(sub, g, "batch-size", f.batch_size, "Minibatch size");
  add(sub, g, "r0", f.r0, "Base learning rate");
  add(sub, g, "seed", f.seed, "Training seed");
}

std::size_t levenshtein_impl(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Rejects flags the subcommand does not know, naming the closest one.
void check_flags(const CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return;
  const CLI::App* sub = nullptr;
  for (const auto* s : app.get_subcommands({})) {
    if (s->get_name() == args[0]) sub = s;
  }
  if (!sub) return;
  std::vector<std::string> known{"help"};
  for (const auto* opt : sub->get_options({})) {
    for (const auto& name : opt->get_lnames()) known.push_back(name);
  }
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.size() < 3 || a.rfind("--", 0) != 0) continue;
    const std::string name = a.substr(2, a.find('=') == std::string::npos ? std::string::npos
                                                                          : a.find('=') - 2);
    if (std::find(known.begin(), known.end(), name) != known.end()) continue;
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& k : known) {
      const std::size_t d = levenshtein_impl(name, k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    std::string msg = "unknown flag --" + name + " for " + sub->get_name();
    if (best_d <= std::max<std::size_t>(2, name.size() / 3)) msg += " (did you mean --" + best + "?)";
    throw UsageError(msg);
  }
}

RunConfig resolve_config(const Flags& f, const Given& g) {
  RunConfig cfg;
  if (g.has("config")) cfg = load_config(f.config);
  if (g.has("data")) cfg.data.path = f.data;
  if (g.has("m")) cfg.data.m = f.m;
  if (g.has("n")) cfg.data.n = f.n;
  if (g.has("train")) cfg.data.train = f.train;
  if (g.has("val")) cfg.data.val = f.val;
  if (g.has("sparsity")) cfg.data.sparsity = f.sparsity;
  if (g.has("noise")) cfg.data.noise = f.noise;
  if (g.has("threads")) cfg.train.threads = f.threads;
  if (g.has("epochs")) cfg.train.epochs = f.epochs;
  if (g.has("batch-size")) cfg.train.batch_size = f.batch_size;
  if (g.has("r0")) cfg.train.r0 = f.r0;
  if (g.has("target")) cfg.stability.target = f.target;
  if (g.has("first")) cfg.stability.first_exp = f.first;
  if (g.has("last")) cfg.stability.last_exp = f.last;
  if (g.has("mode")) cfg.stability.mode = f.mode;
  if (g.has("depth")) cfg.stability.depth = f.depth;
  if (g.has("direction-seed")) cfg.stability.direction_seed = f.direction_seed;
  if (g.has("stability-epochs")) cfg.stability.epochs = f.epochs;
  if (g.has("stability-batch-size")) cfg.stability.batch_size = f.batch_size;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

Dataset obtain_data(const RunConfig& cfg, std::ostream& err) {
  Dataset d;
  if (!cfg.data.path.empty()) {
    d = load_dataset(cfg.data.path);
  } else {
    d = gen_dataset(cfg.data.m, cfg.data.n, cfg.data.train, cfg.data.val, cfg.data.sparsity,
                    cfg.data.noise, cfg.data.seed);
  }
  if (d.m > d.n) {
    err << "warning: m = " << d.m << " exceeds n = " << d.n
        << ", outside the compressed-sensing regime\n";
  }
  return d;
}

ProblemInstance make_instance(const RunConfig& cfg, Dataset data) {
  ProblemInstance inst;
  inst.data = std::move(data);
  inst.reg = cfg.reg;
  inst.objective = cfg.objective;
  inst.train = cfg.train;
  inst.T = cfg.network.T;
  return inst;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class Session {
 public:
  Session(std::string command, const std::vector<std::string>& args, const RunConfig& cfg,
          const std::string& out)
      : path_(manifest_path(out)) {
    m_.command = std::move(command);
    m_.argv = args;
    m_.config = config_to_json(cfg);
    m_.config_hash = config_hash(m_.config);
    m_.started_utc = utc_timestamp();
    m_.code_version = code_version();
    m_.rerun_argv = {m_.command, "--config", path_.string(), "--out", out};
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // A run that throws after begin() is recorded as failed.
  ~Session() {
    if (!begun_ || m_.status != "running") return;
    try {
      finish("failed");
    } catch (...) {
    }
  }

  RunManifest& manifest() { return m_; }
  std::string manifest_name() const { return path_.filename().string(); }

  void rerun_arg(const std::string& flag, const std::string& value) {
    m_.rerun_argv.push_back(flag);
    m_.rerun_argv.push_back(value);
  }
  void output(const std::string& p) { m_.outputs.push_back(p); }

  // Before any result is written.
  void begin() {
    write_manifest(m_, path_);
    begun_ = true;
  }

  void finish(const std::string& status) {
    m_.status = status;
    m_.finished_utc = utc_timestamp();
    write_manifest(m_, path_);
  }

 private:
  fs::path path_;
  RunManifest m_;
  bool begun_ = false;
};

json manifest_ref(const Session& s) { return {{"manifest", s.manifest_name()}}; }

int cmd_gen_data(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
                 std::ostream& out, std::ostream& err) {
  Session s("gen-data", args, cfg, f.out);
  s.manifest().seed = cfg.data.seed;
  s.output(f.out);
  s.output(header_path(f.out).string());
  s.begin();
  RunConfig gen = cfg;
  gen.data.path.clear();
  const Dataset d = obtain_data(gen, err);
  save_dataset(d, f.out, manifest_ref(s));
  s.finish("ok");
  out << "wrote " << f.out << " (" << d.train_count << " train, " << d.val_count
      << " val samples)\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err) {
  const std::string curve_path = f.curve.empty() ? f.out + ".curve.csv" : f.curve;
  Session s("train", args, cfg, f.out);
  s.manifest().seed = cfg.train.seed;
  s.rerun_arg("--layers", std::to_string(cfg.network.layers));
  if (!f.curve.empty()) s.rerun_arg("--curve", f.curve);
  s.output(f.out);
  s.output(header_path(f.out).string());
  s.output(curve_path);
  s.begin();

  const Dataset data = obtain_data(cfg, err);
  if (data.meta.A_true.size() == 0) {
    throw DomainError("train: dataset carries no measurement matrix for initialization");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkParams p0 = init_params(cfg.network.layers, cfg.network.T, data.meta.A_true, cfg.train);
  const TrainResult r = sgd_train(p0, data, cfg.reg, cfg.objective, cfg.train);
  write_csv(curve_path, curve_table(r.curve));
  save_params(r.params, f.out, manifest_ref(s));
  s.manifest().results = {{"wall_time", seconds_since(t0)},
                          {"final_train_data_loss", r.curve.back().train_data_loss}};
  s.finish("ok");
  out << "wrote " << f.out << " and " << curve_path << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err) {
  Session s("sweep-depth", args, cfg, f.out);
  s.manifest().seed = cfg.train.seed;
  s.output(f.out);
  if (!f.curve.empty()) {
    s.rerun_arg("--curves", f.curve);
    s.output(f.curve);
  }
  s.begin();

  const ProblemInstance inst = make_instance(cfg, obtain_data(cfg, err));
  const SweepResult r = depth_sweep(cfg.sweep.layers, inst);
  write_csv(f.out, sweep_table(r));
  if (!f.curve.empty()) write_csv(f.curve, sweep_curves_table(r));
  json times = json::array();
  std::string failure;
  for (const auto& row : r.rows) {
    times.push_back({{"N", row.N}, {"wall_time", row.wall_time}});
    if (!row.ok && failure.empty()) failure = "N=" + std::to_string(row.N) + ": " + row.error;
  }
  s.manifest().results = {{"rows", times}};
  s.finish(failure.empty() ? "ok" : "partial");
  out << "wrote " << f.out << " (" << r.rows.size() << " rows)\n";
  if (!failure.empty()) throw NumericError(failure);
  return kExitOk;
}

int cmd_limit_eval(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
                   std::ostream& out, std::ostream& err) {
  Session s("limit-eval", args, cfg, f.out);
  s.rerun_arg("--params", f.params);
  s.rerun_arg("--nref", std::to_string(f.nref));
  s.output(f.out);
  s.begin();

  const json h = read_header(f.params);
  const std::string type = h.value("type", "");
  Control u;
  if (type == "network_params") {
    u = extend_params(load_params(f.params));
  } else if (type == "control") {
    u = load_control(f.params);
  } else {
    throw IoError(header_path(f.params).string() + " is neither network parameters nor a control");
  }
  if (f.nref < 2) throw DomainError("limit-eval: --nref must be >= 2");
  const Dataset data = obtain_data(cfg, err);
  const auto idx = data.train_indices();
  const std::size_t threads = cfg.train.threads;
  const double fine = objective_continuous(u, data, idx, cfg.reg, cfg.objective, f.nref, threads);
  const double coarse =
      objective_continuous(u, data, idx, cfg.reg, cfg.objective, f.nref / 2, threads);
  CsvTable t;
  t.header = {"N_ref", "objective_continuous", "err_est"};
  t.rows.push_back({std::to_string(effective_nref(f.nref, u.grid())), format_double(fine),
                    format_double(std::abs(fine - coarse))});
  write_csv(f.out, t);
  s.finish("ok");
  out << "objective_continuous " << format_double(fine) << "\n";
  return kExitOk;
}

int cmd_gamma(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
              std::ostream& out, std::ostream&) {
  const GammaConfig& g = cfg.gamma;
  Session s("gamma-check", args, cfg, f.out);
  s.manifest().seed = g.seed;
  s.output(f.out);
  s.begin();

  const Dataset data =
      gen_dataset(g.m, g.n, g.samples, 0, cfg.data.sparsity, cfg.data.noise, g.seed);
  const Control target =
      smooth_control(cfg.network.T, g.grid, data.meta.A_true, g.alpha0, g.lambda0);
  const GammaResult r = gamma_check(target, g.layers, data, data.train_indices(), cfg.reg,
                                    cfg.objective, g.nref, resolve_threads(cfg.train.threads));
  write_csv(f.out, gamma_table(r));
  const double order = empirical_order(r.rows);
  s.manifest().results = {{"reference", r.reference}, {"err_est", r.err_est}, {"order", order}};
  s.finish("ok");
  out << "reference " << format_double(r.reference) << ", empirical order "
      << format_double(order) << "\n";
  return kExitOk;
}

int cmd_stability(const RunConfig& cfg, const Flags& f, const std::vector<std::string>& args,
                  std::ostream& out, std::ostream& err) {
  const StabilityConfig& st = cfg.stability;
  Session s("stability", args, cfg, f.out);
  s.manifest().seed = cfg.train.seed;
  s.output(f.out);
  s.begin();

  ProblemInstance inst = make_instance(cfg, obtain_data(cfg, err));
  inst.train.epochs = st.epochs;
  inst.train.batch_size = st.batch_size == 0 ? inst.data.train_count : st.batch_size;
  const auto sched = PerturbationSchedule::geometric(parse_perturb_target(st.target), st.first_exp,
                                                     st.last_exp, st.direction_seed);
  StabilityMode mode;
  mode.kind = st.mode == "continuous" ? StabilityMode::Kind::Continuous
                                      : StabilityMode::Kind::Discrete;
  mode.depth = st.depth;
  const StabilityResult r = stability_run(inst, sched, mode);
  write_csv(f.out, stability_table(r));
  std::string failure;
  for (const auto& row : r.rows) {
    if (!row.ok && failure.empty()) failure = "r=" + std::to_string(row.r) + ": " + row.error;
  }
  s.manifest().results = {{"base_value", r.base_value}};
  s.finish(failure.empty() ? "ok" : "partial");
  out << "wrote " << f.out << " (" << r.rows.size() << " rows)\n";
  if (!failure.empty()) throw NumericError(failure);
  return kExitOk;
}

int cmd_plot(const Flags& f, const std::vector<std::string>& args, std::ostream& out) {
  Session s("plot", args, RunConfig{}, f.out);
  s.manifest().rerun_argv = {"plot", "--in", f.in, "--out", f.out, "--x", f.x};
  for (const auto& y : f.y) s.rerun_arg("--y", y);
  if (!f.title.empty()) s.rerun_arg("--title", f.title);
  if (f.log_y) s.manifest().rerun_argv.push_back("--log-y");
  s.output(f.out);
  s.begin();

  const CsvTable t = read_csv(f.in);
  std::vector<Series> series;
  std::vector<double> xs;
  try {
    xs = t.numeric_column(f.x);
    for (const auto& y : f.y) series.push_back({y, xs, t.numeric_column(y)});
  } catch (const std::exception& e) {
    throw UsageError(f.in + ": " + e.what());
  }
  ChartOptions opts;
  opts.title = f.title.empty() ? fs::path(f.in).filename().string() : f.title;
  opts.x_label = f.x;
  opts.y_label = f.y.size() == 1 ? f.y.front() : "value";
  opts.log_y = f.log_y;
  std::string svg = line_chart_svg(series, opts);
  const std::string ref = "<!-- manifest: " + s.manifest_name() + " -->\n";
  const auto pos = svg.find("<svg");
  svg.insert(pos == std::string::npos ? 0 : pos, ref);
  write_file_atomic(f.out, svg);
  s.finish("ok");
  out << "wrote " << f.out << "\n";
  return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unrolled forward-backward splitting networks: data, training and experiments",
               "fbsnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(code_version()));
  Flags f;
  Given g;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic sparse-recovery dataset");
  add_common(gen, g, f);
  add(gen, g, "m", f.m, "Measurements per sample");
  add(gen, g, "n", f.n, "Signal dimension");
  add(gen, g, "train", f.train, "Training samples");
  add(gen, g, "val", f.val, "Validation samples");
  add(gen, g, "sparsity", f.sparsity, "Fraction of nonzero signal entries");
  add(gen, g, "noise", f.noise, "Observation noise standard deviation");
  add(gen, g, "seed", f.seed, "Data seed");

  std::size_t train_layers = 0;
  auto* train = app.add_subcommand("train", "Train one network");
  add_common(train, g, f);
  add_training(train, g, f);
  g.put("layers", train->add_option("--layers", train_layers, "Network depth N"));
  add(train, g, "curve", f.curve, "Training curve CSV (default <out>.curve.csv)");

  auto* sweep = app.add_subcommand("sweep-depth", "Train one network per depth");
  add_common(sweep, g, f);
  add_training(sweep, g, f);
  g.put("layers-list", sweep->add_option("--layers", f.layers, "Comma-separated depths")->delimiter(','));
  add(sweep, g, "curves", f.curve, "Optional CSV with every training curve");

  auto* limit = app.add_subcommand("limit-eval", "Continuous-time objective of a parameter file");
  add_common(limit, g, f);
  add(limit, g, "data", f.data, "Dataset file (generated from [data] when absent)");
  g.put("params", limit->add_option("--params", f.params, "Parameters or control file")->required());
  add(limit, g, "nref", f.nref, "Fine-grid depth");

  std::size_t gamma_nref = 0;
  auto* gamma = app.add_subcommand("gamma-check", "Depth-refinement consistency study");
  add_common(gamma, g, f);
  g.put("gamma-layers", gamma->add_option("--layers", f.layers, "Comma-separated depths")->delimiter(','));
  g.put("gamma-nref", gamma->add_option("--nref", gamma_nref, "Reference depth"));

  auto* stab = app.add_subcommand("stability", "Perturbation study of the trained optimum");
  add_common(stab, g, f);
  add(stab, g, "data", f.data, "Dataset file (generated from [data] when absent)");
  g.put("stability-epochs", stab->add_option("--epochs", f.epochs, "Training epochs per run"));
  g.put("stability-batch-size",
        stab->add_option("--batch-size", f.batch_size, "Minibatch size (0: full batch)"));
  add(stab, g, "r0", f.r0, "Base learning rate");
  add(stab, g, "seed", f.seed, "Training seed");
  add(stab, g, "target", f.target, "x0, b, y or all");
  add(stab, g, "first", f.first, "Largest magnitude 2^-first");
  add(stab, g, "last", f.last, "Smallest magnitude 2^-last");
  add(stab, g, "mode", f.mode, "discrete or continuous");
  add(stab, g, "depth", f.depth, "Network depth, or fine-grid depth in continuous mode");
  add(stab, g, "direction-seed", f.direction_seed, "Seed of the perturbation direction");

  auto* plot = app.add_subcommand("plot", "Line chart of CSV columns as SVG");
  g.put("out", plot->add_option("--out", f.out, "Output SVG")->required());
  plot->add_option("--in", f.in, "Input CSV")->required();
  plot->add_option("--x", f.x, "Column for the x axis")->required();
  plot->add_option("--y", f.y, "Column(s) for the y axis")->required()->delimiter(',');
  plot->add_option("--title", f.title, "Chart title");
  plot->add_flag("--log-y", f.log_y, "Logarithmic y axis");

  check_flags(app, args);
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (plot->parsed()) return cmd_plot(f, args, out);

  RunConfig cfg = resolve_config(f, g);
  if (gen->parsed()) {
    if (g.has("seed")) cfg.data.seed = f.seed;
    return cmd_gen_data(cfg, f, args, out, err);
  }
  if (g.has("seed")) cfg.train.seed = f.seed;
  if (train->parsed()) {
    if (g.has("layers")) cfg.network.layers = train_layers;
    if (cfg.network.layers == 0) throw UsageError("--layers must be >= 1");
    return cmd_train(cfg, f, args, out, err);
  }
  if (sweep->parsed()) {
    if (g.has("layers-list")) cfg.sweep.layers = f.layers;
    cfg.validate();
    return cmd_sweep(cfg, f, args, out, err);
  }
  if (limit->parsed()) return cmd_limit_eval(cfg, f, args, out, err);
  if (gamma->parsed()) {
    if (g.has("gamma-layers")) cfg.gamma.layers = f.layers;
    if (g.has("gamma-nref")) cfg.gamma.nref = gamma_nref;
    cfg.validate();
    return cmd_gamma(cfg, f, args, out, err);
  }
  if (stab->parsed()) return cmd_stability(cfg, f, args, out, err);
  throw UsageError("no subcommand given");
}

}  // namespace

std::size_t levenshtein(const std::string& a, const std::string& b) {
  return levenshtein_impl(a, b);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const UsageError& e) {
    return report_error(err, "usage", e.what(), kExitUsage);
  } catch (const ConfigError& e) {
    return report_error(err, "config", e.what(), kExitUsage);
  } catch (const IoError& e) {
    return report_error(err, "io", e.what(), kExitUsage);
  } catch (const NumericError& e) {
    return report_error(err, "numeric", e.what(), kExitNumeric);
  } catch (const DomainError& e) {
    return report_error(err, "domain", e.what(), kExitUsage);
  } catch (const DimensionError& e) {
    return report_error(err, "dimension", e.what(), kExitUsage);
  } catch (const std::exception& e) {
    return report_error(err, "internal", e.what(), kExitUsage);
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace fbsnet
