#include "fbsnet/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "fbsnet/params_io.hpp"

namespace fbsnet {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

class TomlLine {
 public:
  TomlLine(std::string_view text, const std::string& source, int line)
      : text_(text), source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }

  json value() {
    skip_ws();
    json v = scalar_or_array();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  json scalar_or_array() {
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '[') return array();
    if (c == '"') return string();
    return bare();
  }

  json array() {
    ++pos_;
    json arr = json::array();
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      skip_ws();
      arr.push_back(scalar_or_array());
      skip_ws();
      if (pos_ >= text_.size()) fail("unterminated array");
      if (text_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      if (text_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json string() {
    ++pos_;
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (pos_ >= text_.size()) break;
        const char e = text_[pos_++];
        switch (e) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    fail("unterminated string");
  }

  json bare() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    std::string tok(text_.substr(start, pos_ - start));
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok) {
      if (ch != '_') digits += ch;
    }
    const bool integral = digits.find_first_of(".eEinfa") == std::string::npos;
    if (integral) {
      long long v = 0;
      const auto* first = digits.data() + (digits.starts_with('+') ? 1 : 0);
      const auto* last = digits.data() + digits.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec == std::errc() && ptr == last && first != last) return v;
    } else {
      try {
        std::size_t used = 0;
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      } catch (const std::exception&) {
      }
    }
    fail("cannot parse value '" + tok + "'");
  }

  std::string_view text_;
  const std::string& source_;
  int line_;
  std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_string) {
      ++i;
      continue;
    }
    if (c == '"') in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// Reads keys from one section and remembers which were consumed.
class Section {
 public:
  Section(const json& root, std::string name, const std::map<std::string, int>& lines,
          const std::string& source)
      : name_(std::move(name)), lines_(lines), source_(source) {
    if (root.contains(name_)) {
      obj_ = &root.at(name_);
      if (!obj_->is_object()) throw ConfigError(where("") + "section '" + name_ + "' must be a table");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!obj_ || !obj_->contains(key)) return;
    seen_.insert(key);
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("expected a number");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("expected a string");
        out = v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
        if (!v.is_array()) throw ConfigError("expected an array of integers");
        out.clear();
        for (const auto& e : v) {
          if (!e.is_number_integer() || e.get<long long>() < 0) {
            throw ConfigError("expected nonnegative integers");
          }
          out.push_back(e.get<std::size_t>());
        }
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.get<long long>() < 0 && !v.is_number_unsigned()) {
            throw ConfigError("expected a nonnegative integer");
          }
        }
        out = v.get<T>();
      } else {
        static_assert(sizeof(T) == 0, "unsupported config value type");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where(key) + name_ + "." + key + ": " + e.what());
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + name_ + "." + key + ": " + e.what());
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [key, _] : obj_->items()) {
      if (!seen_.count(key)) {
        throw ConfigError(where(key) + "unknown key '" + name_ + "." + key + "'");
      }
    }
  }

 private:
  std::string where(const std::string& key) const {
    auto it = lines_.find(name_ + "." + key);
    if (it == lines_.end()) return source_ + ": ";
    return source_ + ":" + std::to_string(it->second) + ": ";
  }

  const json* obj_ = nullptr;
  std::string name_;
  const std::map<std::string, int>& lines_;
  const std::string& source_;
  std::set<std::string> seen_;
};

template <typename Fn>
void check(bool ok, Fn&& message) {
  if (!ok) throw ConfigError(message());
}

}  // namespace

TomlDocument parse_toml(std::string_view text, const std::string& source) {
  TomlDocument doc;
  std::string section;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    ++line_no;
    const std::string line = trim(strip_comment(std::string(text.substr(start, end - start))));
    start = end + 1;
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!valid_name(section)) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": invalid section name");
      }
      if (doc.root.contains(section)) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate section [" +
                          section + "]");
      }
      doc.root[section] = json::object();
      doc.lines[section + "."] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!valid_name(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": invalid key '" + key + "'");
    }
    if (section.empty()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": key '" + key +
                        "' outside of any [section]");
    }
    TomlLine parser(std::string_view(line).substr(eq + 1), source, line_no);
    json value = parser.value();
    if (doc.root[section].contains(key)) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": duplicate key '" + section +
                        "." + key + "'");
    }
    doc.root[section][key] = std::move(value);
    doc.lines[section + "." + key] = line_no;
    if (end == text.size()) break;
  }
  return doc;
}

void RunConfig::validate() const {
  check(data.m > 0 && data.n > 0, [] { return "data.m and data.n must be > 0"; });
  check(data.train > 0, [] { return "data.train must be > 0"; });
  check(data.sparsity > 0.0 && data.sparsity <= 1.0,
        [] { return "data.sparsity must lie in (0, 1]"; });
  check(data.noise >= 0.0, [] { return "data.noise must be >= 0"; });
  check(network.T > 0.0, [] { return "network.T must be > 0"; });
  check(network.layers > 0, [] { return "network.layers must be >= 1"; });
  check(reg.scale > 0.0, [] { return "regularizer.scale must be > 0"; });
  check(objective.beta1 >= 0.0, [] { return "beta1 must be >= 0"; });
  check(objective.beta2 >= 0.0, [] { return "beta2 must be >= 0"; });
  check(objective.beta3 >= 0.0, [] { return "beta3 must be >= 0"; });
  check(objective.pnorm >= 1.0, [] { return "objective.pnorm must be >= 1"; });
  check(objective.psi.c >= 0.0, [] { return "objective.psi_scale must be >= 0"; });
  check(train.batch_size > 0, [] { return "train.batch_size must be >= 1"; });
  check(train.r0 >= 0.0, [] { return "train.r0 must be >= 0"; });
  check(train.momentum >= 0.0 && train.momentum < 1.0,
        [] { return "train.momentum must lie in [0, 1)"; });
  check(train.alpha_max > 0.0, [] { return "train.alpha_max must be > 0"; });
  check(train.lambda_max > 0.0, [] { return "train.lambda_max must be > 0"; });
  check(train.alpha0 >= 0.0 && train.alpha0 <= train.alpha_max,
        [] { return "train.alpha0 must lie in [0, alpha_max]"; });
  check(train.lambda0 >= 0.0 && train.lambda0 <= train.lambda_max,
        [] { return "train.lambda0 must lie in [0, lambda_max]"; });
  auto increasing = [](const std::vector<std::size_t>& v) {
    if (v.empty() || v.front() == 0) return false;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (v[i] <= v[i - 1]) return false;
    }
    return true;
  };
  check(increasing(sweep.layers),
        [] { return "sweep.layers must be a nonempty, strictly increasing list of depths >= 1"; });
  check(increasing(gamma.layers),
        [] { return "gamma.layers must be a nonempty, strictly increasing list of depths >= 1"; });
  check(gamma.nref > gamma.layers.back(), [] { return "gamma.nref must exceed every gamma.layers entry"; });
  check(gamma.grid > 0 && gamma.samples > 0 && gamma.m > 0 && gamma.n > 0,
        [] { return "gamma.grid, gamma.samples, gamma.m and gamma.n must be > 0"; });
  check(stability.first_exp <= stability.last_exp,
        [] { return "stability.first_exp must be <= stability.last_exp"; });
  check(stability.mode == "discrete" || stability.mode == "continuous",
        [] { return "stability.mode must be \"discrete\" or \"continuous\""; });
  check(stability.depth > 0, [] { return "stability.depth must be >= 1"; });
  try {
    parse_perturb_target(stability.target);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("stability.target: ") + e.what());
  }
}

RunConfig config_from_json(const json& root, const std::map<std::string, int>& lines,
                           const std::string& source) {
  if (!root.is_object()) throw ConfigError(source + ": top level must be a table of sections");
  static const std::set<std::string> kSections = {"data",  "network", "regularizer", "objective",
                                                  "train", "sweep",   "gamma",       "stability"};
  for (const auto& [name, _] : root.items()) {
    if (!kSections.count(name)) {
      auto it = lines.find(name + ".");
      const std::string at =
          it == lines.end() ? source + ": " : source + ":" + std::to_string(it->second) + ": ";
      throw ConfigError(at + "unknown section '" + name + "'");
    }
  }

  RunConfig cfg;
  {
    Section s(root, "data", lines, source);
    s.get("path", cfg.data.path);
    s.get("m", cfg.data.m);
    s.get("n", cfg.data.n);
    s.get("train", cfg.data.train);
    s.get("val", cfg.data.val);
    s.get("sparsity", cfg.data.sparsity);
    s.get("noise", cfg.data.noise);
    s.get("seed", cfg.data.seed);
    s.finish();
  }
  {
    Section s(root, "network", lines, source);
    s.get("T", cfg.network.T);
    s.get("layers", cfg.network.layers);
    s.finish();
  }
  {
    Section s(root, "regularizer", lines, source);
    std::string kind = "l1";
    s.get("kind", kind);
    s.get("scale", cfg.reg.scale);
    s.finish();
    try {
      cfg.reg = json{{"kind", kind}, {"scale", cfg.reg.scale}}.get<Regularizer>();
    } catch (const DomainError& e) {
      throw ConfigError(source + ": regularizer: " + e.what());
    }
  }
  {
    Section s(root, "objective", lines, source);
    s.get("beta1", cfg.objective.beta1);
    s.get("beta2", cfg.objective.beta2);
    s.get("beta3", cfg.objective.beta3);
    s.get("pnorm", cfg.objective.pnorm);
    std::string psi = "identity";
    s.get("psi", psi);
    s.get("psi_scale", cfg.objective.psi.c);
    s.finish();
    if (psi == "identity") {
      cfg.objective.psi.kind = Psi::Kind::Identity;
    } else if (psi == "scaled") {
      cfg.objective.psi.kind = Psi::Kind::Scaled;
    } else {
      throw ConfigError(source + ": objective.psi must be \"identity\" or \"scaled\"");
    }
  }
  {
    Section s(root, "train", lines, source);
    s.get("epochs", cfg.train.epochs);
    s.get("batch_size", cfg.train.batch_size);
    s.get("r0", cfg.train.r0);
    s.get("momentum", cfg.train.momentum);
    std::vector<std::size_t> exps{static_cast<std::size_t>(cfg.train.lr_exp_A),
                                  static_cast<std::size_t>(cfg.train.lr_exp_alpha),
                                  static_cast<std::size_t>(cfg.train.lr_exp_lambda)};
    s.get("lr_exponents", exps);
    if (exps.size() != 3) {
      throw ConfigError(source + ": train.lr_exponents must list three exponents (A, alpha, lambda)");
    }
    cfg.train.lr_exp_A = static_cast<int>(exps[0]);
    cfg.train.lr_exp_alpha = static_cast<int>(exps[1]);
    cfg.train.lr_exp_lambda = static_cast<int>(exps[2]);
    s.get("seed", cfg.train.seed);
    s.get("alpha_max", cfg.train.alpha_max);
    s.get("lambda_max", cfg.train.lambda_max);
    s.get("alpha0", cfg.train.alpha0);
    s.get("lambda0", cfg.train.lambda0);
    std::string init = "orth_transpose";
    s.get("A_init", init);
    s.get("threads", cfg.train.threads);
    s.finish();
    if (init == "orth_transpose") {
      cfg.train.A_init = AInit::OrthTranspose;
    } else if (init == "given") {
      cfg.train.A_init = AInit::Given;
    } else {
      throw ConfigError(source + ": train.A_init must be \"orth_transpose\" or \"given\"");
    }
  }
  {
    Section s(root, "sweep", lines, source);
    s.get("layers", cfg.sweep.layers);
    s.finish();
  }
  {
    Section s(root, "gamma", lines, source);
    s.get("layers", cfg.gamma.layers);
    s.get("nref", cfg.gamma.nref);
    s.get("grid", cfg.gamma.grid);
    s.get("m", cfg.gamma.m);
    s.get("n", cfg.gamma.n);
    s.get("samples", cfg.gamma.samples);
    s.get("seed", cfg.gamma.seed);
    s.get("alpha0", cfg.gamma.alpha0);
    s.get("lambda0", cfg.gamma.lambda0);
    s.finish();
  }
  {
    Section s(root, "stability", lines, source);
    s.get("target", cfg.stability.target);
    s.get("first_exp", cfg.stability.first_exp);
    s.get("last_exp", cfg.stability.last_exp);
    s.get("direction_seed", cfg.stability.direction_seed);
    s.get("mode", cfg.stability.mode);
    s.get("depth", cfg.stability.depth);
    s.get("epochs", cfg.stability.epochs);
    s.get("batch_size", cfg.stability.batch_size);
    s.finish();
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["data"] = {{"path", cfg.data.path},     {"m", cfg.data.m},
               {"n", cfg.data.n},           {"train", cfg.data.train},
               {"val", cfg.data.val},       {"sparsity", cfg.data.sparsity},
               {"noise", cfg.data.noise},   {"seed", cfg.data.seed}};
  j["network"] = {{"T", cfg.network.T}, {"layers", cfg.network.layers}};
  j["regularizer"] = cfg.reg;
  j["objective"] = {{"beta1", cfg.objective.beta1},
                    {"beta2", cfg.objective.beta2},
                    {"beta3", cfg.objective.beta3},
                    {"pnorm", cfg.objective.pnorm},
                    {"psi", cfg.objective.psi.kind == Psi::Kind::Identity ? "identity" : "scaled"},
                    {"psi_scale", cfg.objective.psi.c}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"r0", cfg.train.r0},
                {"momentum", cfg.train.momentum},
                {"lr_exponents",
                 {cfg.train.lr_exp_A, cfg.train.lr_exp_alpha, cfg.train.lr_exp_lambda}},
                {"seed", cfg.train.seed},
                {"alpha_max", cfg.train.alpha_max},
                {"lambda_max", cfg.train.lambda_max},
                {"alpha0", cfg.train.alpha0},
                {"lambda0", cfg.train.lambda0},
                {"A_init", cfg.train.A_init == AInit::OrthTranspose ? "orth_transpose" : "given"},
                {"threads", cfg.train.threads}};
  j["sweep"] = {{"layers", cfg.sweep.layers}};
  j["gamma"] = {{"layers", cfg.gamma.layers}, {"nref", cfg.gamma.nref},
                {"grid", cfg.gamma.grid},     {"m", cfg.gamma.m},
                {"n", cfg.gamma.n},           {"samples", cfg.gamma.samples},
                {"seed", cfg.gamma.seed},     {"alpha0", cfg.gamma.alpha0},
                {"lambda0", cfg.gamma.lambda0}};
  j["stability"] = {{"target", cfg.stability.target},
                    {"first_exp", cfg.stability.first_exp},
                    {"last_exp", cfg.stability.last_exp},
                    {"direction_seed", cfg.stability.direction_seed},
                    {"mode", cfg.stability.mode},
                    {"depth", cfg.stability.depth},
                    {"epochs", cfg.stability.epochs},
                    {"batch_size", cfg.stability.batch_size}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const std::string source = path.string();
  if (path.extension() == ".json") {
    json root;
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(source + ": " + e.what());
    }
    // A run manifest carries the resolved config of its run.
    if (root.is_object() && root.contains("manifest_version")) {
      if (!root.contains("config")) throw ConfigError(source + ": manifest has no config");
      return config_from_json(root.at("config"), {}, source);
    }
    return config_from_json(root, {}, source);
  }
  const TomlDocument doc = parse_toml(text, source);
  return config_from_json(doc.root, doc.lines, source);
}

}  // namespace fbsnet
