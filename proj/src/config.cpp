#include "fedexprox/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"

namespace fedexprox::config {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(value);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a finite number");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': '" + s + "' is not a nonnegative integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : split_list(value)) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& items, std::string (*f)(const T&)) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += f(items[i]);
  }
  return out;
}

std::string num_item(const double& v) { return format_number(v); }
std::string str_item(const std::string& s) { return s; }
std::string size_item(const std::size_t& v) { return std::to_string(v); }
std::string algo_item(const Algorithm& a) { return a.mode + ":" + a.policy; }

const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> modes{"exact",  "abs-inject", "rel-inject", "gd-abs",
                                              "gd-rel", "agd-abs",    "agd-rel"};
  return modes;
}

void require_mode(const std::string& mode) {
  const auto& modes = known_modes();
  if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
    throw ConfigError("unknown prox mode '" + mode + "'");
  }
}

void require_policy(const std::string& policy) {
  try {
    (void)engine::ExtrapolationPolicy::parse(policy, 1.0);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  // shortest round-tripping spelling, preferring plain decimals on ties
  std::string best;
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) {
      best = buf;
      break;
    }
  }
  if (best.empty()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    best = buf;
  }
  if (std::isfinite(v) && std::abs(v) < 1e16) {
    for (int prec = 0; prec <= 20; ++prec) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f", prec, v);
      if (std::strtod(buf, nullptr) == v) {
        if (std::strlen(buf) <= best.size()) best = buf;
        break;
      }
    }
  }
  return best;
}

EpsKind eps_kind_of_mode(const std::string& mode) {
  require_mode(mode);
  if (mode == "exact") return EpsKind::kNone;
  if (mode == "abs-inject" || mode == "gd-abs" || mode == "agd-abs") return EpsKind::kAbsolute;
  return EpsKind::kRelative;
}

prox::InexactnessSpec make_spec(const std::string& mode, double eps) {
  using prox::InexactnessSpec;
  using prox::Target;
  require_mode(mode);
  try {
    if (mode == "exact") return InexactnessSpec::exact();
    if (mode == "abs-inject") return InexactnessSpec::absolute_injected(eps);
    if (mode == "rel-inject") return InexactnessSpec::relative_injected(eps);
    if (mode == "gd-abs") return InexactnessSpec::solver_gd(Target::absolute(eps));
    if (mode == "gd-rel") return InexactnessSpec::solver_gd(Target::relative(eps));
    if (mode == "agd-abs") return InexactnessSpec::solver_agd(Target::absolute(eps));
    return InexactnessSpec::solver_agd(Target::relative(eps));
  } catch (const InvalidArgument& e) {
    throw ConfigError("mode " + mode + ": " + e.what());
  }
}

void assign(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key == "name") {
    cfg.name = value;
  } else if (key == "n") {
    cfg.n = to_uint(key, value);
  } else if (key == "d") {
    cfg.d = static_cast<Index>(to_uint(key, value));
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "lambda_lo") {
    cfg.spectrum.lambda_lo = to_double(key, value);
  } else if (key == "lambda_hi") {
    cfg.spectrum.lambda_hi = to_double(key, value);
  } else if (key == "rank_fraction") {
    cfg.spectrum.rank_fraction = to_double(key, value);
  } else if (key == "K") {
    cfg.K = to_uint(key, value);
  } else if (key == "gamma") {
    cfg.gamma = to_doubles(key, value);
  } else if (key == "eps1") {
    cfg.eps1 = to_doubles(key, value);
  } else if (key == "eps2") {
    cfg.eps2 = to_doubles(key, value);
  } else if (key == "mode") {
    cfg.modes = split_list(value);
    for (const auto& m : cfg.modes) require_mode(m);
  } else if (key == "policy") {
    cfg.policies = split_list(value);
    for (const auto& p : cfg.policies) require_policy(p);
  } else if (key == "algorithm") {
    cfg.algorithms.clear();
    for (const std::string& item : split_list(value)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("algorithm entries are mode:policy, got '" + item + "'");
      }
      Algorithm a{trim(item.substr(0, colon)), trim(item.substr(colon + 1))};
      require_mode(a.mode);
      require_policy(a.policy);
      cfg.algorithms.push_back(a);
    }
  } else if (key == "tau") {
    cfg.tau.clear();
    for (const std::string& item : split_list(value)) cfg.tau.push_back(to_uint(key, item));
  } else if (key == "alpha") {
    if (value.empty()) {
      cfg.alpha.reset();
    } else {
      cfg.alpha = to_double(key, value);
    }
  } else if (key == "run_seed") {
    cfg.run_seed = to_uint(key, value);
  } else if (key == "x0_seed") {
    cfg.x0_seed = to_uint(key, value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "report") {
    cfg.report = to_bool(key, value);
  } else if (key == "expect_divergence") {
    cfg.expect_divergence = to_bool(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (K < 1) throw ConfigError("K must be >= 1");
  if (!(spectrum.lambda_lo >= 0.0) || !(spectrum.lambda_hi > spectrum.lambda_lo)) {
    throw ConfigError("spectrum needs 0 <= lambda_lo < lambda_hi");
  }
  if (!(spectrum.rank_fraction > 0.0 && spectrum.rank_fraction <= 1.0)) {
    throw ConfigError("rank_fraction must lie in (0, 1]");
  }
  for (double g : gamma) {
    if (!(g > 0.0)) throw ConfigError("gamma values must be > 0");
  }
  for (double e : eps1) {
    if (!(e >= 0.0)) throw ConfigError("eps1 values must be >= 0");
  }
  for (double e : eps2) {
    if (!(e >= 0.0 && e < 1.0)) throw ConfigError("eps2 values must lie in [0, 1)");
  }
  for (std::size_t t : tau) {
    if (t < 1 || t > n) throw ConfigError("tau values must lie in [1, n]");
  }
  if (alpha && !(*alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  const auto needs_alpha = [](const std::string& p) { return p == "constant"; };
  bool uses_constant = std::any_of(policies.begin(), policies.end(), needs_alpha);
  for (const Algorithm& a : algorithms) uses_constant = uses_constant || needs_alpha(a.policy);
  if (uses_constant && !alpha) throw ConfigError("policy constant requires alpha");
}

std::string ExperimentConfig::canonical() const {
  std::map<std::string, std::string> kv;
  kv["name"] = name;
  kv["n"] = std::to_string(n);
  kv["d"] = std::to_string(d);
  kv["seed"] = std::to_string(seed);
  kv["lambda_lo"] = format_number(spectrum.lambda_lo);
  kv["lambda_hi"] = format_number(spectrum.lambda_hi);
  kv["rank_fraction"] = format_number(spectrum.rank_fraction);
  kv["K"] = std::to_string(K);
  kv["gamma"] = join(gamma, num_item);
  kv["eps1"] = join(eps1, num_item);
  kv["eps2"] = join(eps2, num_item);
  if (algorithms.empty()) {
    kv["mode"] = join(modes, str_item);
    kv["policy"] = join(policies, str_item);
  } else {
    kv["algorithm"] = join(algorithms, algo_item);
  }
  if (!tau.empty()) kv["tau"] = join(tau, size_item);
  if (alpha) kv["alpha"] = format_number(*alpha);
  kv["run_seed"] = std::to_string(run_seed);
  kv["x0_seed"] = std::to_string(x0_seed);
  kv["expect_divergence"] = expect_divergence ? "1" : "0";
  std::string out;
  for (const auto& [k, v] : kv) {
    if (!out.empty()) out += ';';
    out += k + "=" + v;
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      assign(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(in, path.string());
}

engine::ExtrapolationPolicy Cell::policy(std::optional<double> alpha) const {
  try {
    return engine::ExtrapolationPolicy::parse(algorithm.policy, alpha);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

std::string Cell::key() const {
  std::string k = algorithm.mode + "_" + algorithm.policy + "_g" + format_number(gamma);
  switch (eps_kind_of_mode(algorithm.mode)) {
    case EpsKind::kAbsolute: k += "_e1-" + format_number(eps); break;
    case EpsKind::kRelative: k += "_e2-" + format_number(eps); break;
    case EpsKind::kNone: break;
  }
  k += "_t" + std::to_string(tau);
  return k;
}

std::uint64_t Cell::seed(std::uint64_t run_seed) const {
  const std::string k = key();
  return rng::derive_seed(run_seed, rng::Domain::kSweepCell, rng::hash_string(k.data(), k.size()));
}

std::vector<Cell> expand(const ExperimentConfig& cfg) {
  std::vector<Algorithm> algos = cfg.algorithms;
  if (algos.empty()) {
    for (const auto& m : cfg.modes) {
      for (const auto& p : cfg.policies) algos.push_back({m, p});
    }
  }
  std::vector<std::size_t> taus = cfg.tau;
  if (taus.empty()) taus.push_back(cfg.n);

  std::vector<Cell> cells;
  for (const Algorithm& a : algos) {
    const EpsKind kind = eps_kind_of_mode(a.mode);
    const std::vector<double> none{0.0};
    const std::vector<double>& levels =
        kind == EpsKind::kAbsolute ? cfg.eps1 : kind == EpsKind::kRelative ? cfg.eps2 : none;
    for (double g : cfg.gamma) {
      for (double e : levels) {
        for (std::size_t t : taus) cells.push_back({a, g, e, t});
      }
    }
  }
  return cells;
}

Vector start_point(std::uint64_t x0_seed, Index d) {
  rng::Engine eng = rng::substream(x0_seed, rng::Domain::kStartPoint);
  return rng::standard_normal(d, eng);
}

}  // namespace fedexprox::config
