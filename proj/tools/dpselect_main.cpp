// dpselect: batch front-end over the privacy mechanisms, selectors, bounds,
// and Monte Carlo risk engine.
//
//   dpselect audit  --config cfg.json [--out report.txt]
//   dpselect risk   --config cfg.json --out risk.csv
//   dpselect sweep  --config cfg.json --out sweep.csv
//   dpselect bounds --config cfg.json --out bounds.csv
//   dpselect kd     --config cfg.json --out kd.csv
//
// Configs are single JSON documents; results are RFC-4180 CSV files, each
// with a JSON manifest alongside (<out>.manifest.json) recording the exact
// inputs that produced it.  Exit codes: 0 success, 1 config error,
// 2 certificate failure, 3 runtime error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpselect/bounds.hpp"
#include "dpselect/mech_global.hpp"
#include "dpselect/mech_local.hpp"
#include "dpselect/noise.hpp"
#include "dpselect/report.hpp"
#include "dpselect/risk_engine.hpp"
#include "dpselect/rng.hpp"

#ifndef DPSELECT_VERSION
#define DPSELECT_VERSION "0.0.0"
#endif

namespace {

using json = nlohmann::ordered_json;
using namespace dpselect;

// Thrown for anything wrong with the requested configuration (as opposed to
// failures while executing a valid one).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCertificate = 2;
constexpr int kExitRuntime = 3;

// --------------------------------------------------------------------------
// JSON helpers with diagnostics that name the offending key.

const json* find_key(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_real(const json& j, const char* key,
                std::optional<double> fallback = std::nullopt) {
  const json* v = find_key(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("config: missing required number '") + key +
                      "'");
  }
  if (!v->is_number())
    throw ConfigError(std::string("config: '") + key + "' must be a number");
  return v->get<double>();
}

// Accepts any JSON number whose value is an exact non-negative integer, so
// configs may write counts as 40000 or 4e4 interchangeably.
std::uint64_t as_uint(const json& v, const std::string& what) {
  const auto fail = [&]() -> std::uint64_t {
    throw ConfigError("config: " + what + " must be a non-negative integer");
  };
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer())
    return v.get<std::int64_t>() < 0 ? fail()
                                     : v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!(x >= 0.0) || x > 1.8e19 || x != std::floor(x)) return fail();
    return static_cast<std::uint64_t>(x);
  }
  return fail();
}

std::uint64_t get_uint(const json& j, const char* key,
                       std::optional<std::uint64_t> fallback = std::nullopt) {
  const json* v = find_key(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("config: missing required integer '") +
                      key + "'");
  }
  return as_uint(*v, std::string("'") + key + "'");
}

std::string get_string(const json& j, const char* key,
                       std::optional<std::string> fallback = std::nullopt) {
  const json* v = find_key(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(std::string("config: missing required string '") + key +
                      "'");
  }
  if (!v->is_string())
    throw ConfigError(std::string("config: '") + key + "' must be a string");
  return v->get<std::string>();
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config parse error in ") + path + ": " +
                      e.what());
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("failed while writing: " + path);
}

// --------------------------------------------------------------------------
// Config interpretation.

struct CommonOptions {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::uint64_t> threads;
};

std::size_t resolve_threads(const CommonOptions& opts, const json& cfg) {
  if (opts.threads) return std::max<std::uint64_t>(1, *opts.threads);
  if (const char* env = std::getenv("DPSELECT_THREADS")) {
    try {
      const long long v = std::stoll(env);
      if (v < 1) throw std::invalid_argument("non-positive");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError(
          "DPSELECT_THREADS must be a positive integer, got: " +
          std::string(env));
    }
  }
  if (find_key(cfg, "threads"))
    return std::max<std::uint64_t>(1, get_uint(cfg, "threads"));
  return 1;
}

ExperimentConfig parse_experiment(const json& j, const CommonOptions& opts,
                                  bool monte_carlo) {
  ExperimentConfig cfg;
  cfg.d = get_uint(j, "d");
  cfg.s = get_uint(j, "s");
  cfg.n = get_uint(j, "n");
  cfg.a = get_real(j, "a");
  cfg.sigma = get_real(j, "sigma");
  cfg.alpha = get_real(j, "alpha");

  if (const json* noise = find_key(j, "noise")) {
    cfg.noise.family = get_string(*noise, "family", "gaussian");
    cfg.noise.c_raw = get_real(*noise, "c_raw", 1.0);
    cfg.noise.lambda = get_real(*noise, "lambda", 0.0);
  }

  const std::string mech = get_string(j, "mechanism", "local");
  if (mech == "local") cfg.mechanism = Mechanism::LOCAL;
  else if (mech == "global") cfg.mechanism = Mechanism::GLOBAL;
  else throw ConfigError("config: mechanism must be 'local' or 'global', got '" + mech + "'");

  const std::string sel = get_string(j, "selector", "plus");
  if (sel == "plus") cfg.selector = SelectorKind::PLUS;
  else if (sel == "abs") cfg.selector = SelectorKind::ABS;
  else throw ConfigError("config: selector must be 'plus' or 'abs', got '" + sel + "'");

  if (const json* policy = find_key(j, "policy")) {
    const std::string kind = get_string(*policy, "kind");
    if (kind == "large_a") cfg.policy.kind = PolicyKind::LARGE_A;
    else if (kind == "small_a") cfg.policy.kind = PolicyKind::SMALL_A;
    else if (kind == "manual") {
      cfg.policy.kind = PolicyKind::MANUAL;
      cfg.policy.manual_tau = get_real(*policy, "tau");
    } else {
      throw ConfigError(
          "config: policy.kind must be 'large_a', 'small_a' or 'manual', "
          "got '" + kind + "'");
    }
  }

  cfg.trials = monte_carlo ? get_uint(j, "trials") : get_uint(j, "trials", 2);
  cfg.seed = monte_carlo ? get_uint(j, "seed") : get_uint(j, "seed", 0);
  if (opts.trials) cfg.trials = *opts.trials;
  if (opts.seed) cfg.seed = *opts.seed;
  if (monte_carlo && cfg.trials < 2)
    throw ConfigError("config: trials must be >= 2");

  // Dry-build the trial context so that every inconsistency (dimensions the
  // mechanism rejects, invalid noise parameters, degenerate sparsity) is
  // reported as a config error before any work starts.
  try {
    detail::make_trial_context(cfg);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

// Echo of the effective experiment settings for the manifest.
json experiment_echo(const ExperimentConfig& cfg) {
  json echo;
  echo["d"] = cfg.d;
  echo["s"] = cfg.s;
  echo["n"] = cfg.n;
  echo["a"] = cfg.a;
  echo["sigma"] = cfg.sigma;
  echo["alpha"] = cfg.alpha;
  echo["noise"] = {{"family", cfg.noise.family},
                   {"c_raw", cfg.noise.c_raw},
                   {"lambda", cfg.noise.lambda}};
  echo["mechanism"] = mechanism_name(cfg.mechanism);
  echo["selector"] = selector_name(cfg.selector);
  json policy;
  policy["kind"] = policy_name(cfg.policy.kind);
  if (cfg.policy.manual_tau) policy["tau"] = *cfg.policy.manual_tau;
  echo["policy"] = policy;
  echo["trials"] = cfg.trials;
  echo["seed"] = cfg.seed;
  return echo;
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const std::string& csv_schema,
                    const json& effective_config, std::size_t threads,
                    std::size_t rows, double wall_seconds) {
  json m;
  m["schema_version"] = 1;
  m["tool"] = "dpselect";
  m["version"] = DPSELECT_VERSION;
  m["command"] = command;
  m["output_schema"] = csv_schema;
  m["config"] = effective_config;
  m["threads"] = threads;
  m["outputs"] = json::array({out_path});
  m["rows"] = rows;
  m["wall_time_seconds"] = wall_seconds;
  write_file(out_path + ".manifest.json", m.dump(2) + "\n");
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// --------------------------------------------------------------------------
// audit: exact certificates for both mechanisms, PASS/FAIL per line.

struct AuditOptions {
  std::vector<std::size_t> dims = {3, 4, 5, 7, 8};
  std::vector<double> alphas = {0.5, 1.0, std::log(3.0)};
  std::vector<std::size_t> unbiased_dims = {1, 3, 4, 5, 6, 7, 8};
  std::size_t local_triples = 20000;
  std::size_t unbiased_samples = 50;
  double b_scale = 1.0;
  std::uint64_t seed = 20240816;
};

AuditOptions parse_audit(const json& root, const CommonOptions& opts) {
  AuditOptions a;
  if (const json* j = find_key(root, "audit")) {
    if (const json* dims = find_key(*j, "dims")) {
      if (!dims->is_array() || dims->empty())
        throw ConfigError("config: audit.dims must be a nonempty array");
      a.dims.clear();
      for (const auto& v : *dims)
        a.dims.push_back(as_uint(v, "audit.dims entry"));
    }
    if (const json* alphas = find_key(*j, "alphas")) {
      if (!alphas->is_array() || alphas->empty())
        throw ConfigError("config: audit.alphas must be a nonempty array");
      a.alphas.clear();
      for (const auto& v : *alphas) {
        if (!v.is_number())
          throw ConfigError("config: audit.alphas entries must be numbers");
        a.alphas.push_back(v.get<double>());
      }
    }
    if (const json* ud = find_key(*j, "unbiased_dims")) {
      a.unbiased_dims.clear();
      for (const auto& v : *ud)
        a.unbiased_dims.push_back(as_uint(v, "audit.unbiased_dims entry"));
    }
    a.local_triples = get_uint(*j, "local_triples", a.local_triples);
    a.unbiased_samples = get_uint(*j, "unbiased_samples", a.unbiased_samples);
    a.b_scale = get_real(*j, "b_scale", a.b_scale);
    a.seed = get_uint(*j, "seed", a.seed);
  }
  if (opts.seed) a.seed = *opts.seed;

  for (double alpha : a.alphas)
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ConfigError("config: audit alphas must be positive and finite");
  auto prevalidate = [](const std::vector<std::size_t>& dims) {
    for (std::size_t d : dims) {
      if (d > 20)
        throw ConfigError(
            "config: audits enumerate all 2^d outputs and require d <= 20, "
            "got d = " + std::to_string(d));
      try {
        compute_kd(d);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
      }
    }
  };
  prevalidate(a.dims);
  prevalidate(a.unbiased_dims);
  return a;
}

std::vector<double> random_vector(std::size_t d, Rng& rng) {
  std::vector<double> x(d);
  for (auto& v : x) v = 4.0 * (rng.next_unit() - 0.5);
  return x;
}

int run_audit(const CommonOptions& opts) {
  const json root = load_config(opts.config_path);
  const AuditOptions audit = parse_audit(root, opts);

  Stopwatch watch;
  std::ostringstream report;
  bool all_pass = true;
  std::size_t lines = 0;
  const auto record = [&](const std::string& name, bool pass,
                          const std::string& details) {
    report << "[AUDIT] " << name << ": " << (pass ? "PASS" : "FAIL") << " "
           << details << "\n";
    all_pass = all_pass && pass;
    ++lines;
  };

  Rng rng(audit.seed, 0);
  const double rel_tol = 1e-10;

  for (std::size_t d : audit.dims) {
    for (double alpha : audit.alphas) {
      // Coordinate-local mechanism: the conditional-density ratio must stay
      // below e^{alpha/d} everywhere and attain it on a sign flip.
      LocalMechConfig local;
      local.alpha = alpha;
      local.d = d;
      const double target_local = std::exp(alpha / static_cast<double>(d));
      double worst = dp_ratio_certificate_local(local, 1.0, -1.0, 1.5);
      bool pass = std::abs(worst - target_local) <= rel_tol * target_local;
      for (std::size_t i = 0; i < audit.local_triples; ++i) {
        const double x = 4.0 * (rng.next_unit() - 0.5);
        const double xp = 4.0 * (rng.next_unit() - 0.5);
        const double z = 8.0 * (rng.next_unit() - 0.5);
        const double ratio = dp_ratio_certificate_local(local, x, xp, z);
        worst = std::max(worst, ratio);
        pass = pass && ratio <= target_local * (1.0 + rel_tol);
      }
      record("local-ratio d=" + std::to_string(d) +
                 " alpha=" + format_double(alpha),
             pass,
             "worst_ratio=" + format_double(worst) +
                 " target=" + format_double(target_local));

      // Hypercube mechanism: full enumeration; the likelihood ratio must be
      // bounded by e^alpha with equality on fully sign-flipped inputs.
      const GlobalMechConfig global =
          make_global_config(d, alpha, audit.b_scale);
      const double target_global = std::exp(alpha);
      const auto x = random_vector(d, rng);
      auto flipped = x;
      for (auto& v : flipped) v = -v;
      const double worst_flip = dp_certificate_global(global, x, flipped);
      bool gpass =
          std::abs(worst_flip - target_global) <= rel_tol * target_global;
      double gworst = worst_flip;
      for (int rep = 0; rep < 3; ++rep) {
        auto partial = x;
        for (auto& v : partial)
          if (rng.next_unit() < 0.5) v = -v;
        const double ratio = dp_certificate_global(global, x, partial);
        gworst = std::max(gworst, ratio);
        gpass = gpass && ratio <= target_global * (1.0 + rel_tol);
      }
      record("global-ratio d=" + std::to_string(d) +
                 " alpha=" + format_double(alpha),
             gpass,
             "worst_ratio=" + format_double(gworst) +
                 " target=" + format_double(target_global));
    }
  }

  // Unbiasedness: the exact conditional mean of the hypercube mechanism must
  // reproduce the sign vector. The b_scale tamper hook breaks precisely this
  // calibration.
  for (std::size_t d : audit.unbiased_dims) {
    for (double alpha : audit.alphas) {
      const GlobalMechConfig global =
          make_global_config(d, alpha, audit.b_scale);
      double max_err = 0.0;
      for (std::size_t i = 0; i < audit.unbiased_samples; ++i) {
        const auto x = random_vector(d, rng);
        const auto mean = conditional_mean_exact(x, global);
        for (std::size_t jj = 0; jj < d; ++jj) {
          const double sign = x[jj] >= 0.0 ? 1.0 : -1.0;
          max_err = std::max(max_err, std::abs(mean[jj] - sign));
        }
      }
      record("global-unbiased d=" + std::to_string(d) +
                 " alpha=" + format_double(alpha),
             max_err <= 1e-10,
             "max_abs_error=" + format_double(max_err) + " tol=1e-10");
    }
  }

  report << (all_pass ? "[AUDIT] all certificates PASS"
                      : "[AUDIT] certificate FAILURE") << "\n";
  ++lines;
  std::cout << report.str();
  if (!opts.out_path.empty()) {
    write_file(opts.out_path, report.str());
    json echo = root;
    echo["audit_effective_seed"] = audit.seed;
    write_manifest(opts.out_path, "audit", "audit.v1", echo, 1, lines,
                   watch.seconds());
  }
  return all_pass ? kExitOk : kExitCertificate;
}

// --------------------------------------------------------------------------
// risk / sweep / bounds / kd.

int run_risk(const CommonOptions& opts) {
  const json root = load_config(opts.config_path);
  const ExperimentConfig cfg = parse_experiment(root, opts, true);
  const std::size_t threads = resolve_threads(opts, root);

  Stopwatch watch;
  const auto rows = sweep(cfg, SweepAxis::A, {cfg.a}, threads);
  if (!rows[0].error.empty())
    throw std::runtime_error("risk evaluation failed: " + rows[0].error);
  write_file(opts.out_path, render_sweep_csv(rows));
  write_manifest(opts.out_path, "risk", "sweep.v1", experiment_echo(cfg),
                 threads, 1, watch.seconds());
  return kExitOk;
}

int run_sweep(const CommonOptions& opts) {
  const json root = load_config(opts.config_path);
  const ExperimentConfig cfg = parse_experiment(root, opts, true);
  const std::size_t threads = resolve_threads(opts, root);

  const json* spec = find_key(root, "sweep");
  if (!spec) throw ConfigError("config: sweep command needs a 'sweep' object");
  const std::string axis_str = get_string(*spec, "axis");
  SweepAxis axis;
  if (axis_str == "a") axis = SweepAxis::A;
  else if (axis_str == "n") axis = SweepAxis::N;
  else if (axis_str == "alpha") axis = SweepAxis::ALPHA;
  else if (axis_str == "d") axis = SweepAxis::D;
  else throw ConfigError("config: sweep.axis must be one of a, n, alpha, d");
  const json* grid_json = find_key(*spec, "grid");
  if (!grid_json || !grid_json->is_array() || grid_json->empty())
    throw ConfigError("config: sweep.grid must be a nonempty array of numbers");
  std::vector<double> grid;
  for (const auto& v : *grid_json) {
    if (!v.is_number())
      throw ConfigError("config: sweep.grid entries must be numbers");
    grid.push_back(v.get<double>());
  }

  Stopwatch watch;
  const auto rows = sweep(cfg, axis, grid, threads);
  write_file(opts.out_path, render_sweep_csv(rows));
  json echo = experiment_echo(cfg);
  echo["sweep"] = {{"axis", axis_str}, {"grid", grid}};
  write_manifest(opts.out_path, "sweep", "sweep.v1", echo, threads,
                 rows.size(), watch.seconds());
  return kExitOk;
}

int run_bounds(const CommonOptions& opts) {
  const json root = load_config(opts.config_path);
  const ExperimentConfig cfg = parse_experiment(root, opts, false);

  Stopwatch watch;
  write_file(opts.out_path, render_bounds_csv(cfg));
  write_manifest(opts.out_path, "bounds", "bounds.v1", experiment_echo(cfg),
                 1, 1, watch.seconds());
  return kExitOk;
}

int run_kd(const CommonOptions& opts) {
  const json root = load_config(opts.config_path);
  const json* spec = find_key(root, "kd");
  if (!spec) throw ConfigError("config: kd command needs a 'kd' object");
  const std::size_t d_min = get_uint(*spec, "d_min");
  const std::size_t d_max = get_uint(*spec, "d_max");
  if (d_min < 1 || d_max < d_min)
    throw ConfigError("config: kd needs 1 <= d_min <= d_max");

  Stopwatch watch;
  write_file(opts.out_path, render_kd_csv(d_min, d_max));
  json echo;
  echo["kd"] = {{"d_min", d_min}, {"d_max", d_max}};
  write_manifest(opts.out_path, "kd", "kd.v1", echo, 1,
                 d_max - d_min + 1, watch.seconds());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dpselect " DPSELECT_VERSION
      ": private mechanisms, threshold selectors, risk bounds, and Monte "
      "Carlo experiments for sparse support recovery"};
  app.require_subcommand(1);

  CommonOptions opts;
  const auto add_common = [&](CLI::App* sub, bool out_required) {
    sub->add_option("--config", opts.config_path, "JSON config file")
        ->required();
    auto* out = sub->add_option("--out", opts.out_path, "output file path");
    if (out_required) out->required();
    sub->add_option("--seed", opts.seed, "override the config seed");
    sub->add_option("--trials", opts.trials, "override the config trials");
    sub->add_option("--threads", opts.threads,
                    "worker threads (also: DPSELECT_THREADS)");
  };

  CLI::App* audit = app.add_subcommand(
      "audit", "run exact privacy and unbiasedness certificates");
  add_common(audit, false);
  CLI::App* risk = app.add_subcommand(
      "risk", "Monte Carlo risk estimate for one configuration");
  add_common(risk, true);
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Monte Carlo risk along one config axis");
  add_common(sweep_cmd, true);
  CLI::App* bounds = app.add_subcommand(
      "bounds", "closed-form bounds for one configuration");
  add_common(bounds, true);
  CLI::App* kd = app.add_subcommand(
      "kd", "hypercube scaling constant table");
  add_common(kd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(audit)) return run_audit(opts);
    if (app.got_subcommand(risk)) return run_risk(opts);
    if (app.got_subcommand(sweep_cmd)) return run_sweep(opts);
    if (app.got_subcommand(bounds)) return run_bounds(opts);
    if (app.got_subcommand(kd)) return run_kd(opts);
    std::cerr << "error: no command selected\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
