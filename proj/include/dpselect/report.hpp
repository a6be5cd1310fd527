#pragma once

// Rendering of experiment results to RFC-4180 CSV.  The schemas here are the
// interchange surface of the tool: column sets are fixed, fields are quoted
// only when they need to be, rows end in CRLF, and all reals print with
// %.12g so that reruns of a deterministic pipeline are byte-identical.

#include <cstdio>
#include <string>
#include <vector>

#include "dpselect/bounds.hpp"
#include "dpselect/mech_global.hpp"
#include "dpselect/risk_engine.hpp"

namespace dpselect {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::string mechanism_name(Mechanism m) {
  return m == Mechanism::LOCAL ? "local" : "global";
}

inline std::string selector_name(SelectorKind s) {
  return s == SelectorKind::PLUS ? "plus" : "abs";
}

inline std::string policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::LARGE_A: return "large_a";
    case PolicyKind::SMALL_A: return "small_a";
    case PolicyKind::MANUAL: return "manual";
  }
  return "?";
}

inline std::string csv_escape(const std::string& field) {
  bool needs_quotes = false;
  for (char c : field)
    if (c == ',' || c == '"' || c == '\r' || c == '\n') {
      needs_quotes = true;
      break;
    }
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += "\r\n";
  return out;
}

inline std::string join_flags(const std::vector<std::string>& flags,
                              const std::string& error = "") {
  std::string out;
  if (!error.empty()) out = "error: " + error;
  for (const auto& f : flags) {
    if (!out.empty()) out += "; ";
    out += f;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep CSV: one row per grid point, empirical risk next to every matching
// closed-form bound.

inline const char* sweep_csv_header() {
  return "axis_name,axis_value,d,s,n,alpha,a,sigma,mechanism,selector,tau,"
         "mean_loss,std_error,trials,lb_local,ub_matched,fano_er,fano_afr,"
         "a_star_local,a_star_global,flags\r\n";
}

inline std::string sweep_row_csv(const SweepRow& row) {
  return csv_line({
      axis_name(row.axis),
      format_double(row.axis_value),
      std::to_string(row.cfg.d),
      std::to_string(row.cfg.s),
      std::to_string(row.cfg.n),
      format_double(row.cfg.alpha),
      format_double(row.cfg.a),
      format_double(row.cfg.sigma),
      mechanism_name(row.cfg.mechanism),
      selector_name(row.cfg.selector),
      format_double(row.tau),
      format_double(row.estimate.mean_normalized_loss),
      format_double(row.estimate.std_error),
      std::to_string(row.estimate.trials),
      format_double(row.lb_local),
      format_double(row.ub_matched),
      format_double(row.fano_er),
      format_double(row.fano_afr),
      format_double(row.a_star_local),
      format_double(row.a_star_global),
      join_flags(row.flags, row.error),
  });
}

inline std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_csv_header();
  for (const auto& row : rows) out += sweep_row_csv(row);
  return out;
}

// ---------------------------------------------------------------------------
// Bounds CSV: every closed-form evaluator on one configuration, no Monte
// Carlo.  Undefined evaluators render as nan with an explanatory flag.

inline const char* bounds_csv_header() {
  return "d,s,n,alpha,a,sigma,regime,lb_local,ub_local_plus,ub_local_signed,"
         "ub_global_plus,ub_global_signed,fano_er,fano_afr,a_star_local,"
         "a_star_global,L,flags\r\n";
}

inline std::string render_bounds_csv(const ExperimentConfig& cfg) {
  const NoiseModel noise = make_noise(cfg.noise);
  Regime regime = Regime::LARGE_A;
  std::vector<std::string> flags;
  if (cfg.policy.kind == PolicyKind::SMALL_A) {
    regime = Regime::SMALL_A;
  } else if (cfg.policy.kind == PolicyKind::MANUAL) {
    regime =
        cfg.a >= 2.0 * cfg.sigma ? Regime::LARGE_A : Regime::SMALL_A;
    flags.push_back("regime inferred from signal size (manual threshold)");
  }
  const BoundInput in = make_bound_input(cfg.n, cfg.d, cfg.s, cfg.a,
                                         cfg.sigma, cfg.alpha, noise, regime);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double lb = lower_bound_local(in);
  const double ub_local_plus =
      upper_bound_local(in, regime, Variant::PLUS, &flags);
  const double ub_local_signed = 2.0 * ub_local_plus;
  double ub_global_plus = nan, ub_global_signed = nan;
  try {
    ub_global_plus = upper_bound_global(in, regime, Variant::PLUS, &flags);
    ub_global_signed = 2.0 * ub_global_plus;
  } catch (const std::exception& e) {
    flags.push_back(std::string("global bound unavailable: ") + e.what());
  }
  double fano_er = nan, fano_afr = nan;
  const double chi2 =
      detail::chi2_for_fano(noise, cfg.a / cfg.sigma, &flags);
  if (cfg.d >= 2)
    fano_er = fano_lower_bound_exact_recovery(in, chi2, &flags);
  else
    flags.push_back("fano er undefined (d < 2)");
  if (cfg.d / cfg.s >= 2)
    fano_afr = fano_lower_bound_afr(in, chi2, &flags);
  else
    flags.push_back("fano afr undefined (floor(d/s) < 2)");
  const CriticalValues cv = critical_values(in);

  std::string out = bounds_csv_header();
  out += csv_line({
      std::to_string(cfg.d),
      std::to_string(cfg.s),
      std::to_string(cfg.n),
      format_double(cfg.alpha),
      format_double(cfg.a),
      format_double(cfg.sigma),
      regime == Regime::LARGE_A ? "large_a" : "small_a",
      format_double(lb),
      format_double(ub_local_plus),
      format_double(ub_local_signed),
      format_double(ub_global_plus),
      format_double(ub_global_signed),
      format_double(fano_er),
      format_double(fano_afr),
      format_double(cv.a_star_local),
      format_double(cv.a_star_global),
      format_double(cv.L),
      join_flags(flags),
  });
  return out;
}

// ---------------------------------------------------------------------------
// K_d table CSV: the hypercube scaling constant against its asymptote
// sqrt(pi/2) sqrt(d).  Dimensions the mechanism cannot serve (even d <= 2)
// keep their row with nan values and a flag.

inline const char* kd_csv_header() {
  return "d,kd,asymptote,ratio,flags\r\n";
}

inline std::string render_kd_csv(std::size_t d_min, std::size_t d_max) {
  if (d_min < 1 || d_max < d_min)
    throw std::invalid_argument("render_kd_csv: requires 1 <= d_min <= d_max");
  std::string out = kd_csv_header();
  for (std::size_t d = d_min; d <= d_max; ++d) {
    const double asymptote =
        std::sqrt(std::atan(1.0) * 2.0) * std::sqrt(static_cast<double>(d));
    try {
      const double kd = compute_kd(d);
      out += csv_line({std::to_string(d), format_double(kd),
                       format_double(asymptote), format_double(kd / asymptote),
                       ""});
    } catch (const std::exception& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      out += csv_line({std::to_string(d), format_double(nan),
                       format_double(asymptote), format_double(nan),
                       e.what()});
    }
  }
  return out;
}

}  // namespace dpselect
