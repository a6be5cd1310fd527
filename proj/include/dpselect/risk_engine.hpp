#pragma once

// Deterministic Monte Carlo estimation of the normalized Hamming risk of a
// (mechanism, selector, policy) pipeline at a worst-case sparse mean, plus
// grid sweeps that attach the matching closed-form bounds to every point.
//
// Reproducibility contract: every trial owns an RNG stream derived from
// (seed, trial_index) and writes only its own slot; the reduction then runs
// sequentially in trial order.  The result is therefore a pure function of
// the config — bit-identical across thread counts and schedules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dpselect/bounds.hpp"
#include "dpselect/mech_global.hpp"
#include "dpselect/mech_local.hpp"
#include "dpselect/noise.hpp"
#include "dpselect/rng.hpp"
#include "dpselect/selectors.hpp"
#include "dpselect/sparse_model.hpp"

namespace dpselect {

enum class SelectorKind { PLUS, ABS };

// Serializable recipe for a noise model (configs must be copyable values).
struct NoiseSpec {
  std::string family = "gaussian";  // "gaussian" or "tilted"
  double c_raw = 1.0;               // tilted: curvature of the raw potential
  double lambda = 0.0;              // tilted: Laplace tilt strength
};

inline NoiseModel make_noise(const NoiseSpec& spec) {
  if (spec.family == "gaussian") return make_gaussian();
  if (spec.family == "tilted") return make_tilted(spec.c_raw, spec.lambda);
  throw std::invalid_argument("make_noise: unknown family '" + spec.family +
                              "'");
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::LARGE_A;
  std::optional<double> manual_tau;
};

struct ExperimentConfig {
  std::size_t d = 0;
  std::size_t s = 0;
  std::size_t n = 0;
  double a = 0.0;
  double sigma = 0.0;
  double alpha = 0.0;
  NoiseSpec noise;
  Mechanism mechanism = Mechanism::LOCAL;
  SelectorKind selector = SelectorKind::PLUS;
  PolicySpec policy;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};

struct RiskEstimate {
  double mean_normalized_loss = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::vector<double> per_trial_losses;
  std::vector<std::string> validity_flags;  // inherited from the policy
};

namespace detail {

// Everything derived from the config that is shared by all trials.
struct TrialContext {
  NoiseModel noise;
  SparseMean theta;
  SupportIndicator eta;
  ThresholdPolicy policy;
};

inline TrialContext make_trial_context(const ExperimentConfig& cfg) {
  if (cfg.n < 1)
    throw std::invalid_argument("experiment config: requires n >= 1");
  if (cfg.mechanism == Mechanism::GLOBAL)
    compute_kd(cfg.d);  // rejects the dimensions the mechanism cannot serve
  TrialContext ctx{make_noise(cfg.noise), {}, {}, {}};
  const Variant variant = cfg.selector == SelectorKind::PLUS
                              ? Variant::PLUS
                              : Variant::SIGNED;
  // Hardest placement: exactly s entries of magnitude exactly a.  Both
  // mechanisms and both selectors are exchangeable across coordinates, so
  // the leading placement loses no generality.
  ctx.theta = worst_case_theta(cfg.d, cfg.s, cfg.a, variant);
  ctx.eta = support_of(ctx.theta);
  ctx.policy = resolve_policy(cfg.policy.kind, cfg.mechanism, ctx.noise,
                              cfg.a, cfg.sigma, cfg.alpha, cfg.d, cfg.n,
                              cfg.policy.manual_tau);
  return ctx;
}

inline double run_trial(const ExperimentConfig& cfg, const TrialContext& ctx,
                        std::size_t trial_index) {
  Rng rng(cfg.seed, trial_index);
  const RawSample x = generate(ctx.theta, cfg.n, cfg.sigma, ctx.noise, rng);
  PrivateSample z;
  if (cfg.mechanism == Mechanism::LOCAL) {
    LocalMechConfig mech;
    mech.alpha = cfg.alpha;
    mech.d = cfg.d;
    z = privatize_local(x, mech, rng);
  } else {
    z = privatize_global(x, make_global_config(cfg.d, cfg.alpha), rng);
  }
  const SupportIndicator eta_hat = cfg.selector == SelectorKind::PLUS
                                       ? select_plus(z, ctx.policy.tau)
                                       : select_abs(z, ctx.policy.tau);
  return normalized_hamming(eta_hat, ctx.eta, cfg.s);
}

}  // namespace detail

// One full pipeline pass (theta -> raw sample -> private sample -> selector)
// on the RNG stream of the given trial index.
inline double run_trial(const ExperimentConfig& cfg, std::size_t trial_index) {
  return detail::run_trial(cfg, detail::make_trial_context(cfg), trial_index);
}

// Mean and standard error of the normalized loss over cfg.trials independent
// trials.  Workers claim trials in strides but results are reduced in trial
// order, so the estimate does not depend on the number of threads.
inline RiskEstimate estimate_risk(const ExperimentConfig& cfg,
                                  std::size_t threads = 1) {
  if (cfg.trials < 2)
    throw std::invalid_argument("estimate_risk: requires trials >= 2");
  if (threads < 1) threads = 1;
  const detail::TrialContext ctx = detail::make_trial_context(cfg);

  std::vector<double> losses(cfg.trials, 0.0);
  const std::size_t workers = std::min(threads, cfg.trials);
  if (workers == 1) {
    for (std::size_t t = 0; t < cfg.trials; ++t)
      losses[t] = detail::run_trial(cfg, ctx, t);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t t = w; t < cfg.trials; t += workers)
            losses[t] = detail::run_trial(cfg, ctx, t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& err : errors)
      if (err) std::rethrow_exception(err);
  }

  RiskEstimate est;
  est.trials = cfg.trials;
  est.validity_flags = ctx.policy.validity_flags;
  double sum = 0.0;
  for (double loss : losses) sum += loss;  // fixed trial order
  est.mean_normalized_loss = sum / static_cast<double>(cfg.trials);
  double sq = 0.0;
  for (double loss : losses) {
    const double dev = loss - est.mean_normalized_loss;
    sq += dev * dev;
  }
  const double sample_var = sq / static_cast<double>(cfg.trials - 1);
  est.std_error =
      std::sqrt(sample_var / static_cast<double>(cfg.trials));
  est.per_trial_losses = std::move(losses);
  return est;
}

enum class SweepAxis { A, N, ALPHA, D };

inline std::string axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::A: return "a";
    case SweepAxis::N: return "n";
    case SweepAxis::ALPHA: return "alpha";
    case SweepAxis::D: return "d";
  }
  return "?";
}

// One evaluated grid point: the materialized config, its resolved threshold,
// the Monte Carlo estimate, and the closed-form bounds for the same inputs.
// A point that fails keeps its row with the message in `error` and NaN
// bounds, and the sweep continues.
struct SweepRow {
  SweepAxis axis = SweepAxis::A;
  double axis_value = 0.0;
  ExperimentConfig cfg;
  double tau = 0.0;
  RiskEstimate estimate;
  double lb_local = std::numeric_limits<double>::quiet_NaN();
  double ub_matched = std::numeric_limits<double>::quiet_NaN();
  double fano_er = std::numeric_limits<double>::quiet_NaN();
  double fano_afr = std::numeric_limits<double>::quiet_NaN();
  double a_star_local = std::numeric_limits<double>::quiet_NaN();
  double a_star_global = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> flags;
  std::string error;
};

namespace detail {

inline std::size_t grid_value_to_count(double v, const char* axis) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 9.007199254740992e15)
    throw std::invalid_argument(std::string("sweep: ") + axis +
                                " grid value must be a positive integer");
  return static_cast<std::size_t>(v);
}

// Per-coordinate chi-square divergence between the null and the shifted raw
// law, for the Fano bounds.  The gaussian value is the sharp closed form;
// other models integrate, falling back to the curvature certificate
// exp(c_plus abar^2) - 1 (a valid upper bound, hence still a valid lower
// bound after the Fano bracket) when the shift is too extreme to integrate.
inline double chi2_for_fano(const NoiseModel& noise, double abar,
                            std::vector<std::string>* flags) {
  if (noise.name == "gaussian") return std::expm1(abar * abar);
  try {
    return divergence(noise, abar, Divergence::CHI2);
  } catch (const QuadratureError&) {
    if (flags)
      flags->push_back("fano chi2 uses the curvature certificate bound");
    return std::expm1(*noise.c_upper * abar * abar);
  }
}

}  // namespace detail

// Evaluates the pipeline risk along one axis of the config grid.  Points run
// sequentially (each point may use `threads` workers internally), so output
// order equals grid order.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base,
                                   SweepAxis axis,
                                   const std::vector<double>& grid,
                                   std::size_t threads = 1) {
  if (grid.empty())
    throw std::invalid_argument("sweep: requires a nonempty grid");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double value : grid) {
    SweepRow row;
    row.axis = axis;
    row.axis_value = value;
    row.cfg = base;
    try {
      switch (axis) {
        case SweepAxis::A: row.cfg.a = value; break;
        case SweepAxis::N: row.cfg.n = detail::grid_value_to_count(value, "n"); break;
        case SweepAxis::ALPHA: row.cfg.alpha = value; break;
        case SweepAxis::D: row.cfg.d = detail::grid_value_to_count(value, "d"); break;
      }
      row.estimate = estimate_risk(row.cfg, threads);
      row.flags = row.estimate.validity_flags;

      // The bounds are decoration on a successful estimate: if one of them
      // is undefined here, say so in the flags and keep the NaN columns
      // instead of discarding the row.
      try {
        const NoiseModel noise = make_noise(row.cfg.noise);
        const ThresholdPolicy policy = resolve_policy(
            row.cfg.policy.kind, row.cfg.mechanism, noise, row.cfg.a,
            row.cfg.sigma, row.cfg.alpha, row.cfg.d, row.cfg.n,
            row.cfg.policy.manual_tau);
        row.tau = policy.tau;

        // The bound matching this run: regime follows the policy (inferred
        // from the signal size for manual thresholds), the variant follows
        // the selector (the magnitude selector pays the two-sided factor).
        Regime regime = Regime::LARGE_A;
        if (row.cfg.policy.kind == PolicyKind::SMALL_A)
          regime = Regime::SMALL_A;
        else if (row.cfg.policy.kind == PolicyKind::MANUAL) {
          regime = row.cfg.a >= 2.0 * row.cfg.sigma ? Regime::LARGE_A
                                                    : Regime::SMALL_A;
          row.flags.push_back(
              "bound regime inferred from signal size (manual threshold)");
        }
        const Variant variant = row.cfg.selector == SelectorKind::PLUS
                                    ? Variant::PLUS
                                    : Variant::SIGNED;
        const BoundInput in =
            make_bound_input(row.cfg.n, row.cfg.d, row.cfg.s, row.cfg.a,
                             row.cfg.sigma, row.cfg.alpha, noise, regime);
        row.lb_local = lower_bound_local(in);
        row.ub_matched =
            row.cfg.mechanism == Mechanism::LOCAL
                ? upper_bound_local(in, regime, variant, &row.flags)
                : upper_bound_global(in, regime, variant, &row.flags);
        const double chi2 = detail::chi2_for_fano(
            noise, row.cfg.a / row.cfg.sigma, &row.flags);
        if (row.cfg.d >= 2)
          row.fano_er = fano_lower_bound_exact_recovery(in, chi2, &row.flags);
        else
          row.flags.push_back("fano er undefined (d < 2)");
        if (row.cfg.d / row.cfg.s >= 2)
          row.fano_afr = fano_lower_bound_afr(in, chi2, &row.flags);
        else
          row.flags.push_back("fano afr undefined (floor(d/s) < 2)");
        const CriticalValues cv = critical_values(in);
        row.a_star_local = cv.a_star_local;
        row.a_star_global = cv.a_star_global;
      } catch (const std::exception& e) {
        row.flags.push_back(std::string("bounds unavailable: ") + e.what());
      }
    } catch (const std::exception& e) {
      row.error = e.what();
      row.estimate.mean_normalized_loss =
          std::numeric_limits<double>::quiet_NaN();
      row.estimate.std_error = std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dpselect
