#pragma once

// Threshold selectors over averaged private releases, and the resolution of
// the threshold policies attached to each (mechanism, signal-regime) pair.
//
// Selectors are separable: coordinate j of the output depends only on column
// j of Z, and none of them ever sees the sparsity budget s.  Policy
// resolution evaluates the preconditions under which the matching risk
// bounds are proved and records violations as warnings instead of refusing
// to run — sweep experiments deliberately cross regime boundaries.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpselect/mech_local.hpp"
#include "dpselect/noise.hpp"
#include "dpselect/sparse_model.hpp"

namespace dpselect {

enum class Mechanism { LOCAL, GLOBAL };

enum class PolicyKind { LARGE_A, SMALL_A, MANUAL };

struct ThresholdPolicy {
  PolicyKind kind = PolicyKind::MANUAL;
  double tau = 0.0;
  std::vector<std::string> validity_flags;  // violated preconditions
};

inline std::vector<double> column_means(const Matrix& Z) {
  std::vector<double> means(Z.d, 0.0);
  for (std::size_t i = 0; i < Z.n; ++i)
    for (std::size_t j = 0; j < Z.d; ++j) means[j] += Z.at(i, j);
  for (auto& m : means) m /= static_cast<double>(Z.n);
  return means;
}

// Marks coordinate j when its column mean reaches tau.
inline SupportIndicator select_plus(const PrivateSample& Z, double tau) {
  SupportIndicator eta;
  eta.bits.reserve(Z.rows.d);
  for (double m : column_means(Z.rows)) eta.bits.push_back(m >= tau ? 1 : 0);
  return eta;
}

// Marks coordinate j when the magnitude of its column mean reaches tau;
// recovers signals of either sign.
inline SupportIndicator select_abs(const PrivateSample& Z, double tau) {
  SupportIndicator eta;
  eta.bits.reserve(Z.rows.d);
  for (double m : column_means(Z.rows))
    eta.bits.push_back(std::abs(m) >= tau ? 1 : 0);
  return eta;
}

// Resolves the threshold for the requested policy and evaluates every
// precondition stated for the matching risk bound of the (mechanism, regime)
// pair.  Violations are recorded in validity_flags, never thrown: the
// resolved policy still runs.
//
//   LARGE_A: tau = C1/2, intended for a >= 2*sigma.
//     local:  requires C1 - tau > 0, tau*alpha/(8d) <= 1,
//             alpha*(C1 - tau)/(8d) <= 1.
//     global: requires C1 - tau > 0 (and strictly a > 2*sigma).
//   SMALL_A: tau = p(2)*a/sigma, intended for a <= 2*sigma.
//     local:  requires tau < 2*p(2)*a/sigma, tau*alpha/(8d) < 1,
//             alpha*(p(2)*a/sigma - tau/2)/(4d) <= 1.
//     global: requires tau < 2*p(2)*a/sigma and a <= 2*sigma.
//   MANUAL:  tau supplied by the caller; no guarantee attached.
inline ThresholdPolicy resolve_policy(
    PolicyKind kind, Mechanism mech, const NoiseModel& noise, double a,
    double sigma, double alpha, std::size_t d, std::size_t n,
    std::optional<double> manual_tau = std::nullopt) {
  if (!(sigma > 0.0) || !(alpha > 0.0) || d < 1)
    throw std::invalid_argument(
        "resolve_policy: requires sigma > 0, alpha > 0, d >= 1");
  (void)n;  // no stated precondition involves the sample size

  const NoiseConstants k = constants(noise);
  const double dd = static_cast<double>(d);
  ThresholdPolicy policy;
  policy.kind = kind;

  switch (kind) {
    case PolicyKind::LARGE_A: {
      policy.tau = 0.5 * k.C1;
      if (mech == Mechanism::LOCAL) {
        if (!(a >= 2.0 * sigma))
          policy.validity_flags.push_back(
              "large-a regime requires a >= 2*sigma");
        if (!(k.C1 - policy.tau > 0.0))
          policy.validity_flags.push_back("requires C1 - tau > 0");
        if (!(policy.tau * alpha / (8.0 * dd) <= 1.0))
          policy.validity_flags.push_back("requires tau*alpha/(8d) <= 1");
        if (!(alpha * (k.C1 - policy.tau) / (8.0 * dd) <= 1.0))
          policy.validity_flags.push_back(
              "requires alpha*(C1-tau)/(8d) <= 1");
      } else {
        if (!(a > 2.0 * sigma))
          policy.validity_flags.push_back(
              "large-a regime requires a > 2*sigma");
        if (!(k.C1 - policy.tau > 0.0))
          policy.validity_flags.push_back("requires C1 - tau > 0");
      }
      break;
    }
    case PolicyKind::SMALL_A: {
      policy.tau = k.p2 * a / sigma;
      if (a > 2.0 * sigma)
        policy.validity_flags.push_back(
            "tau < 2*p(2)*a/sigma holds but regime mismatched (a >= "
            "2*sigma)");
      if (!(policy.tau < 2.0 * k.p2 * a / sigma))
        policy.validity_flags.push_back("requires tau < 2*p(2)*a/sigma");
      if (mech == Mechanism::LOCAL) {
        if (!(policy.tau * alpha / (8.0 * dd) < 1.0))
          policy.validity_flags.push_back("requires tau*alpha/(8d) < 1");
        if (!(alpha * (k.p2 * a / sigma - 0.5 * policy.tau) / (4.0 * dd) <=
              1.0))
          policy.validity_flags.push_back(
              "requires alpha*(p(2)*a/sigma - tau/2)/(4d) <= 1");
      }
      break;
    }
    case PolicyKind::MANUAL: {
      if (!manual_tau)
        throw std::invalid_argument(
            "resolve_policy: MANUAL policy needs an explicit tau");
      policy.tau = *manual_tau;
      break;
    }
  }
  if (!(policy.tau > 0.0))
    policy.validity_flags.push_back("resolved tau is not positive");
  return policy;
}

}  // namespace dpselect
