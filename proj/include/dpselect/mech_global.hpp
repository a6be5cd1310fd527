#pragma once

// Coordinate-global privacy mechanism on the sign hypercube.  Each raw row
// is reduced to its sign vector x_tilde in {-1,1}^d, an orientation is drawn
// with probability pi_alpha = e^alpha/(e^alpha+1), and a vertex of {-B,B}^d
// is drawn uniformly from the half-cube agreeing (A) or disagreeing (C) with
// x_tilde; ties <z,x_tilde> = 0 belong to A exactly when z_1 = B*x_tilde_1.
// The magnitude B = ((e^alpha+1)/(e^alpha-1)) * K_d is calibrated so the
// emitted coordinates are conditionally unbiased for sgn(x); for even d the
// tie-break privileges the first coordinate, which is compensated by the
// deterministic rescale Z_1 = ((d-2)/(2(d-1))) * Ztilde_1.
//
// An exact enumeration oracle over all 2^d vertices (small d) supplies the
// privacy certificate and conditional means without sampling error.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dpselect/mech_local.hpp"
#include "dpselect/rng.hpp"
#include "dpselect/sparse_model.hpp"

namespace dpselect {
namespace detail {

// Exact rational K_d for d <= 64.  The reduced numerator and denominator fit
// in 64 bits there, but the unreduced intermediates do not, so the
// arithmetic runs in unsigned 128-bit integers and reduces by gcd at the
// end.
struct KdFraction {
  std::uint64_t num;
  std::uint64_t den;
};

inline unsigned __int128 binomial_u128(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 res = 1;
  for (unsigned i = 0; i < k; ++i) {
    res *= n - i;
    res /= i + 1;  // exact: res holds C(n, i+1) * prefix divisibility
  }
  return res;
}

inline unsigned __int128 gcd_u128(unsigned __int128 a, unsigned __int128 b) {
  while (b != 0) {
    const unsigned __int128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline KdFraction kd_rational(std::size_t d) {
  unsigned __int128 num, den;
  if (d % 2 == 1) {
    // K_d = 2^(d-1) / C(d-1, (d-1)/2)
    num = static_cast<unsigned __int128>(1) << (d - 1);
    den = binomial_u128(static_cast<unsigned>(d - 1),
                        static_cast<unsigned>((d - 1) / 2));
  } else {
    // K_d = 2^(d-1) * (d/2) / (C(d-2, d/2-1) * (d-2))
    num = (static_cast<unsigned __int128>(1) << (d - 1)) * (d / 2);
    den = binomial_u128(static_cast<unsigned>(d - 2),
                        static_cast<unsigned>(d / 2 - 1)) *
          (d - 2);
  }
  const unsigned __int128 g = gcd_u128(num, den);
  return {static_cast<std::uint64_t>(num / g),
          static_cast<std::uint64_t>(den / g)};
}

inline double kd_lgamma(std::size_t d) {
  const double dd = static_cast<double>(d);
  double log_inv_kd;
  if (d % 2 == 1) {
    // 1/K_d = C(d-1, (d-1)/2) / 2^(d-1)
    log_inv_kd = std::lgamma(dd) - 2.0 * std::lgamma((dd + 1.0) / 2.0) -
                 (dd - 1.0) * M_LN2;
  } else {
    // 1/K_d = (d-2)! (d-2) / (2^(d-1) (d/2-1)! (d/2)!)
    log_inv_kd = std::lgamma(dd - 1.0) + std::log(dd - 2.0) -
                 (dd - 1.0) * M_LN2 - std::lgamma(dd / 2.0) -
                 std::lgamma(dd / 2.0 + 1.0);
  }
  return std::exp(-log_inv_kd);
}

}  // namespace detail

// Normalization constant K_d: exact rational arithmetic for d <= 64,
// log-gamma evaluation beyond (the two agree to 1e-12 relative on their
// overlap).  Even d <= 2 is rejected: the even-d formula gives 1/K_2 = 0, so
// the mechanism's magnitude would be infinite.
inline double compute_kd(std::size_t d) {
  if (d < 1) throw std::invalid_argument("compute_kd: requires d >= 1");
  if (d % 2 == 0 && d <= 2)
    throw std::invalid_argument(
        "compute_kd: even d <= 2 is degenerate (1/K_2 = 0 makes the "
        "magnitude B infinite)");
  if (d <= 64) {
    const auto f = detail::kd_rational(d);
    return static_cast<double>(f.num) / static_cast<double>(f.den);
  }
  return detail::kd_lgamma(d);
}

struct GlobalMechConfig {
  double alpha = 0.0;
  std::size_t d = 0;
  double pi_alpha = 0.0;  // e^alpha / (e^alpha + 1)
  double kd = 0.0;
  double b = 0.0;  // magnitude of emitted coordinates before any rescale
  double first_coord_rescale = 1.0;  // (d-2)/(2(d-1)) for even d, else 1
  // Test hook: re-checks half-cube membership on every draw.
  bool verify_membership = false;
};

// Builds the mechanism configuration.  b_scale is a tamper hook for audits:
// production value 1; any other value deliberately breaks the unbiasedness
// calibration so that certification harnesses can observe the failure.
inline GlobalMechConfig make_global_config(std::size_t d, double alpha,
                                           double b_scale = 1.0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument(
        "make_global_config: requires finite alpha > 0");
  GlobalMechConfig cfg;
  cfg.alpha = alpha;
  cfg.d = d;
  cfg.kd = compute_kd(d);  // rejects d = 0 and even d <= 2
  cfg.pi_alpha = 1.0 / (1.0 + std::exp(-alpha));
  // (e^alpha + 1)/(e^alpha - 1), with expm1 guarding small alpha.
  cfg.b = b_scale * (std::expm1(alpha) + 2.0) / std::expm1(alpha) * cfg.kd;
  if (d % 2 == 0)
    cfg.first_coord_rescale =
        (static_cast<double>(d) - 2.0) / (2.0 * (static_cast<double>(d) - 1.0));
  return cfg;
}

enum class Orientation { A, C };

namespace detail {

// Membership of the sign vertex v (entries +-1) in the half-cube A_{x}:
// positive inner product, or a tie resolved by the first coordinate.
inline bool in_half_cube_a(const std::vector<int>& v,
                           const std::vector<int>& x_tilde) {
  long dot = 0;
  for (std::size_t j = 0; j < v.size(); ++j) dot += v[j] * x_tilde[j];
  if (dot != 0) return dot > 0;
  return v[0] == x_tilde[0];
}

}  // namespace detail

// Uniform draw from the requested half-cube, scaled to {-B,B}^d.  A uniform
// vertex of the full cube is drawn and negated when it falls in the opposite
// half: negation is a bijection between A and C (it flips the inner product,
// and on ties it flips the first coordinate), so the result is exactly
// uniform with constant work per draw.
inline std::vector<double> sample_half_cube(const std::vector<int>& x_tilde,
                                            Orientation orientation, double b,
                                            Rng& rng) {
  const std::size_t d = x_tilde.size();
  std::vector<int> v(d);
  std::uint64_t bits = 0;
  for (std::size_t j = 0; j < d; ++j) {
    if (j % 64 == 0) bits = rng.next_u64();
    v[j] = (bits >> (j % 64)) & 1u ? 1 : -1;
  }
  const bool in_a = detail::in_half_cube_a(v, x_tilde);
  const bool want_a = orientation == Orientation::A;
  const double flip = (in_a == want_a) ? 1.0 : -1.0;
  std::vector<double> out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = flip * b * v[j];
  return out;
}

namespace detail {

inline std::vector<int> sign_vector(const Matrix& rows, std::size_t i) {
  std::vector<int> x_tilde(rows.d);
  for (std::size_t j = 0; j < rows.d; ++j)
    x_tilde[j] = rows.at(i, j) >= 0.0 ? 1 : -1;
  return x_tilde;
}

}  // namespace detail

// Applies the three-step hypercube mechanism to every row of X.
inline PrivateSample privatize_global(const RawSample& X,
                                      const GlobalMechConfig& cfg, Rng& rng) {
  if (cfg.d != X.rows.d)
    throw std::invalid_argument(
        "privatize_global: config dimension does not match the sample");
  PrivateSample out;
  out.mechanism = "global";
  out.alpha = cfg.alpha;
  out.rows = Matrix(X.rows.n, X.rows.d);
  for (std::size_t i = 0; i < X.rows.n; ++i) {
    const std::vector<int> x_tilde = detail::sign_vector(X.rows, i);
    const Orientation orientation = rng.next_unit() < cfg.pi_alpha
                                        ? Orientation::A
                                        : Orientation::C;
    const std::vector<double> z =
        sample_half_cube(x_tilde, orientation, cfg.b, rng);
    if (cfg.verify_membership) {
      std::vector<int> v(cfg.d);
      for (std::size_t j = 0; j < cfg.d; ++j) v[j] = z[j] > 0.0 ? 1 : -1;
      const bool in_a = detail::in_half_cube_a(v, x_tilde);
      if (in_a != (orientation == Orientation::A))
        throw std::logic_error(
            "privatize_global: drawn vertex is outside the requested "
            "half-cube");
    }
    for (std::size_t j = 0; j < cfg.d; ++j) out.rows.at(i, j) = z[j];
    out.rows.at(i, 0) *= cfg.first_coord_rescale;
  }
  return out;
}

struct PmfEntry {
  std::vector<double> z;  // vertex of {-B, B}^d, before any rescale
  double prob;
};

// Exact conditional law of the pre-rescale output given X = x, from the set
// definitions and pi_alpha.  Every vertex of {-B,B}^d carries probability
// pi_alpha/2^(d-1) (its sign pattern in A_x) or (1-pi_alpha)/2^(d-1).
inline std::vector<PmfEntry> enumerate_pmf(const std::vector<double>& x,
                                           const GlobalMechConfig& cfg) {
  if (x.size() != cfg.d)
    throw std::invalid_argument("enumerate_pmf: dimension mismatch");
  if (cfg.d > 20)
    throw std::invalid_argument(
        "enumerate_pmf: enumeration supports d <= 20");
  std::vector<int> x_tilde(cfg.d);
  for (std::size_t j = 0; j < cfg.d; ++j) x_tilde[j] = x[j] >= 0.0 ? 1 : -1;
  const double half_count = std::ldexp(1.0, static_cast<int>(cfg.d) - 1);
  const double p_a = cfg.pi_alpha / half_count;
  const double p_c = (1.0 - cfg.pi_alpha) / half_count;
  std::vector<PmfEntry> pmf;
  pmf.reserve(static_cast<std::size_t>(1) << cfg.d);
  std::vector<int> v(cfg.d);
  for (std::uint64_t mask = 0; mask < (static_cast<std::uint64_t>(1) << cfg.d);
       ++mask) {
    for (std::size_t j = 0; j < cfg.d; ++j)
      v[j] = (mask >> j) & 1u ? 1 : -1;
    PmfEntry entry;
    entry.prob = detail::in_half_cube_a(v, x_tilde) ? p_a : p_c;
    entry.z.resize(cfg.d);
    for (std::size_t j = 0; j < cfg.d; ++j) entry.z[j] = cfg.b * v[j];
    pmf.push_back(std::move(entry));
  }
  return pmf;
}

// Worst-case likelihood ratio max_z pmf(z|x)/pmf(z|x') by exhaustive
// enumeration; bounded by e^alpha, with equality whenever the two sign
// vectors differ anywhere.
inline double dp_certificate_global(const GlobalMechConfig& cfg,
                                    const std::vector<double>& x,
                                    const std::vector<double>& x_prime) {
  const auto pmf_x = enumerate_pmf(x, cfg);
  const auto pmf_xp = enumerate_pmf(x_prime, cfg);
  double worst = 0.0;
  for (std::size_t k = 0; k < pmf_x.size(); ++k)
    worst = std::max(worst, pmf_x[k].prob / pmf_xp[k].prob);
  return worst;
}

// E[Z | X = x] computed exactly from the enumeration, with the even-d
// first-coordinate rescale applied; equals sgn(x) componentwise.
inline std::vector<double> conditional_mean_exact(
    const std::vector<double>& x, const GlobalMechConfig& cfg) {
  const auto pmf = enumerate_pmf(x, cfg);
  std::vector<double> mean(cfg.d, 0.0);
  for (const auto& entry : pmf)
    for (std::size_t j = 0; j < cfg.d; ++j)
      mean[j] += entry.prob * entry.z[j];
  mean[0] *= cfg.first_coord_rescale;
  return mean;
}

}  // namespace dpselect
