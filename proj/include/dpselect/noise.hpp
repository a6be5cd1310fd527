#pragma once

// Symmetric, unit-variance, strongly log-concave noise families and the
// scalar functionals of them that the risk bounds consume: strong-convexity
// constants, sign-means, the threshold constants C1 and p(2), and the
// KL / chi-square / total-variation divergences between a noise law and its
// shift.
//
// Two families are provided:
//   * the standard Gaussian (closed-form everything), and
//   * a "tilted" family with density proportional to
//     exp(-lambda*|x| - c*x^2/2), rescaled to unit variance.
//
// For the tilted family the potential has a kink at the origin, so no finite
// two-point curvature bound holds pointwise.  The curvature cap c_upper
// reported here is instead the smallest constant (over a dense grid of shift
// values) that certifies both divergence caps used downstream:
//   KL(P0, Pa)   <= c_upper * a^2 / 2      and
//   chi2(P0, Pa) <= exp(c_upper * a^2) - 1 for every shift a.
// The KL cap follows from KL = c'a^2/2 + lambda'*(E|xi - a| - E|xi|) and
// E|xi - a| - E|xi| <= 2*p(0)*a^2/2; the chi-square cap from a tent-function
// bound on |x| - 2|x-a| + |x-2a| together with the density cap at 0.

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpselect/quadrature.hpp"
#include "dpselect/rng.hpp"

namespace dpselect {

struct NoiseModel {
  std::string name;
  // Strong-convexity constant of the potential: log pdf(x) + c_lower*x^2/2
  // is concave.
  double c_lower = 0.0;
  // Curvature cap certifying the divergence upper bounds above; absent when
  // no finite cap is known for the family.
  std::optional<double> c_upper;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  std::function<double(double)> log_pdf;
  std::function<double(Rng&)> sampler;
};

enum class Divergence { KL, CHI2, TV };

struct NoiseConstants {
  double C1;  // 2*Phi(2*sqrt(c_lower)) - 1, the large-shift sign-mean floor
  double p2;  // pdf(2), the small-shift sign-mean slope
};

namespace detail {

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779;  // 1/sqrt(2*pi)
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);  // 1/sqrt(2)
}

}  // namespace detail

inline NoiseModel make_gaussian() {
  NoiseModel m;
  m.name = "gaussian";
  m.c_lower = 1.0;
  m.c_upper = 1.0;
  m.pdf = [](double x) { return detail::std_normal_pdf(x); };
  m.cdf = [](double x) { return detail::std_normal_cdf(x); };
  m.log_pdf = [](double x) {
    return -0.5 * x * x - 0.91893853320467274178;  // log(sqrt(2*pi))
  };
  m.sampler = [](Rng& rng) { return rng.next_gaussian(); };
  return m;
}

// Noise with raw density proportional to exp(-lambda*|x| - c_raw*x^2/2),
// rescaled to unit variance.  lambda = 0 recovers the standard normal.
inline NoiseModel make_tilted(double c_raw, double lambda) {
  if (!std::isfinite(c_raw) || !std::isfinite(lambda) || c_raw <= 0.0 ||
      lambda < 0.0)
    throw std::invalid_argument(
        "make_tilted: requires finite c_raw > 0 and lambda >= 0");

  // Normalizer and variance of the raw (pre-rescaling) density, by symmetric
  // quadrature on [0, T] with T far enough out that the Gaussian-cap tail is
  // negligible at the requested accuracy.
  const auto raw = [c_raw, lambda](double x) {
    return std::exp(-lambda * std::abs(x) - 0.5 * c_raw * x * x);
  };
  const double t_raw = 10.0 / std::sqrt(c_raw);
  const auto check = [](QuadratureResult r, const char* what) {
    if (!std::isfinite(r.value) || r.error > 1e-9 * std::max(1.0, r.value))
      throw QuadratureError(std::string("make_tilted: ") + what +
                            " integral did not converge");
    return r.value;
  };
  const double zq =
      2.0 * check(integrate(raw, 0.0, t_raw), "normalization");
  const double m2 = 2.0 * check(integrate([&raw](double x) {
                                  return x * x * raw(x);
                                },
                                          0.0, t_raw),
                                "variance");
  const double var_raw = m2 / zq;

  // Rescale x -> x/s so the variance becomes 1.  The post-scaling potential
  // is lambda_p*|x| + c_p*x^2/2 with the constants below.
  const double s = std::sqrt(var_raw);
  const double lambda_p = lambda * s;
  const double c_p = c_raw * var_raw;
  const double z = zq / s;  // normalizer of exp(-lambda_p*|x| - c_p*x^2/2)
  const double p0 = 1.0 / z;

  // Curvature cap: limit value at shift 0 certifies the KL cap; the grid
  // maximum of the pointwise chi-square certificate covers all shifts.
  double c_up = c_p + 2.0 * lambda_p * p0;
  if (lambda_p > 0.0) {
    for (int i = 0; i <= 400; ++i) {
      const double t = 1e-3 * std::exp(i / 400.0 * std::log(16000.0));
      const double psi = std::expm1(2.0 * lambda_p * t) / lambda_p - 2.0 * t;
      const double cand =
          (c_p * t * t + std::log1p(p0 * psi)) / (t * t);
      if (cand > c_up) c_up = cand;
    }
  }

  NoiseModel m;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "tilted(c=%g,lambda=%g)", c_raw, lambda);
  m.name = buf;
  m.c_lower = c_p;
  m.c_upper = c_up;
  m.pdf = [lambda_p, c_p, p0](double x) {
    return p0 * std::exp(-lambda_p * std::abs(x) - 0.5 * c_p * x * x);
  };
  m.log_pdf = [lambda_p, c_p, z](double x) {
    return -lambda_p * std::abs(x) - 0.5 * c_p * x * x - std::log(z);
  };
  // Upper tail P(xi > t) for t >= 0 in closed form by completing the square:
  //   int_t^inf exp(-l*x - c*x^2/2) dx
  //     = exp(l^2/(2c)) * sqrt(2*pi/c) * (1 - Phi(sqrt(c)*t + l/sqrt(c))).
  const double sqrt_cp = std::sqrt(c_p);
  const double tail_coef = std::exp(0.5 * lambda_p * lambda_p / c_p) *
                           std::sqrt(2.0 * M_PI / c_p) / (2.0 * z);
  const auto tail = [sqrt_cp, lambda_p, tail_coef](double t) {
    const double y = sqrt_cp * t + lambda_p / sqrt_cp;
    return tail_coef * std::erfc(y * 0.7071067811865475244);
  };
  m.cdf = [tail](double x) {
    return x >= 0.0 ? 1.0 - tail(x) : tail(-x);
  };
  // Exact sampling: Gaussian proposal of matching curvature, thinned by the
  // Laplace factor exp(-lambda*|y|) <= 1, then rescaled to unit variance.
  const double inv_sqrt_c_raw = 1.0 / std::sqrt(c_raw);
  m.sampler = [lambda, inv_sqrt_c_raw, s](Rng& rng) {
    for (;;) {
      const double y = rng.next_gaussian() * inv_sqrt_c_raw;
      if (rng.next_unit() <= std::exp(-lambda * std::abs(y))) return y / s;
    }
  };
  return m;
}

// E[sgn(a + sigma*xi)] for the model's noise xi, parameterized by the
// signal-to-noise ratio a/sigma: equals 2*cdf(a/sigma) - 1.
inline double sign_mean(const NoiseModel& m, double a_over_sigma) {
  if (!(a_over_sigma >= 0.0))
    throw std::invalid_argument("sign_mean: requires a_over_sigma >= 0");
  return 2.0 * m.cdf(a_over_sigma) - 1.0;
}

// Threshold constants consumed by the risk bounds: C1 floors the sign-mean
// for shifts >= 2, p2 slopes it for shifts < 2.
inline NoiseConstants constants(const NoiseModel& m) {
  return {2.0 * detail::std_normal_cdf(2.0 * std::sqrt(m.c_lower)) - 1.0,
          m.pdf(2.0)};
}

// Divergence between the noise law P0 and its shift Pa (shift a_over_sigma),
// by adaptive quadrature split at the kinks of both potentials.  Throws
// QuadratureError when the summed error estimate exceeds the relative
// tolerance of 1e-6, and std::invalid_argument for CHI2 on a model without a
// finite curvature cap (the integral need not converge there).
inline double divergence(const NoiseModel& m, double a_over_sigma,
                         Divergence kind) {
  if (!(a_over_sigma > 0.0) || !std::isfinite(a_over_sigma))
    throw std::invalid_argument("divergence: requires a_over_sigma > 0");
  if (kind == Divergence::CHI2 && !m.c_upper)
    throw std::invalid_argument(
        "divergence: CHI2 requires a model with a finite curvature cap");

  const double a = a_over_sigma;
  // Truncation radius: the density cap pdf(x) <= exp(-c_lower*x^2/2)/sqrt(2)
  // bounds the mass beyond T by 2*(1 - Phi(7.5)) * sqrt(pi/c) < 1e-12.
  const double t_max = 7.5 / std::sqrt(m.c_lower);

  std::function<double(double)> integrand;
  std::vector<double> pts;
  switch (kind) {
    case Divergence::KL:
      integrand = [&m, a](double x) {
        return m.pdf(x) * (m.log_pdf(x) - m.log_pdf(x - a));
      };
      pts = {-t_max, 0.0, a, a + t_max};
      break;
    case Divergence::CHI2:
      // Integral of p_a(x)^2 / p_0(x); concentrates near x = 2a.
      integrand = [&m, a](double x) {
        return std::exp(2.0 * m.log_pdf(x - a) - m.log_pdf(x));
      };
      pts = {-t_max, 0.0, a, 2.0 * a, 2.0 * a + t_max};
      break;
    case Divergence::TV:
      // Densities of the two shifts cross at a/2.
      integrand = [&m, a](double x) {
        return 0.5 * std::abs(m.pdf(x) - m.pdf(x - a));
      };
      pts = {-t_max, 0.0, 0.5 * a, a, a + t_max};
      break;
  }
  double value = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (!(pts[i] < pts[i + 1])) continue;  // degenerate segment for tiny a
    const QuadratureResult r = integrate(integrand, pts[i], pts[i + 1]);
    value += r.value;
    err += r.error;
  }
  if (!std::isfinite(value) ||
      err > std::max(1e-6 * std::abs(value), 1e-10))
    throw QuadratureError("divergence: quadrature did not converge");
  return kind == Divergence::CHI2 ? value - 1.0 : value;
}

}  // namespace dpselect
