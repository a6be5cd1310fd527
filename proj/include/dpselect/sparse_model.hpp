#pragma once

// Sparse mean vectors, raw-data generation, and Hamming recovery losses.
//
// A SparseMean is a d-dimensional vector with at most s nonzero entries, each
// of magnitude at least a.  The PLUS variant restricts nonzero entries to be
// positive; the SIGNED variant allows either sign.  Raw data are n i.i.d.
// rows X^i = theta + sigma * xi^i with xi drawn from a NoiseModel.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "dpselect/noise.hpp"
#include "dpselect/rng.hpp"

namespace dpselect {

// Dense row-major matrix; rows index observations, columns coordinates.
struct Matrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t n_, std::size_t d_) : n(n_), d(d_), data(n_ * d_, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * d + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * d + j]; }
};

enum class Variant { PLUS, SIGNED };

struct SparseMean {
  std::size_t d = 0;
  std::vector<double> entries;
  std::size_t s = 0;
  double a = 0.0;
  Variant variant = Variant::PLUS;
};

struct SupportIndicator {
  std::vector<int> bits;  // one per coordinate, 1 where theta_j != 0
};

struct RawSample {
  Matrix rows;
  double sigma = 0.0;
  NoiseModel noise;
};

// Hardest-to-recover parameter: exactly s nonzero entries of magnitude
// exactly a.  Placement defaults to the first s coordinates and signs to all
// positive; a SIGNED sign_pattern may flip individual entries.
inline SparseMean worst_case_theta(std::size_t d, std::size_t s, double a,
                                   Variant variant,
                                   const std::vector<int>& sign_pattern = {},
                                   const std::vector<std::size_t>&
                                       support_placement = {}) {
  if (s < 1 || s > d)
    throw std::invalid_argument("worst_case_theta: requires 1 <= s <= d");
  if (!(a > 0.0))
    throw std::invalid_argument("worst_case_theta: requires a > 0");
  if (!sign_pattern.empty() && sign_pattern.size() != s)
    throw std::invalid_argument(
        "worst_case_theta: sign_pattern must have one entry per support "
        "index");
  if (!support_placement.empty() && support_placement.size() != s)
    throw std::invalid_argument(
        "worst_case_theta: support_placement must list s distinct indices");

  SparseMean theta;
  theta.d = d;
  theta.s = s;
  theta.a = a;
  theta.variant = variant;
  theta.entries.assign(d, 0.0);
  for (std::size_t k = 0; k < s; ++k) {
    const std::size_t j = support_placement.empty() ? k : support_placement[k];
    if (j >= d)
      throw std::invalid_argument(
          "worst_case_theta: support index out of range");
    if (theta.entries[j] != 0.0)
      throw std::invalid_argument(
          "worst_case_theta: duplicate support index");
    int sign = sign_pattern.empty() ? 1 : sign_pattern[k];
    if (sign != 1 && sign != -1)
      throw std::invalid_argument(
          "worst_case_theta: sign_pattern entries must be +1 or -1");
    if (variant == Variant::PLUS && sign < 0)
      throw std::invalid_argument(
          "worst_case_theta: PLUS variant requires positive entries");
    theta.entries[j] = sign * a;
  }
  return theta;
}

inline SupportIndicator support_of(const SparseMean& theta) {
  SupportIndicator eta;
  eta.bits.reserve(theta.d);
  for (double v : theta.entries) eta.bits.push_back(v != 0.0 ? 1 : 0);
  return eta;
}

// Draws X[i][j] = theta_j + sigma * xi with xi i.i.d. from the noise model.
// Genuine noise is required: sigma = 0 is rejected.
inline RawSample generate(const SparseMean& theta, std::size_t n,
                          double sigma, const NoiseModel& noise, Rng& rng) {
  if (n < 1) throw std::invalid_argument("generate: requires n >= 1");
  if (!(sigma > 0.0))
    throw std::invalid_argument("generate: requires sigma > 0");
  RawSample out;
  out.sigma = sigma;
  out.noise = noise;
  out.rows = Matrix(n, theta.d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < theta.d; ++j)
      out.rows.at(i, j) = theta.entries[j] + sigma * noise.sampler(rng);
  return out;
}

// Number of coordinates where the two indicators disagree.
inline std::size_t hamming(const SupportIndicator& eta_hat,
                           const SupportIndicator& eta) {
  if (eta_hat.bits.size() != eta.bits.size())
    throw std::invalid_argument("hamming: dimension mismatch");
  std::size_t count = 0;
  for (std::size_t j = 0; j < eta.bits.size(); ++j)
    count += ((eta_hat.bits[j] != 0) != (eta.bits[j] != 0)) ? 1 : 0;
  return count;
}

// Hamming disagreement scaled by the sparsity budget; ranges over [0, d/s].
inline double normalized_hamming(const SupportIndicator& eta_hat,
                                 const SupportIndicator& eta,
                                 std::size_t s) {
  if (s < 1) throw std::invalid_argument("normalized_hamming: requires s >= 1");
  return static_cast<double>(hamming(eta_hat, eta)) / static_cast<double>(s);
}

}  // namespace dpselect
