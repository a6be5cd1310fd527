// Threshold selectors: column-mean thresholding, separability and symmetry
// properties, and resolution of the large-/small-signal threshold policies
// with their precondition flags.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dpselect/mech_local.hpp"
#include "dpselect/noise.hpp"
#include "dpselect/rng.hpp"
#include "dpselect/selectors.hpp"
#include "dpselect/sparse_model.hpp"

namespace {

using namespace dpselect;

PrivateSample sample_from_rows(const std::vector<std::vector<double>>& rows) {
  PrivateSample z;
  z.mechanism = "test";
  z.alpha = 1.0;
  z.rows = Matrix(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      z.rows.at(i, j) = rows[i][j];
  return z;
}

PrivateSample random_sample(std::size_t n, std::size_t d, Rng& rng) {
  PrivateSample z;
  z.mechanism = "test";
  z.alpha = 1.0;
  z.rows = Matrix(n, d);
  for (auto& v : z.rows.data) v = 3.0 * rng.next_gaussian();
  return z;
}

bool has_flag(const ThresholdPolicy& p, const std::string& needle) {
  for (const auto& f : p.validity_flags)
    if (f.find(needle) != std::string::npos) return true;
  return false;
}

TEST(ColumnMeans, AveragesEachCoordinate) {
  const auto z = sample_from_rows({{1.0, 4.0}, {2.0, 6.0}, {3.0, 8.0}});
  const auto m = column_means(z.rows);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m[0], 2.0);
  EXPECT_DOUBLE_EQ(m[1], 6.0);
}

TEST(SelectPlus, ThresholdsColumnMeans) {
  // Column means are exactly (0.9, 0.1).
  const auto z = sample_from_rows({{0.8, 0.3}, {1.0, -0.1}});
  EXPECT_EQ(select_plus(z, 0.5).bits, (std::vector<int>{1, 0}));
  EXPECT_EQ(select_plus(z, 0.05).bits, (std::vector<int>{1, 1}));
  EXPECT_EQ(select_plus(z, 2.0).bits, (std::vector<int>{0, 0}));
  // The comparison is inclusive: a mean exactly at tau is selected.
  EXPECT_EQ(select_plus(z, 0.9).bits, (std::vector<int>{1, 0}));
}

TEST(SelectAbs, ThresholdsMagnitudes) {
  // Column means are exactly (-0.9, 0.1).
  const auto z = sample_from_rows({{-0.8, 0.3}, {-1.0, -0.1}});
  EXPECT_EQ(select_abs(z, 0.5).bits, (std::vector<int>{1, 0}));
  EXPECT_EQ(select_plus(z, 0.5).bits, (std::vector<int>{0, 0}));
  EXPECT_EQ(select_abs(z, 0.9).bits, (std::vector<int>{1, 0}));
}

TEST(Selectors, MonotoneInThreshold) {
  Rng rng(2024, 0);
  const auto z = random_sample(8, 12, rng);
  const std::vector<double> grid = {0.01, 0.1, 0.5, 1.0, 2.0, 5.0};
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const auto lo_p = select_plus(z, grid[g - 1]).bits;
    const auto hi_p = select_plus(z, grid[g]).bits;
    const auto lo_a = select_abs(z, grid[g - 1]).bits;
    const auto hi_a = select_abs(z, grid[g]).bits;
    for (std::size_t j = 0; j < 12; ++j) {
      EXPECT_LE(hi_p[j], lo_p[j]);  // raising tau can only deselect
      EXPECT_LE(hi_a[j], lo_a[j]);
    }
  }
}

TEST(Selectors, AbsDominatesPlusPointwise) {
  Rng rng(77, 1);
  for (int rep = 0; rep < 20; ++rep) {
    const auto z = random_sample(5, 9, rng);
    const double tau = 0.2 + 0.4 * rng.next_unit();
    const auto p = select_plus(z, tau).bits;
    const auto a = select_abs(z, tau).bits;
    for (std::size_t j = 0; j < 9; ++j) EXPECT_LE(p[j], a[j]);
  }
}

TEST(SelectAbs, InvariantUnderGlobalNegation) {
  Rng rng(5150, 2);
  auto z = random_sample(6, 10, rng);
  const auto before = select_abs(z, 0.7).bits;
  for (auto& v : z.rows.data) v = -v;
  EXPECT_EQ(select_abs(z, 0.7).bits, before);
}

TEST(Selectors, SeparableAcrossCoordinates) {
  // Coordinate j of the output must not react to arbitrary changes in the
  // other columns.
  Rng rng(31337, 3);
  auto z = random_sample(7, 6, rng);
  const double tau = 0.4;
  const auto base_p = select_plus(z, tau).bits;
  const auto base_a = select_abs(z, tau).bits;
  for (std::size_t j = 0; j < 6; ++j) {
    auto mutated = z;
    for (std::size_t k = 0; k < 6; ++k) {
      if (k == j) continue;
      for (std::size_t i = 0; i < mutated.rows.n; ++i)
        mutated.rows.at(i, k) = 100.0 * rng.next_gaussian();
    }
    EXPECT_EQ(select_plus(mutated, tau).bits[j], base_p[j]) << "j=" << j;
    EXPECT_EQ(select_abs(mutated, tau).bits[j], base_a[j]) << "j=" << j;
  }
}

TEST(Selectors, EquivariantUnderColumnPermutation) {
  Rng rng(99, 4);
  const auto z = random_sample(9, 8, rng);
  std::vector<std::size_t> perm(8);
  std::iota(perm.begin(), perm.end(), 0u);
  // Fixed nontrivial permutation.
  std::rotate(perm.begin(), perm.begin() + 3, perm.end());
  std::swap(perm[0], perm[5]);

  PrivateSample permuted = z;
  for (std::size_t i = 0; i < z.rows.n; ++i)
    for (std::size_t j = 0; j < 8; ++j)
      permuted.rows.at(i, j) = z.rows.at(i, perm[j]);

  const double tau = 0.33;
  const auto base_p = select_plus(z, tau).bits;
  const auto perm_p = select_plus(permuted, tau).bits;
  const auto base_a = select_abs(z, tau).bits;
  const auto perm_a = select_abs(permuted, tau).bits;
  for (std::size_t j = 0; j < 8; ++j) {
    EXPECT_EQ(perm_p[j], base_p[perm[j]]);
    EXPECT_EQ(perm_a[j], base_a[perm[j]]);
  }
}

TEST(Selectors, AbsRecoversSignedSignalsPlusMisses) {
  // theta = (+2, -2, 0, 0, 0, 0): the magnitude selector should recover both
  // support coordinates while the one-sided selector systematically misses
  // the negative one, so its averaged loss stays near 1/2.
  const auto theta = worst_case_theta(6, 2, 2.0, Variant::SIGNED, {+1, -1});
  const auto eta = support_of(theta);
  const auto noise = make_gaussian();
  LocalMechConfig mech;
  mech.alpha = 3.0;
  mech.d = 6;
  const auto policy = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL,
                                     noise, 2.0, 1.0, 3.0, 6, 1600);

  double loss_plus = 0.0, loss_abs = 0.0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    Rng rng(424242, static_cast<std::uint64_t>(t));
    const auto x = generate(theta, 1600, 1.0, noise, rng);
    const auto z = privatize_local(x, mech, rng);
    loss_plus += normalized_hamming(select_plus(z, policy.tau), eta, 2);
    loss_abs += normalized_hamming(select_abs(z, policy.tau), eta, 2);
  }
  loss_plus /= trials;
  loss_abs /= trials;
  EXPECT_GE(loss_plus, 0.45);  // the -a coordinate is essentially never found
  EXPECT_LE(loss_abs, 0.05);
  EXPECT_LT(loss_abs, loss_plus);
}

TEST(ResolvePolicy, LargeSignalThresholdIsHalfC1) {
  const auto noise = make_gaussian();
  const auto p = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                                2.5, 1.0, 1.0, 10, 1000);
  // Gaussian C1 = 2*Phi(2) - 1 = erf(sqrt(2)) = 0.95449973610364159, halved.
  EXPECT_NEAR(p.tau, 0.47724986805182079, 1e-15);
  EXPECT_TRUE(p.validity_flags.empty())
      << "unexpected flag: " << p.validity_flags.front();
}

TEST(ResolvePolicy, SmallSignalThresholdScalesWithSignal) {
  const auto noise = make_gaussian();
  const auto p = resolve_policy(PolicyKind::SMALL_A, Mechanism::LOCAL, noise,
                                1.0, 1.0, 1.0, 10, 1000);
  // Gaussian p(2) = phi(2) = 0.053990966513188052; tau = p(2) * a / sigma.
  EXPECT_NEAR(p.tau, 0.053990966513188052, 1e-15);
  EXPECT_TRUE(p.validity_flags.empty());

  const auto q = resolve_policy(PolicyKind::SMALL_A, Mechanism::GLOBAL, noise,
                                0.5, 2.0, 1.0, 10, 1000);
  EXPECT_NEAR(q.tau, 0.053990966513188052 * 0.25, 1e-16);
  EXPECT_TRUE(q.validity_flags.empty());
}

TEST(ResolvePolicy, TiltedConstantsFeedThresholds) {
  const auto noise = make_tilted(1.0, 1.0);
  const auto k = constants(noise);
  const auto large = resolve_policy(PolicyKind::LARGE_A, Mechanism::GLOBAL,
                                    noise, 3.0, 1.0, 1.0, 8, 500);
  EXPECT_DOUBLE_EQ(large.tau, 0.5 * k.C1);
  EXPECT_NEAR(large.tau, 0.5 * 0.83186110163788161, 1e-13);
  EXPECT_TRUE(large.validity_flags.empty());

  const auto small = resolve_policy(PolicyKind::SMALL_A, Mechanism::LOCAL,
                                    noise, 0.7, 1.0, 1.0, 8, 500);
  EXPECT_DOUBLE_EQ(small.tau, k.p2 * 0.7);
  EXPECT_NEAR(small.tau, 0.051233341787388460 * 0.7, 1e-13);
  EXPECT_TRUE(small.validity_flags.empty());
}

TEST(ResolvePolicy, FlagsRegimeMismatches) {
  const auto noise = make_gaussian();
  // Small-signal policy requested for a clearly large signal.
  const auto s3 = resolve_policy(PolicyKind::SMALL_A, Mechanism::LOCAL, noise,
                                 3.0, 1.0, 1.0, 10, 1000);
  ASSERT_FALSE(s3.validity_flags.empty());
  EXPECT_TRUE(has_flag(s3, "regime mismatched"));
  EXPECT_NEAR(s3.tau, 3.0 * 0.053990966513188052, 1e-15);  // still resolved

  // Large-signal policy requested for a small signal.
  const auto l1 = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                                 1.0, 1.0, 1.0, 10, 1000);
  EXPECT_TRUE(has_flag(l1, "a >= 2*sigma"));

  // The local bound covers a = 2*sigma inclusively; the global one is
  // strict, so equality flags only for the global mechanism.
  const auto ledge = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL,
                                    noise, 2.0, 1.0, 1.0, 10, 1000);
  EXPECT_TRUE(ledge.validity_flags.empty());
  const auto gedge = resolve_policy(PolicyKind::LARGE_A, Mechanism::GLOBAL,
                                    noise, 2.0, 1.0, 1.0, 10, 1000);
  EXPECT_TRUE(has_flag(gedge, "a > 2*sigma"));
  const auto gok = resolve_policy(PolicyKind::LARGE_A, Mechanism::GLOBAL,
                                  noise, 2.001, 1.0, 1.0, 10, 1000);
  EXPECT_TRUE(gok.validity_flags.empty());
}

TEST(ResolvePolicy, FlagsBudgetConditionsAtExtremeAlpha) {
  const auto noise = make_gaussian();
  // tau*alpha/(8d) = 0.477*2000/8 >> 1 at d = 1.
  const auto large = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL,
                                    noise, 5.0, 1.0, 2000.0, 1, 100);
  EXPECT_TRUE(has_flag(large, "tau*alpha/(8d) <= 1"));
  EXPECT_TRUE(has_flag(large, "alpha*(C1-tau)/(8d) <= 1"));

  const auto small = resolve_policy(PolicyKind::SMALL_A, Mechanism::LOCAL,
                                    noise, 1.0, 1.0, 2000.0, 1, 100);
  EXPECT_TRUE(has_flag(small, "tau*alpha/(8d) < 1"));
  EXPECT_TRUE(has_flag(small, "alpha*(p(2)*a/sigma - tau/2)/(4d) <= 1"));

  // The same alpha is unremarkable for the global mechanism, whose bound
  // carries no alpha/d conditions.
  const auto glob = resolve_policy(PolicyKind::LARGE_A, Mechanism::GLOBAL,
                                   noise, 5.0, 1.0, 2000.0, 1, 100);
  EXPECT_TRUE(glob.validity_flags.empty());
}

TEST(ResolvePolicy, ManualPolicyPassesTauThrough) {
  const auto noise = make_gaussian();
  const auto p = resolve_policy(PolicyKind::MANUAL, Mechanism::LOCAL, noise,
                                1.0, 1.0, 1.0, 10, 1000, 0.3);
  EXPECT_DOUBLE_EQ(p.tau, 0.3);
  EXPECT_TRUE(p.validity_flags.empty());

  EXPECT_THROW(resolve_policy(PolicyKind::MANUAL, Mechanism::LOCAL, noise,
                              1.0, 1.0, 1.0, 10, 1000),
               std::invalid_argument);

  const auto neg = resolve_policy(PolicyKind::MANUAL, Mechanism::GLOBAL,
                                  noise, 1.0, 1.0, 1.0, 10, 1000, -0.5);
  EXPECT_TRUE(has_flag(neg, "not positive"));
}

TEST(ResolvePolicy, ResolvedTauPositiveAcrossGrid) {
  const auto gaussian = make_gaussian();
  const auto tilted = make_tilted(2.0, 0.5);
  for (const auto* noise : {&gaussian, &tilted}) {
    for (double a : {0.05, 0.5, 1.0, 2.0, 8.0}) {
      for (double sigma : {0.5, 1.0, 3.0}) {
        for (auto kind : {PolicyKind::LARGE_A, PolicyKind::SMALL_A}) {
          for (auto mech : {Mechanism::LOCAL, Mechanism::GLOBAL}) {
            const auto p =
                resolve_policy(kind, mech, *noise, a, sigma, 1.0, 20, 500);
            EXPECT_GT(p.tau, 0.0);
            EXPECT_FALSE(has_flag(p, "not positive"));
          }
        }
      }
    }
  }
}

TEST(ResolvePolicy, SampleSizeDoesNotAffectThreshold) {
  const auto noise = make_gaussian();
  const auto p1 = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                                 2.5, 1.0, 1.0, 10, 10);
  const auto p2 = resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                                 2.5, 1.0, 1.0, 10, 10000000);
  EXPECT_DOUBLE_EQ(p1.tau, p2.tau);
}

TEST(ResolvePolicy, RejectsNonsenseArguments) {
  const auto noise = make_gaussian();
  EXPECT_THROW(resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                              1.0, 0.0, 1.0, 10, 100),
               std::invalid_argument);
  EXPECT_THROW(resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                              1.0, 1.0, -1.0, 10, 100),
               std::invalid_argument);
  EXPECT_THROW(resolve_policy(PolicyKind::LARGE_A, Mechanism::LOCAL, noise,
                              1.0, 1.0, 1.0, 0, 100),
               std::invalid_argument);
}

}  // namespace
