// Copyright 2026 The ncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <vector>

#include "ncf/budget.hpp"
#include "ncf/errors.hpp"
#include "ncf/rscc.hpp"

namespace ncf {
namespace {

// Sum over branches i = N..cut of V_i(x) with N/(x+i) < u, plus the exact
// tail (x+N)/(x+cut+1) when every later branch lands below u.
double brute_force_below(int n, double x, double u, long cut) {
  long double total = 0.0L;
  for (long i = n; i <= cut; ++i) {
    const double xi = x + static_cast<double>(i);
    if (n / xi < u) total += (x + n) / (xi * (xi + 1.0));
  }
  const double last_image = n / (x + static_cast<double>(cut + 1));
  if (last_image < u) total += (x + n) / (x + static_cast<double>(cut + 1));
  return static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Construction

TEST(NcfRscc, ProbabilitiesSumToOne) {
  for (int n : {1, 2, 5, 10}) {
    const auto sys = make_ncf_rscc(NcfParams(n));
    EXPECT_FALSE(sys.events().is_finite());
    EXPECT_EQ(sys.events().first, n);
    for (int k = 0; k <= 20; ++k) {
      const double x = k / 20.0;
      double total = 0.0;
      for (Event i = n; i < n + 500; ++i) total += sys.probability(x, i);
      EXPECT_NEAR(total + sys.tail_mass(x, n + 500), 1.0, 1e-12);
      EXPECT_DOUBLE_EQ(sys.tail_mass(x, n), 1.0);
    }
  }
}

TEST(NcfRscc, Examples) {
  const auto sys = make_ncf_rscc(NcfParams(3));
  EXPECT_EQ(sys.transition(0.0, 3), 1.0);
  EXPECT_EQ(sys.transition(0.0, 6), 0.5);
  EXPECT_EQ(make_classical_gauss_rscc().probability(0.0, 1), 0.5);
}

TEST(RsccSystem, RejectsBadProbabilities) {
  RsccSystem::Spec spec;
  spec.states = StateSpace{1, 2, {1, 2}};
  spec.events = EventSet{1, 2};
  spec.transition = [](double, Event j) { return static_cast<double>(j); };
  spec.probability = [](double, Event) { return 0.6; };
  EXPECT_THROW(RsccSystem{spec}, DomainError);
  spec.probability = [](double, Event) { return 0.5; };
  spec.transition = [](double, Event) { return 3.0; };
  EXPECT_THROW(RsccSystem{spec}, DomainError);
}

TEST(EventWord, ConcatenationIsAssociativeWithUnit) {
  const EventWord a{{1, 2}}, b{{3}}, c{{4, 5, 6}}, e{};
  EXPECT_EQ((a + b) + c, a + (b + c));
  EXPECT_EQ(a + e, a);
  EXPECT_EQ(e + a, a);
}

TEST(RsccSystem, ActionFollowsWord) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  const EventWord w{{2, 3, 7}};
  double x = 0.3;
  for (Event i : w.letters) x = 2.0 / (x + i);
  EXPECT_EQ(sys.act(0.3, w), x);
  EXPECT_EQ(sys.act(0.3, EventWord{}), 0.3);
}

TEST(RsccSystem, SampleEventMatchesProbabilities) {
  // Drop the closed-form sampler so the generic search is exercised.
  auto spec = make_ncf_rscc(NcfParams(2)).spec();
  spec.event_sampler = nullptr;
  const RsccSystem generic(spec);
  const auto fast = make_ncf_rscc(NcfParams(2));
  UniformStream s1(5, 0), s2(5, 0);
  const std::size_t k = 200'000;
  std::vector<std::size_t> hits(10, 0);
  for (std::size_t t = 0; t < k; ++t) {
    const Event a = generic.sample_event(0.4, s1);
    EXPECT_EQ(a, fast.sample_event(0.4, s2));
    if (a - 2 < 10) ++hits[a - 2];
  }
  for (int j = 0; j < 10; ++j) {
    const double p = fast.probability(0.4, 2 + j);
    EXPECT_NEAR(static_cast<double>(hits[j]) / k, p, 4 * std::sqrt(p * (1 - p) / k));
  }
}

// ---------------------------------------------------------------------------
// Mealy machine

TEST(Mealy, KernelMatrix) {
  for (double a : {0.0, 0.3, 1.0}) {
    for (double b : {0.0, 0.6, 1.0}) {
      const auto q = transition_matrix(make_mealy_rscc(MealySystem(a, b)));
      EXPECT_EQ(q(0, 0), a);
      EXPECT_EQ(q(0, 1), 1 - a);
      EXPECT_EQ(q(1, 0), b);
      EXPECT_EQ(q(1, 1), 1 - b);
      EXPECT_EQ(q(0, 0) + q(0, 1), 1.0);
      EXPECT_EQ(q(1, 0) + q(1, 1), 1.0);
    }
  }
  EXPECT_THROW(MealySystem(1.2, 0.5), DomainError);
}

TEST(Mealy, IidWhenRowsEqual) {
  const auto sys = make_mealy_rscc(MealySystem(0.35, 0.35));
  const auto q = transition_matrix(sys);
  for (int k = 1; k <= 8; ++k) {
    const auto qk = matrix_power(q, k);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(qk(i, j), q(i, j), 1e-15);
    }
    EXPECT_NEAR(q_cesaro(sys, k, 2.0, TargetSet::points({1.0})).value, 0.35, 1e-15);
  }
}

TEST(Mealy, TwoStepAndStationary) {
  const double a = 0.3, b = 0.6;
  const auto sys = make_mealy_rscc(MealySystem(a, b));
  EXPECT_NEAR(q_step(sys, 2, 1.0, TargetSet::points({1.0})).value, a * a + (1 - a) * b, 1e-15);
  const double pi1 = b / (1 - a + b);
  const auto q50 = matrix_power(transition_matrix(sys), 50);
  EXPECT_NEAR(q50(0, 0), pi1, 1e-12);
  EXPECT_NEAR(q50(1, 0), pi1, 1e-12);
}

TEST(Mealy, ChapmanKolmogorov) {
  const auto q = transition_matrix(make_mealy_rscc(MealySystem(0.3, 0.9)));
  for (int j = 0; j <= 5; ++j) {
    for (int k = 0; k <= 5; ++k) {
      const auto lhs = matrix_power(q, j + k);
      const auto rhs = matrix_power(q, j) * matrix_power(q, k);
      for (int a = 0; a < 2; ++a) {
        for (int c = 0; c < 2; ++c) EXPECT_NEAR(lhs(a, c), rhs(a, c), 1e-15);
      }
    }
  }
}

TEST(Mealy, PathProbabilities) {
  const auto sys = make_mealy_rscc(MealySystem(0.3, 0.6));
  EXPECT_EQ(path_probability(sys, 1.0, EventWord{{2}}), sys.probability(1.0, 2));
  EXPECT_THROW(path_probability(sys, 1.0, EventWord{}), DomainError);
  for (double w : {1.0, 2.0}) {
    double total = 0.0;
    for (Event a : {1, 2}) {
      for (Event b : {1, 2}) {
        for (Event c : {1, 2}) total += path_probability(sys, w, EventWord{{a, b, c}});
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-15);
  }
}

TEST(Mealy, MarginalConsistency) {
  const auto sys = make_mealy_rscc(MealySystem(0.3, 0.6));
  // All subsets A of X^2; compare P_3(w, A x X) with P_2(w, A).
  const std::vector<EventWord> pairs{{{1, 1}}, {{1, 2}}, {{2, 1}}, {{2, 2}}};
  for (double w : {1.0, 2.0}) {
    for (int mask = 0; mask < 16; ++mask) {
      WordSet a{2, {}, {}}, ax{3, {}, {}};
      for (int b = 0; b < 4; ++b) {
        if (!(mask & (1 << b))) continue;
        a.words.push_back(pairs[b]);
        ax.words.push_back(pairs[b] + EventWord{{1}});
        ax.words.push_back(pairs[b] + EventWord{{2}});
      }
      EXPECT_NEAR(word_set_probability(sys, w, ax), word_set_probability(sys, w, a), 1e-15);
    }
  }
}

TEST(Mealy, DotExport) {
  const std::string dot = mealy_dot_export(MealySystem(0.3, 0.6));
  EXPECT_NE(dot.find("1 -> 1 [label=\"1/0.3\"]"), std::string::npos);
  EXPECT_NE(dot.find("1 -> 2 [label=\"2/0.7\"]"), std::string::npos);
  EXPECT_NE(dot.find("2 -> 1 [label=\"1/0.6\"]"), std::string::npos);
  EXPECT_NE(dot.find("2 -> 2 [label=\"2/0.4\"]"), std::string::npos);
  EXPECT_EQ(dot, mealy_dot_export(MealySystem(0.3, 0.6)));

  const std::string degenerate = mealy_dot_export(MealySystem(1.0, 0.0));
  EXPECT_NE(degenerate.find("1 -> 1 [label=\"1/1\"]"), std::string::npos);
  EXPECT_NE(degenerate.find("1 -> 2 [label=\"2/0\"]"), std::string::npos);
  EXPECT_NE(degenerate.find("2 -> 1 [label=\"1/0\"]"), std::string::npos);
  EXPECT_NE(degenerate.find("2 -> 2 [label=\"2/1\"]"), std::string::npos);

  // Small DOT grammar: header, attribute statements, edges, closing brace.
  const std::regex line(
      R"(digraph \w+ \{|  rankdir=LR;|  node \[shape=circle\];|  \d+ -> \d+ \[label="\d+/[0-9.e+-]+"\];|\})");
  std::size_t start = 0, edges = 0;
  while (start < dot.size()) {
    const auto end = dot.find('\n', start);
    ASSERT_NE(end, std::string::npos);
    const std::string l = dot.substr(start, end - start);
    EXPECT_TRUE(std::regex_match(l, line)) << l;
    if (l.find("->") != std::string::npos) ++edges;
    start = end + 1;
  }
  EXPECT_EQ(edges, 4u);
}

// ---------------------------------------------------------------------------
// Kernels

TEST(QKernelInterval, Examples) {
  const auto g = make_classical_gauss_rscc();
  EXPECT_NEAR(q_kernel_interval(g, 0.0, 1.0), 0.5, 1e-15);
  for (int n : {1, 3}) {
    const auto sys = make_ncf_rscc(NcfParams(n));
    for (double x : {0.0, 0.4, 1.0}) {
      const double u = std::nextafter(n / (x + n), 2.0);
      if (u <= 1.0) {
        EXPECT_EQ(q_kernel_interval(sys, x, u), 1.0);
      }
    }
  }
  EXPECT_THROW(q_kernel_interval(g, 0.5, 0.0), DomainError);
  EXPECT_THROW(q_kernel_interval(g, 1.5, 0.5), DomainError);
}

TEST(QKernelInterval, MatchesBruteForce) {
  for (int n : {1, 2, 5}) {
    const auto sys = make_ncf_rscc(NcfParams(n));
    for (int a = 0; a <= 32; ++a) {
      for (int b = 1; b <= 16; ++b) {
        const double x = a / 32.0, u = b / 16.0;
        EXPECT_NEAR(q_kernel_interval(sys, x, u), brute_force_below(n, x, u, 20000), 1e-12)
            << n << " " << x << " " << u;
      }
    }
  }
}

TEST(QKernel, EnumerationAgreesWithClosedForm) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  for (double x : {0.0, 0.25, 0.8}) {
    for (auto t : {TargetSet::half_open(0.1, 0.35), TargetSet::closed(0.5, 1.0),
                   TargetSet({{0.0, 0.05, false}, {0.6, 0.7, false}})}) {
      EXPECT_NEAR(q_kernel(sys, x, t), q_kernel_enumerated(sys, x, t), 1e-12);
    }
  }
}

TEST(QKernel, AdditiveAndMonotone) {
  const auto sys = make_ncf_rscc(NcfParams(3));
  for (double x : {0.0, 0.3, 0.9}) {
    for (double a : {0.1, 0.4}) {
      for (double b : {0.5, 0.8}) {
        const double left = q_kernel(sys, x, TargetSet::half_open(0.0, a));
        const double mid = q_kernel(sys, x, TargetSet::half_open(a, b));
        const double both = q_kernel(sys, x, TargetSet::half_open(0.0, b));
        EXPECT_NEAR(left + mid, both, 1e-15);
        EXPECT_LE(left, both);
      }
    }
  }
}

TEST(QKernel, GnIsInvariant) {
  for (int n : {1, 2, 5}) {
    const GaussMeasure gm{NcfParams(n)};
    for (int k = 1; k <= 16; ++k) {
      const double u = k / 16.0;
      EXPECT_NEAR(kernel_invariance_integral(NcfParams(n), u), gn_cdf(u, gm), 1e-8);
    }
  }
}

TEST(QStep, GridAgreesWithMonteCarlo) {
  const auto sys = make_ncf_rscc(NcfParams(1));
  for (int k : {2, 3}) {
    for (double x : {0.0, 0.5, 1.0}) {
      const auto t = TargetSet::below(0.4);
      const auto grid = q_step(sys, k, x, t, {KernelMethod::grid, 256});
      KernelOptions mc{KernelMethod::monte_carlo};
      mc.paths = 100'000;
      mc.seed = 9;
      const auto est = q_step(sys, k, x, t, mc);
      EXPECT_NEAR(grid.value, est.value, 4 * est.std_error + 1e-5) << k << " " << x;
    }
  }
}

TEST(QStep, ConvergesToGaussCdf) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  const GaussMeasure gm{NcfParams(2)};
  for (double u : {0.2, 0.5, 0.9}) {
    double prev = 1.0;
    for (int k : {1, 3, 6}) {
      double worst = 0.0;
      for (double x : {0.0, 0.5, 1.0}) {
        const double v = q_step(sys, k, x, TargetSet::below(u), {KernelMethod::grid, 256}).value;
        worst = std::max(worst, std::abs(v - gn_cdf(u, gm)));
      }
      EXPECT_LT(worst, prev);
      prev = worst;
    }
    EXPECT_LT(prev, 1e-4);
  }
}

TEST(QStep, RejectsBadStep) {
  const auto sys = make_ncf_rscc(NcfParams(1));
  EXPECT_THROW(q_step(sys, 0, 0.5, TargetSet::below(0.5)), DomainError);
}

TEST(QStep, BudgetCap) {
  const auto sys = make_ncf_rscc(NcfParams(1));
  const auto saved = compute_budget();
  set_compute_budget(1000);
  EXPECT_THROW(q_step(sys, 5, 0.5, TargetSet::below(0.5)), BudgetError);
  set_compute_budget(saved);
}

TEST(QCesaro, FirstTermIsKernel) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  for (double x : {0.0, 0.7}) {
    EXPECT_EQ(q_cesaro(sys, 1, x, TargetSet::below(0.3)).value,
              q_kernel(sys, x, TargetSet::below(0.3)));
  }
}

TEST(QCesaro, ApproachesGaussCdf) {
  const auto sys = make_ncf_rscc(NcfParams(1));
  const GaussMeasure gm{NcfParams(1)};
  for (double u : {0.3, 0.7}) {
    for (double x : {0.0, 1.0}) {
      double prev = 1.0;
      for (int n = 3; n <= 8; ++n) {
        const double v = q_cesaro(sys, n, x, TargetSet::below(u), {KernelMethod::grid, 256}).value;
        const double err = std::abs(v - gn_cdf(u, gm));
        EXPECT_LE(err, prev + 1e-12) << u << " " << x << " " << n;
        prev = err;
      }
    }
  }
}

TEST(KernelEstimate, RowsAreDistributions) {
  const auto finite = kernel_estimate(make_mealy_rscc(MealySystem(0.3, 0.9)), 4);
  ASSERT_TRUE(finite.finite_states);
  for (const auto& row : finite.rows) EXPECT_NEAR(row[0] + row[1], 1.0, 1e-15);
  const auto ncf = kernel_estimate(make_ncf_rscc(NcfParams(2)), 3, 64);
  ASSERT_FALSE(ncf.finite_states);
  EXPECT_EQ(ncf.rows.size(), 65u);
  for (const auto& row : ncf.rows) {
    double total = 0.0;
    for (double v : row) {
      EXPECT_GE(v, 0.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

// ---------------------------------------------------------------------------
// Contraction and regularity

TEST(Contraction, NcfCertified) {
  for (int n = 1; n <= 10; ++n) {
    const auto r = contraction_coefficients(make_ncf_rscc(NcfParams(n)), {2, 256});
    EXPECT_TRUE(r.certified) << n;
    EXPECT_LT(r.r_values[0], 1.0);
    EXPECT_TRUE(std::isfinite(r.big_r));
  }
}

TEST(Contraction, ClassicalFirstCoefficient) {
  // sup over pairs tends to sum_i P(0,i) |d/dx u(0,i)| = zeta(3) - zeta(2) + 1.
  long double oracle = 0.0L;
  for (long i = 1; i < 2'000'000; ++i) oracle += 1.0L / (static_cast<long double>(i) * i * i * (i + 1));
  const auto r = contraction_coefficients(make_classical_gauss_rscc(), {1, 512});
  EXPECT_LE(r.r_values[0], static_cast<double>(oracle) + 1e-9);
  EXPECT_NEAR(r.r_values[0], static_cast<double>(oracle), 5e-3);
}

TEST(Contraction, DerivativeBound) {
  for (int n : {1, 4}) {
    const auto sys = make_ncf_rscc(NcfParams(n));
    for (Event i = n; i < n + 50; ++i) {
      const double bound = static_cast<double>(n) / (static_cast<double>(i) * i);
      for (int k = 0; k < 64; ++k) {
        const double a = k / 64.0, b = (k + 1) / 64.0;
        EXPECT_LE(std::abs(sys.transition(a, i) - sys.transition(b, i)) / (b - a),
                  bound * (1 + 1e-12));
      }
    }
  }
}

TEST(Contraction, Submultiplicative) {
  for (int n : {1, 3}) {
    const auto r = contraction_coefficients(make_ncf_rscc(NcfParams(n)), {3, 128});
    EXPECT_LE(r.r_values[1], r.r_values[0] * r.r_values[0] + 1e-9);
    EXPECT_LE(r.r_values[2], r.r_values[0] * r.r_values[1] + 1e-9);
  }
}

TEST(Contraction, FallsBackToBoundWhenWordsExceedCap) {
  ContractionOptions o{3, 64, 64};
  const auto r = contraction_coefficients(make_ncf_rscc(NcfParams(1)), o);
  // 64^(1/3) = 4 letters; with a cap of 3 the bound takes over.
  o.word_cap = 3;
  const auto b = contraction_coefficients(make_ncf_rscc(NcfParams(1)), o);
  EXPECT_TRUE(b.r_from_bound[2]);
  EXPECT_LE(b.r_values[2], b.r_values[0] * b.r_values[1] * (1 + 1e-15));
  EXPECT_FALSE(r.r_from_bound[0]);
}

TEST(Contraction, MealyIsZero) {
  const auto r = contraction_coefficients(make_mealy_rscc(MealySystem(0.3, 0.6)), {4});
  for (double v : r.r_values) EXPECT_EQ(v, 0.0);
  EXPECT_TRUE(r.certified);
  EXPECT_NEAR(r.big_r, 0.3, 1e-15);
}

TEST(Regularity, Examples) {
  const std::vector<double> zero{0.0};
  const auto g = regularity_witness(NcfParams(1), zero, 60);
  EXPECT_LT(g.curves[0].distances[60], 1e-12);
  EXPECT_NEAR(g.x_star, 0.6180339887, 1e-10);

  const std::vector<double> one{1.0};
  const auto r4 = regularity_witness(NcfParams(4), one, 200);
  EXPECT_NEAR(r4.x_star, 2 * std::sqrt(2.0) - 2, 1e-15);
  ASSERT_TRUE(r4.curves[0].reached_at.has_value());
  EXPECT_TRUE(r4.curves[0].monotone);
  EXPECT_NEAR(r4.curves[0].asymptotic_ratio, r4.predicted_ratio, 1e-4);
  EXPECT_LT(r4.predicted_ratio, 1.0);
}

// ---------------------------------------------------------------------------
// Ergodicity

TEST(ShiftedPath, FirstShiftIsPathProbability) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  WordSet a{2, {EventWord{{2, 3}}, EventWord{{4, 2}}}, {}};
  const double direct =
      path_probability(sys, 0.3, a.words[0]) + path_probability(sys, 0.3, a.words[1]);
  EXPECT_EQ(shifted_path_probability(sys, 0.3, 1, a).value, direct);
}

TEST(ShiftedPath, MealyMatchesMatrixPowers) {
  const MealySystem m(0.3, 0.9);
  const auto sys = make_mealy_rscc(m);
  const auto q = transition_matrix(sys);
  for (int n = 1; n <= 6; ++n) {
    const auto qn = matrix_power(q, n);
    for (int w = 0; w < 2; ++w) {
      for (int j = 0; j < 2; ++j) {
        EXPECT_NEAR(shifted_path_probability(sys, w + 1.0, n, WordSet::single(j + 1)).value,
                    qn(w, j), 1e-15);
      }
    }
  }
}

TEST(ShiftedPath, NcfApproachesDigitLaw) {
  const auto sys = make_ncf_rscc(NcfParams(2));
  const GaussMeasure gm{NcfParams(2)};
  for (Event i : {2, 3, 6}) {
    const auto est = shifted_path_probability(sys, 0.1, 20, WordSet::single(i), {50'000, 4});
    EXPECT_NEAR(est.value, digit_law(i, gm), 4 * est.std_error);
  }
}

TEST(LimitPathLaw, Examples) {
  const auto g = make_classical_gauss_rscc();
  const GaussMeasure g1{NcfParams(1)};
  EXPECT_NEAR(limit_path_law(g, WordSet::tail_from(1), g1), 1.0, 1e-12);
  EXPECT_NEAR(limit_path_law(g, WordSet::single(1), g1), std::log(4.0 / 3.0) / std::log(2.0), 1e-10);
  const auto sys = make_ncf_rscc(NcfParams(3));
  const GaussMeasure g3{NcfParams(3)};
  for (Event i = 3; i < 10; ++i) {
    EXPECT_NEAR(limit_path_law(sys, WordSet::single(i), g3), digit_law(i, g3), 1e-10);
  }
}

TEST(LimitPathLaw, ErgodicityGapDecays) {
  const auto sys = make_classical_gauss_rscc();
  const GaussMeasure g1{NcfParams(1)};
  const std::vector<double> starts{0.0, 0.5, 1.0};
  std::vector<WordSet> probes{WordSet::single(1), WordSet::tail_from(3),
                              WordSet{2, {EventWord{{1, 1}}}, {WordSet::Tail{EventWord{{2}}, 2}}}};
  const std::vector<int> ns{1, 2, 4, 12};
  const auto eps = ergodicity_gap_curve(sys, g1, starts, probes, ns, {40'000, 1});
  EXPECT_GT(eps[0], eps[1]);
  EXPECT_GT(eps[1], eps[3]);
  // Past burn-in the gap is Monte Carlo noise: a few standard errors.
  EXPECT_LT(eps[3], 0.015);
}

}  // namespace
}  // namespace ncf
