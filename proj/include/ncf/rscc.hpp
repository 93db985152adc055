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

#pragma once

// Random systems with complete connections over a real state space W and a
// countable event set X = {first, first+1, ...}: a transition u(w, x) and a
// place-dependent probability P(w, x). Both the N-continued-fraction system
// and finite automata fit this shape.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ncf/core.hpp"
#include "ncf/estimate.hpp"
#include "ncf/measure.hpp"
#include "ncf/random.hpp"

namespace ncf {

using Event = std::int64_t;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool include_hi = false;

  bool contains(double y) const { return y >= lo && (y < hi || (include_hi && y == hi)); }
};

// Finite union of intervals [lo, hi) (or [lo, hi] when include_hi). A closed
// degenerate piece [v, v] is a single point, which is how subsets of a finite
// state space are written.
class TargetSet {
 public:
  TargetSet() = default;
  explicit TargetSet(std::vector<Interval> pieces);

  static TargetSet below(double u_end) { return TargetSet({{0.0, u_end, false}}); }
  static TargetSet half_open(double a, double b) { return TargetSet({{a, b, false}}); }
  static TargetSet closed(double a, double b) { return TargetSet({{a, b, true}}); }
  static TargetSet points(std::initializer_list<double> values);

  bool contains(double y) const;
  std::span<const Interval> pieces() const { return pieces_; }

 private:
  std::vector<Interval> pieces_;
};

struct EventSet {
  Event first = 0;
  std::optional<Event> last;  // empty: {first, first+1, ...}

  bool is_finite() const { return last.has_value(); }
  std::size_t size() const { return is_finite() ? static_cast<std::size_t>(*last - first + 1) : 0; }
  bool contains(Event x) const { return x >= first && (!last || x <= *last); }
};

// Closed interval [lo, hi]; when `points` is non-empty the space is that
// finite subset of it instead.
struct StateSpace {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> points;

  bool is_finite() const { return !points.empty(); }
  bool contains(double w) const;
};

// Finite word over X. The empty word is the unit of concatenation.
struct EventWord {
  std::vector<Event> letters;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  friend EventWord operator+(const EventWord& a, const EventWord& b);
  friend bool operator==(const EventWord&, const EventWord&) = default;
};

class RsccSystem {
 public:
  struct Spec {
    std::string name;
    StateSpace states;
    EventSet events;
    std::function<double(double, Event)> transition;
    std::function<double(double, Event)> probability;
    // Required when X is infinite: sum_{x >= m} P(w, x).
    std::function<double(double, Event)> tail_mass;
    // Closed hull of {u(w, x) : x >= m}; lets truncated sums place the tail.
    std::function<Interval(double, Event)> tail_image;
    // sup_w sup_{x >= m} Lip(u(., x)); bounds truncated contraction sums.
    std::function<double(Event)> tail_lipschitz;
    // Fast path for Q(w, [0, u_end)), or [0, u_end] when the flag is set.
    std::function<double(double, double, bool)> kernel_below;
    // Fast path for inverse-CDF event draws from a uniform in (0,1].
    std::function<Event(double, double)> event_sampler;
  };

  // Validates that P(w, .) sums to 1 within 1e-10 and u(w, x) stays in W at
  // every finite state, or at a fixed set of probe states of an interval.
  explicit RsccSystem(Spec spec);

  const std::string& name() const { return spec_.name; }
  const StateSpace& states() const { return spec_.states; }
  const EventSet& events() const { return spec_.events; }
  const Spec& spec() const { return spec_; }

  double transition(double w, Event x) const { return spec_.transition(w, x); }
  double probability(double w, Event x) const { return spec_.probability(w, x); }
  // sum_{x >= m, x in X} P(w, x)
  double tail_mass(double w, Event m) const;
  // w . word, the right action of X* on W.
  double act(double w, const EventWord& word) const;
  Event sample_event(double w, UniformStream& stream) const;

  bool has_kernel_below() const { return static_cast<bool>(spec_.kernel_below); }

 private:
  Spec spec_;
};

// ---------------------------------------------------------------------------
// Constructors for the concrete systems.

// W = [0,1], X = {N, N+1, ...}, u(x,i) = N/(x+i),
// P(x,i) = (x+N)/((x+i)(x+i+1)), tail mass (x+N)/(x+m).
RsccSystem make_ncf_rscc(NcfParams params);
// The N = 1 instance, the system of the regular continued fraction.
RsccSystem make_classical_gauss_rscc();

// Two-state automaton: W = X = {1,2}, u(i,j) = j, P(1,1) = alpha, P(2,1) = beta.
struct MealySystem {
  double alpha = 0.5;
  double beta = 0.5;

  MealySystem(double alpha, double beta);
  double p(int state, int input) const;
};
RsccSystem make_mealy_rscc(const MealySystem& m);
// GraphViz digraph of the transition diagram with edge labels "k/P(i,k)".
std::string mealy_dot_export(const MealySystem& m);

// ---------------------------------------------------------------------------
// Path probabilities.

// P_r(w, x_1...x_r) = P(w,x_1) P(w x_1, x_2) ... P(w x_1...x_{r-1}, x_r).
double path_probability(const RsccSystem& sys, double w, const EventWord& word);

// A subset of X^r: explicit words plus families prefix.{x >= from}.
struct WordSet {
  struct Tail {
    EventWord prefix;
    Event from = 0;
  };
  std::size_t length = 1;
  std::vector<EventWord> words;
  std::vector<Tail> tails;

  static WordSet single(Event x) { return {1, {EventWord{{x}}}, {}}; }
  static WordSet tail_from(Event m) { return {1, {}, {Tail{{}, m}}}; }
};

// P_r(w, A), exact (tail families use the tail-mass function).
double word_set_probability(const RsccSystem& sys, double w, const WordSet& set);

// ---------------------------------------------------------------------------
// Kernels on W.

// Q(x, [0, u_end)) for the N-CF system in closed form: (x+N)/(x+m) with m the
// first branch i >= N whose image N/(x+i) lands below u_end.
double ncf_kernel_below(NcfParams params, double x, double u_end, bool inclusive = false);
// Same, through a system carrying the kernel_below fast path.
double q_kernel_interval(const RsccSystem& sys, double x, double u_end);

// Q(w, B) = P(w, X(w, B)). Uses kernel_below when available, otherwise
// enumerates events; an infinite tail is enumerated until its image hull is
// inside or outside B (up to `max_events`, then BudgetError).
double q_kernel(const RsccSystem& sys, double w, const TargetSet& target);
// Always the enumeration route.
double q_kernel_enumerated(const RsccSystem& sys, double w, const TargetSet& target,
                           std::int64_t max_events = 20'000'000);

// Integral of x -> Q(x, [0, u)) against G_N by adaptive quadrature, split at
// the jumps x = N/u - i of the branch count.
double kernel_invariance_integral(NcfParams params, double u);

enum class KernelMethod { automatic, grid, monte_carlo };

struct KernelOptions {
  KernelMethod method = KernelMethod::automatic;
  std::size_t resolution = 512;  // grid cells on W
  std::size_t paths = 100'000;
  std::uint64_t seed = 0;
};

// Q^(k)(w, B). Finite W: exact matrix power. Interval W: grid recursion
// through kernel_below cell masses (automatic) or Monte Carlo path
// simulation with split-seed streams.
Estimate q_step(const RsccSystem& sys, int k, double source, const TargetSet& target,
                const KernelOptions& options = {});
// Q_n(w, B) = (1/n) sum_{k=1..n} Q^(k)(w, B).
Estimate q_cesaro(const RsccSystem& sys, std::int64_t n, double source, const TargetSet& target,
                  const KernelOptions& options = {});

// Row-major square matrix, used for finite state spaces.
class SquareMatrix {
 public:
  explicit SquareMatrix(std::size_t n = 0, double fill = 0.0) : n_(n), a_(n * n, fill) {}
  static SquareMatrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  friend SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b);
  friend SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b);
  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_;
  std::vector<double> a_;
};

SquareMatrix transition_matrix(const RsccSystem& sys);
SquareMatrix matrix_power(const SquareMatrix& m, int k);
// Q + Q^2 + ... + Q^n in O(log n) products.
SquareMatrix matrix_power_sum(const SquareMatrix& m, std::int64_t n);

// Q^(k) from each source state. Finite W: rows of the k-th matrix power over
// the states. Interval W: rows over grid nodes, columns over the cells
// [e_c, e_{c+1}) of a uniform partition (the last cell closed).
struct KernelEstimate {
  int step = 1;
  bool finite_states = true;
  std::vector<double> sources;
  std::vector<double> cell_edges;  // interval W only
  std::vector<std::vector<double>> rows;
};
KernelEstimate kernel_estimate(const RsccSystem& sys, int k, std::size_t resolution = 128);

// ---------------------------------------------------------------------------
// Contraction coefficients.

struct ContractionOptions {
  int k_max = 3;
  std::size_t grid = 512;      // interval W: pairs drawn from lo + (hi-lo) j/grid
  std::size_t word_cap = 1024; // max words enumerated per k
  double margin = 1e-6;
};

struct ContractionReport {
  std::vector<double> r_values;   // r_1 .. r_kmax
  std::vector<bool> r_from_bound; // true where r_k = min_j r_j r_{k-j}
  std::vector<double> tail_bounds;
  std::vector<std::size_t> letters_per_position;
  double big_r = 0.0;
  bool certified = false;
  std::optional<int> certified_at;  // smallest l with r_l < 1 - margin
};

ContractionReport contraction_coefficients(const RsccSystem& sys,
                                           const ContractionOptions& options = {});

// ---------------------------------------------------------------------------
// Regularity witness: follow the orbit of one fixed event from each start.

struct RegularityCurve {
  double start = 0.0;
  std::vector<double> distances;  // |x_n - x*| for n = 0..n_max
  std::optional<int> reached_at;  // first n with distance < tolerance
  bool monotone = true;           // non-increasing from n = 1 on
  double asymptotic_ratio = 0.0;  // |x_{n+1}-x*| / |x_n-x*| in the geometric regime
};

struct RegularityReport {
  double x_star = 0.0;
  double predicted_ratio = 0.0;
  std::vector<RegularityCurve> curves;
};

RegularityReport regularity_witness(const RsccSystem& sys, std::span<const double> starts,
                                    int n_max, Event event, double x_star,
                                    double tolerance = 1e-12);
// N-CF: event N, x* = fixed_point(N), predicted ratio N/(x*+N)^2.
RegularityReport regularity_witness(NcfParams params, std::span<const double> starts,
                                    int n_max, double tolerance = 1e-12);

// ---------------------------------------------------------------------------
// Uniform ergodicity.

struct ShiftOptions {
  std::size_t paths = 100'000;
  std::uint64_t seed = 0;
};

// P_r^n(w, A) = P_{r+n-1}(w, X^{n-1} x A). Finite W: exact. Interval W:
// Monte Carlo over the n-1 burn-in steps, averaging P_r(W_{n-1}, A).
Estimate shifted_path_probability(const RsccSystem& sys, double w, int n, const WordSet& set,
                                  const ShiftOptions& options = {});

// P_r^inf(A) = integral of P_r(w, A) against the limit law Q^inf, here G_N.
double limit_path_law(const RsccSystem& sys, const WordSet& set, const GaussMeasure& limit);

// eps_n over a probe family: max over starts and sets of
// |P_r^n(w, A) - P_r^inf(A)|, for each n in `n_values`.
std::vector<double> ergodicity_gap_curve(const RsccSystem& sys, const GaussMeasure& limit,
                                         std::span<const double> starts,
                                         std::span<const WordSet> probes,
                                         std::span<const int> n_values,
                                         const ShiftOptions& options = {});

}  // namespace ncf
