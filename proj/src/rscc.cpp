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

#include "ncf/rscc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ncf/budget.hpp"
#include "ncf/errors.hpp"
#include "ncf/quadrature.hpp"
#include "ncf/simd.hpp"

namespace ncf {
namespace {

constexpr double kSumTolerance = 1e-10;
constexpr Event kProbeEvents = 64;

// Hull [lo, hi] (closed) against one piece of a target set.
bool hull_inside(const Interval& hull, const Interval& piece) {
  const bool hi_ok = piece.include_hi ? hull.hi <= piece.hi : hull.hi < piece.hi;
  return hull.lo >= piece.lo && hi_ok;
}

bool hull_disjoint(const Interval& hull, const Interval& piece) {
  if (hull.hi < piece.lo) return true;
  if (piece.include_hi ? hull.lo > piece.hi : hull.lo >= piece.hi) return true;
  return false;
}

std::size_t state_index(const StateSpace& states, double w) {
  for (std::size_t s = 0; s < states.points.size(); ++s) {
    if (states.points[s] == w) return s;
  }
  throw DomainError("state " + std::to_string(w) + " is not in the finite state space");
}

std::vector<double> uniform_nodes(const StateSpace& states, std::size_t cells) {
  std::vector<double> nodes(cells + 1);
  const double width = states.hi - states.lo;
  for (std::size_t j = 0; j <= cells; ++j) {
    nodes[j] = j == cells ? states.hi
                          : states.lo + width * static_cast<double>(j) / static_cast<double>(cells);
  }
  return nodes;
}

// Integer floor of the k-th root of cap.
std::size_t integer_root(std::size_t cap, int k) {
  std::size_t m = 1;
  while (true) {
    double p = 1.0;
    for (int i = 0; i < k; ++i) p *= static_cast<double>(m + 1);
    if (p > static_cast<double>(cap)) return m;
    ++m;
  }
}

}  // namespace

TargetSet::TargetSet(std::vector<Interval> pieces) : pieces_(std::move(pieces)) {
  for (const auto& p : pieces_) {
    if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || p.lo > p.hi) {
      throw DomainError("TargetSet: pieces must be finite with lo <= hi");
    }
  }
}

TargetSet TargetSet::points(std::initializer_list<double> values) {
  std::vector<Interval> pieces;
  for (double v : values) pieces.push_back({v, v, true});
  return TargetSet(std::move(pieces));
}

bool TargetSet::contains(double y) const {
  return std::any_of(pieces_.begin(), pieces_.end(), [y](const Interval& p) { return p.contains(y); });
}

bool StateSpace::contains(double w) const {
  if (is_finite()) return std::find(points.begin(), points.end(), w) != points.end();
  return w >= lo && w <= hi;
}

EventWord operator+(const EventWord& a, const EventWord& b) {
  EventWord out = a;
  out.letters.insert(out.letters.end(), b.letters.begin(), b.letters.end());
  return out;
}

RsccSystem::RsccSystem(Spec spec) : spec_(std::move(spec)) {
  if (!spec_.transition || !spec_.probability) {
    throw DomainError("RsccSystem: transition and probability are required");
  }
  if (!spec_.events.is_finite() && !spec_.tail_mass) {
    throw DomainError("RsccSystem: an infinite event set needs a tail-mass function");
  }
  if (spec_.events.is_finite() && *spec_.events.last < spec_.events.first) {
    throw DomainError("RsccSystem: empty event set");
  }
  if (!spec_.states.is_finite() && !(spec_.states.lo < spec_.states.hi)) {
    throw DomainError("RsccSystem: state interval must have lo < hi");
  }

  std::vector<double> probes = spec_.states.points;
  if (probes.empty()) probes = uniform_nodes(spec_.states, 16);
  const Event first = spec_.events.first;
  const Event last = spec_.events.is_finite() ? *spec_.events.last : first + kProbeEvents - 1;
  for (double w : probes) {
    double total = 0.0;
    for (Event x = first; x <= last; ++x) {
      const double p = spec_.probability(w, x);
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("RsccSystem: P(w,x) outside [0,1]");
      if (!spec_.states.contains(spec_.transition(w, x))) {
        throw DomainError("RsccSystem: u(w,x) leaves the state space");
      }
      total += p;
    }
    if (!spec_.events.is_finite()) total += spec_.tail_mass(w, last + 1);
    if (!(std::abs(total - 1.0) <= kSumTolerance)) {
      throw DomainError("RsccSystem: P(w,.) does not sum to 1 at w = " + std::to_string(w));
    }
  }
}

double RsccSystem::tail_mass(double w, Event m) const {
  m = std::max(m, spec_.events.first);
  if (!spec_.events.is_finite()) return spec_.tail_mass(w, m);
  double total = 0.0;
  for (Event x = m; x <= *spec_.events.last; ++x) total += spec_.probability(w, x);
  return total;
}

double RsccSystem::act(double w, const EventWord& word) const {
  for (Event x : word.letters) w = spec_.transition(w, x);
  return w;
}

Event RsccSystem::sample_event(double w, UniformStream& stream) const {
  const double u = stream.next_open_low();
  if (spec_.event_sampler) return spec_.event_sampler(w, u);
  const Event first = spec_.events.first;
  if (spec_.events.is_finite()) {
    double cumulative = 0.0;
    const double target = 1.0 - u;
    for (Event x = first; x < *spec_.events.last; ++x) {
      cumulative += spec_.probability(w, x);
      if (target < cumulative) return x;
    }
    return *spec_.events.last;
  }
  // Largest i with tail(i) >= u; tail(first) = 1.
  Event lo = first;
  Event step = 1;
  while (spec_.tail_mass(w, lo + step) >= u) {
    lo += step;
    step *= 2;
    if (step > (Event{1} << 52)) throw DomainError("sample_event: tail mass does not vanish");
  }
  Event hi = lo + step;  // tail(hi) < u
  while (hi - lo > 1) {
    const Event mid = lo + (hi - lo) / 2;
    if (spec_.tail_mass(w, mid) >= u) lo = mid; else hi = mid;
  }
  return lo;
}

// ---------------------------------------------------------------------------

double ncf_kernel_below(NcfParams params, double x, double u_end, bool inclusive) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("ncf_kernel_below: x must lie in [0,1]");
  if (!std::isfinite(u_end)) throw DomainError("ncf_kernel_below: u_end must be finite");
  if (u_end <= 0.0) return 0.0;  // every branch image is > 0
  const double n = params.nd();
  auto lands = [&](double i) {
    const double y = n / (x + i);
    return inclusive ? y <= u_end : y < u_end;
  };
  const double ratio = n / u_end - x;
  double m = inclusive ? std::ceil(ratio) : std::floor(ratio) + 1.0;
  m = std::max(m, n);
  if (m > 9.0e15) throw DomainError("ncf_kernel_below: u_end too small for exact branch search");
  // The floor formula can sit one branch off after rounding; the landing
  // predicate is the definition.
  while (m > n && lands(m - 1.0)) m -= 1.0;
  while (!lands(m)) m += 1.0;
  return (x + n) / (x + m);
}

double q_kernel_interval(const RsccSystem& sys, double x, double u_end) {
  if (!sys.has_kernel_below()) throw DomainError("q_kernel_interval: system has no interval kernel");
  if (!(u_end > 0.0 && u_end <= 1.0)) throw DomainError("q_kernel_interval: u_end must lie in (0,1]");
  return sys.spec().kernel_below(x, u_end, false);
}

RsccSystem make_ncf_rscc(NcfParams params) {
  const double n = params.nd();
  const Event first = params.n();
  RsccSystem::Spec spec;
  spec.name = "ncf(N=" + std::to_string(first) + ")";
  spec.states = StateSpace{0.0, 1.0, {}};
  spec.events = EventSet{first, std::nullopt};
  spec.transition = [n](double x, Event i) { return n / (x + static_cast<double>(i)); };
  spec.probability = [n](double x, Event i) {
    const double xi = x + static_cast<double>(i);
    return (x + n) / (xi * (xi + 1.0));
  };
  spec.tail_mass = [n, first](double x, Event m) {
    return (x + n) / (x + static_cast<double>(std::max(m, first)));
  };
  spec.tail_image = [n, first](double x, Event m) {
    return Interval{0.0, n / (x + static_cast<double>(std::max(m, first))), true};
  };
  spec.tail_lipschitz = [n, first](Event m) {
    const double i = static_cast<double>(std::max(m, first));
    return n / (i * i);
  };
  spec.kernel_below = [params](double x, double u_end, bool inclusive) {
    return ncf_kernel_below(params, x, u_end, inclusive);
  };
  spec.event_sampler = [n, first](double x, double u) -> Event {
    // P(event >= i) = (x+N)/(x+i): take the largest i with that mass >= u.
    const double i = std::floor((x + n) / u - x);
    if (!(i < 4.0e18)) return Event{4'000'000'000'000'000'000};
    return std::max(first, static_cast<Event>(i));
  };
  return RsccSystem(std::move(spec));
}

RsccSystem make_classical_gauss_rscc() { return make_ncf_rscc(NcfParams(1)); }

// ---------------------------------------------------------------------------

double path_probability(const RsccSystem& sys, double w, const EventWord& word) {
  if (word.empty()) throw DomainError("path_probability: word must be non-empty");
  double p = 1.0;
  for (Event x : word.letters) {
    if (!sys.events().contains(x)) return 0.0;
    p *= sys.probability(w, x);
    if (p == 0.0) return 0.0;
    w = sys.transition(w, x);
  }
  return p;
}

double word_set_probability(const RsccSystem& sys, double w, const WordSet& set) {
  double total = 0.0;
  for (const auto& word : set.words) {
    if (word.size() != set.length) throw DomainError("WordSet: word length differs from r");
    total += path_probability(sys, w, word);
  }
  for (const auto& tail : set.tails) {
    if (tail.prefix.size() + 1 != set.length) throw DomainError("WordSet: tail prefix length");
    const double prefix_p = tail.prefix.empty() ? 1.0 : path_probability(sys, w, tail.prefix);
    if (prefix_p == 0.0) continue;
    total += prefix_p * sys.tail_mass(sys.act(w, tail.prefix), tail.from);
  }
  return total;
}

// ---------------------------------------------------------------------------

double q_kernel_enumerated(const RsccSystem& sys, double w, const TargetSet& target,
                           std::int64_t max_events) {
  const auto& ev = sys.events();
  double total = 0.0;
  if (ev.is_finite()) {
    for (Event x = ev.first; x <= *ev.last; ++x) {
      if (target.contains(sys.transition(w, x))) total += sys.probability(w, x);
    }
    return total;
  }
  const auto& tail_image = sys.spec().tail_image;
  if (!tail_image) throw DomainError("q_kernel_enumerated: infinite X needs a tail-image hull");
  for (Event x = ev.first;; ++x) {
    if (x - ev.first >= max_events) {
      throw BudgetError("q_kernel_enumerated: tail undecided after max_events branches");
    }
    if (target.contains(sys.transition(w, x))) total += sys.probability(w, x);
    const Interval hull = tail_image(w, x + 1);
    bool inside = false;
    bool disjoint = true;
    for (const auto& piece : target.pieces()) {
      if (hull_inside(hull, piece)) inside = true;
      if (!hull_disjoint(hull, piece)) disjoint = false;
    }
    if (inside) return total + sys.tail_mass(w, x + 1);
    if (disjoint) return total;
  }
}

double q_kernel(const RsccSystem& sys, double w, const TargetSet& target) {
  if (!sys.has_kernel_below() || sys.states().is_finite()) {
    return q_kernel_enumerated(sys, w, target);
  }
  const auto& below = sys.spec().kernel_below;
  double total = 0.0;
  for (const auto& p : target.pieces()) {
    const double upper = below(w, p.hi, p.include_hi);
    const double lower = p.lo <= sys.states().lo ? 0.0 : below(w, p.lo, false);
    total += std::max(0.0, upper - lower);
  }
  return std::min(total, 1.0);
}

double kernel_invariance_integral(NcfParams params, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw DomainError("kernel_invariance_integral: u must lie in (0,1]");
  const GaussMeasure gm(params);
  const double n = params.nd();
  std::vector<double> jumps;
  const double ratio = n / u;
  for (double i = std::floor(ratio - 1.0); i <= std::ceil(ratio); i += 1.0) {
    const double x = ratio - i;
    if (x > 0.0 && x < 1.0) jumps.push_back(x);
  }
  std::sort(jumps.begin(), jumps.end());
  return integrate([&](double x) { return ncf_kernel_below(params, x, u) * gm.density(x); }, 0.0,
                   1.0, jumps);
}

// ---------------------------------------------------------------------------

SquareMatrix SquareMatrix::identity(std::size_t n) {
  SquareMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SquareMatrix operator+(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.size() != b.size()) throw DomainError("SquareMatrix: size mismatch");
  SquareMatrix c(a.size());
  for (std::size_t i = 0; i < a.a_.size(); ++i) c.a_[i] = a.a_[i] + b.a_[i];
  return c;
}

SquareMatrix operator*(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.size() != b.size()) throw DomainError("SquareMatrix: size mismatch");
  const std::size_t n = a.size();
  SquareMatrix c(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

SquareMatrix transition_matrix(const RsccSystem& sys) {
  const auto& states = sys.states();
  if (!states.is_finite()) throw DomainError("transition_matrix: needs a finite state space");
  const auto& ev = sys.events();
  if (!ev.is_finite()) throw DomainError("transition_matrix: needs a finite event set");
  SquareMatrix q(states.points.size());
  for (std::size_t i = 0; i < states.points.size(); ++i) {
    const double w = states.points[i];
    for (Event x = ev.first; x <= *ev.last; ++x) {
      q(i, state_index(states, sys.transition(w, x))) += sys.probability(w, x);
    }
  }
  return q;
}

SquareMatrix matrix_power(const SquareMatrix& m, int k) {
  if (k < 0) throw DomainError("matrix_power: k must be >= 0");
  SquareMatrix out = SquareMatrix::identity(m.size());
  SquareMatrix base = m;
  for (unsigned e = static_cast<unsigned>(k); e != 0; e >>= 1) {
    if (e & 1u) out = out * base;
    if (e > 1) base = base * base;
  }
  return out;
}

// Rows of a stochastic power sum to 1 (and of the power sum to n). The
// neutral direction is not damped by squaring, so rounding there grows
// like n eps unless it is projected out.
static void rescale_rows(SquareMatrix& m, double target) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) row += m(i, j);
    if (row > 0.0) {
      for (std::size_t j = 0; j < m.size(); ++j) m(i, j) *= target / row;
    }
  }
}

SquareMatrix matrix_power_sum(const SquareMatrix& m, std::int64_t n) {
  if (n < 0) throw DomainError("matrix_power_sum: n must be >= 0");
  if (n == 0) return SquareMatrix(m.size());
  // S_{2j} = S_j + Q^j S_j and S_{j+1} = S_j + Q^{j+1}, by binary digits of n.
  bool stochastic = true;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m(i, j) < 0.0) stochastic = false;
      row += m(i, j);
    }
    if (std::abs(row - 1.0) > 1e-12) stochastic = false;
  }
  SquareMatrix sum = m;
  SquareMatrix power = m;
  int top = 62;
  while (!((n >> top) & 1)) --top;
  std::int64_t done = 1;
  for (int bit = top - 1; bit >= 0; --bit) {
    sum = sum + power * sum;
    power = power * power;
    done *= 2;
    if ((n >> bit) & 1) {
      power = power * m;
      sum = sum + power;
      ++done;
    }
    if (stochastic) {
      rescale_rows(power, 1.0);
      rescale_rows(sum, static_cast<double>(done));
    }
  }
  return sum;
}

namespace {

double finite_target_mass(const SquareMatrix& m, const StateSpace& states, std::size_t row,
                          const TargetSet& target) {
  double total = 0.0;
  for (std::size_t j = 0; j < states.points.size(); ++j) {
    if (target.contains(states.points[j])) total += m(row, j);
  }
  return total;
}

void require_step(std::int64_t k) {
  if (k < 1) throw DomainError("kernel step must be >= 1");
}

// Cell masses Q(w, cell_c) on the uniform partition of an interval W.
class CellKernel {
 public:
  CellKernel(const RsccSystem& sys, std::size_t cells)
      : sys_(sys), edges_(uniform_nodes(sys.states(), cells)) {
    if (!sys.has_kernel_below()) throw DomainError("grid kernel: system has no interval kernel");
    if (cells < 1) throw DomainError("grid kernel: resolution must be >= 1");
  }

  std::size_t cells() const { return edges_.size() - 1; }
  const std::vector<double>& edges() const { return edges_; }

  void masses(double w, std::vector<double>& out) const {
    const auto& below = sys_.spec().kernel_below;
    const std::size_t m = cells();
    out.resize(m);
    double prev = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double next = c + 1 == m ? below(w, edges_[m], true) : below(w, edges_[c + 1], false);
      out[c] = next - prev;
      prev = next;
    }
  }

  // sum_c Q(w, cell_c) * (g(e_c) + g(e_{c+1})) / 2
  double average(double w, const std::vector<double>& g, std::vector<double>& scratch) const {
    masses(w, scratch);
    double total = 0.0;
    for (std::size_t c = 0; c < scratch.size(); ++c) total += scratch[c] * 0.5 * (g[c] + g[c + 1]);
    return total;
  }

 private:
  const RsccSystem& sys_;
  std::vector<double> edges_;
};

// Branch sums sum_x P(w,x) g(u(w,x)) over a uniform node grid on W. For
// infinite X the events past a per-state cutoff have images inside one
// cell; their mass is placed at the midpoint of the image hull.
class BranchKernel {
 public:
  BranchKernel(const RsccSystem& sys, std::size_t cells)
      : sys_(sys), nodes_(uniform_nodes(sys.states(), cells)) {
    if (cells < 1) throw DomainError("grid kernel: resolution must be >= 1");
    if (!sys.events().is_finite() && !sys.spec().tail_image) {
      throw DomainError("grid kernel: infinite X needs tail_image");
    }
    width_ = (sys.states().hi - sys.states().lo) / static_cast<double>(cells);
    for (double w : nodes_) cutoffs_.push_back(cutoff(w));
  }

  const std::vector<double>& nodes() const { return nodes_; }
  double branches() const {
    double total = 0.0;
    for (Event m : cutoffs_) total += static_cast<double>(m - sys_.events().first + 1);
    return total;
  }

  // Linear interpolant of node values g at y.
  double interpolate(const std::vector<double>& g, double y) const {
    const double t = (y - sys_.states().lo) / width_;
    const double cells = static_cast<double>(nodes_.size() - 1);
    const double c = std::clamp(std::floor(t), 0.0, cells - 1.0);
    const auto i = static_cast<std::size_t>(c);
    const double f = std::clamp(t - c, 0.0, 1.0);
    return g[i] + f * (g[i + 1] - g[i]);
  }

  template <typename G>
  double apply(double w, Event last, G&& g) const {
    double sum = 0.0;
    double comp = 0.0;  // Neumaier
    auto add = [&](double v) {
      const double t = sum + v;
      comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
      sum = t;
    };
    for (Event x = sys_.events().first; x < last; ++x) {
      const double p = sys_.probability(w, x);
      if (p != 0.0) add(p * g(sys_.transition(w, x)));
    }
    if (!sys_.events().is_finite()) {
      const Interval hull = sys_.spec().tail_image(w, last);
      add(sys_.tail_mass(w, last) * g(0.5 * (hull.lo + hull.hi)));
    }
    return sum + comp;
  }
  template <typename G>
  double apply_at_node(std::size_t j, G&& g) const {
    return apply(nodes_[j], cutoffs_[j], std::forward<G>(g));
  }

  // First event whose tail images fit in one cell (one past the last event
  // for finite X).
  Event cutoff(double w) const {
    const auto& ev = sys_.events();
    if (ev.is_finite()) return *ev.last + 1;
    Event step = 1;
    while (true) {
      const Interval hull = sys_.spec().tail_image(w, ev.first + step);
      if (hull.hi - hull.lo <= width_) break;
      if (step > (Event{1} << 40)) throw DomainError("grid kernel: tail images do not shrink");
      step *= 2;
    }
    Event lo = ev.first + step / 2;
    Event hi = ev.first + step;
    while (hi - lo > 1) {
      const Event mid = lo + (hi - lo) / 2;
      const Interval hull = sys_.spec().tail_image(w, mid);
      (hull.hi - hull.lo <= width_ ? hi : lo) = mid;
    }
    return hi;
  }

 private:
  const RsccSystem& sys_;
  std::vector<double> nodes_;
  std::vector<Event> cutoffs_;
  double width_ = 1.0;
};

// Node values of Q^(k)(., B) for k = 1..k_last by
// Q^(k)(w,B) = sum_x P(w,x) Q^(k-1)(u(w,x),B). Q^(1) is exact everywhere,
// so k = 2 is exact up to the tail; later steps interpolate Q^(k-1).
// Calls visit(k, g_k) for each k.
template <typename Visit>
void grid_recursion(const RsccSystem& sys, const BranchKernel& kernel, const TargetSet& target,
                    int k_last, Visit&& visit) {
  const auto& nodes = kernel.nodes();
  charge_budget(static_cast<double>(k_last) * kernel.branches(), "kernel grid recursion");
  std::vector<double> g(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) g[j] = q_kernel(sys, nodes[j], target);
  visit(1, g);
  std::vector<double> next(nodes.size());
  for (int k = 2; k <= k_last; ++k) {
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      next[j] = k == 2 ? kernel.apply_at_node(j, [&](double y) { return q_kernel(sys, y, target); })
                       : kernel.apply_at_node(j, [&](double y) { return kernel.interpolate(g, y); });
    }
    g.swap(next);
    visit(k, g);
  }
}

// Q^(k)(w,B) from the node values g_{k-1}; k = 1 uses the closed form.
double grid_step(const RsccSystem& sys, const BranchKernel& kernel, const TargetSet& target,
                 double w, int k, const std::vector<double>& g_prev) {
  if (k == 1) return q_kernel(sys, w, target);
  const Event last = kernel.cutoff(w);
  if (k == 2) return kernel.apply(w, last, [&](double y) { return q_kernel(sys, y, target); });
  return kernel.apply(w, last, [&](double y) { return kernel.interpolate(g_prev, y); });
}

}  // namespace

Estimate q_step(const RsccSystem& sys, int k, double source, const TargetSet& target,
                const KernelOptions& options) {
  require_step(k);
  if (!sys.states().contains(source)) throw DomainError("q_step: source outside W");
  const bool finite = sys.states().is_finite() && sys.events().is_finite();
  if (options.method == KernelMethod::monte_carlo) {
    charge_budget(static_cast<double>(options.paths) * k, "q_step Monte Carlo");
    UniformStream stream(options.seed, 1);
    std::size_t hits = 0;
    for (std::size_t p = 0; p < options.paths; ++p) {
      double w = source;
      for (int s = 0; s < k; ++s) w = sys.transition(w, sys.sample_event(w, stream));
      if (target.contains(w)) ++hits;
    }
    const double n = static_cast<double>(options.paths);
    const double mean = static_cast<double>(hits) / n;
    return {mean, std::sqrt(mean * (1.0 - mean) / n)};
  }
  if (finite) {
    const auto m = matrix_power(transition_matrix(sys), k);
    return {finite_target_mass(m, sys.states(), state_index(sys.states(), source), target), 0.0};
  }
  if (k == 1) return {q_kernel(sys, source, target), 0.0};
  const BranchKernel kernel(sys, options.resolution);
  std::vector<double> last;
  if (k > 2) {
    grid_recursion(sys, kernel, target, k - 1, [&](int step, const std::vector<double>& g) {
      if (step == k - 1) last = g;
    });
  }
  return {grid_step(sys, kernel, target, source, k, last), 0.0};
}

Estimate q_cesaro(const RsccSystem& sys, std::int64_t n, double source, const TargetSet& target,
                  const KernelOptions& options) {
  require_step(n);
  if (!sys.states().contains(source)) throw DomainError("q_cesaro: source outside W");
  const bool finite = sys.states().is_finite() && sys.events().is_finite();
  if (options.method == KernelMethod::monte_carlo) {
    charge_budget(static_cast<double>(options.paths) * n, "q_cesaro Monte Carlo");
    UniformStream stream(options.seed, 2);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t p = 0; p < options.paths; ++p) {
      double w = source;
      int hits = 0;
      for (std::int64_t s = 0; s < n; ++s) {
        w = sys.transition(w, sys.sample_event(w, stream));
        if (target.contains(w)) ++hits;
      }
      const double avg = static_cast<double>(hits) / n;
      sum += avg;
      sum_sq += avg * avg;
    }
    const double count = static_cast<double>(options.paths);
    const double mean = sum / count;
    const double var = std::max(0.0, sum_sq / count - mean * mean);
    return {mean, std::sqrt(var / count)};
  }
  if (finite) {
    const auto sum = matrix_power_sum(transition_matrix(sys), n);
    const std::size_t row = state_index(sys.states(), source);
    return {finite_target_mass(sum, sys.states(), row, target) / n, 0.0};
  }
  double total = q_kernel(sys, source, target);
  if (n > 1) {
    const BranchKernel kernel(sys, options.resolution);
    if (n > std::numeric_limits<int>::max()) throw BudgetError("q_cesaro: n too large for the grid");
    grid_recursion(sys, kernel, target, static_cast<int>(n - 1),
                   [&](int step, const std::vector<double>& g) {
                     total += grid_step(sys, kernel, target, source, step + 1, g);
                   });
  }
  return {total / n, 0.0};
}

KernelEstimate kernel_estimate(const RsccSystem& sys, int k, std::size_t resolution) {
  require_step(k);
  KernelEstimate est;
  est.step = k;
  if (sys.states().is_finite()) {
    const auto m = matrix_power(transition_matrix(sys), k);
    est.finite_states = true;
    est.sources = sys.states().points;
    for (std::size_t i = 0; i < m.size(); ++i) {
      std::vector<double> row(m.size());
      for (std::size_t j = 0; j < m.size(); ++j) row[j] = m(i, j);
      est.rows.push_back(std::move(row));
    }
    return est;
  }
  const double r = static_cast<double>(resolution);
  charge_budget(static_cast<double>(k) * r * r * r, "kernel_estimate");
  CellKernel kernel(sys, resolution);
  est.finite_states = false;
  est.sources = kernel.edges();
  est.cell_edges = kernel.edges();
  const std::size_t nodes = est.sources.size();
  std::vector<std::vector<double>> cell_rows(nodes);
  for (std::size_t j = 0; j < nodes; ++j) kernel.masses(est.sources[j], cell_rows[j]);
  for (std::size_t j = 0; j < nodes; ++j) {
    // Node distribution after k-1 steps of the cell-average chain.
    std::vector<double> pi(nodes, 0.0), next(nodes);
    pi[j] = 1.0;
    for (int step = 1; step < k; ++step) {
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t a = 0; a < nodes; ++a) {
        if (pi[a] == 0.0) continue;
        const auto& row = cell_rows[a];
        for (std::size_t c = 0; c < row.size(); ++c) {
          const double half = 0.5 * pi[a] * row[c];
          next[c] += half;
          next[c + 1] += half;
        }
      }
      pi.swap(next);
    }
    std::vector<double> out(resolution, 0.0);
    for (std::size_t a = 0; a < nodes; ++a) {
      if (pi[a] == 0.0) continue;
      for (std::size_t c = 0; c < resolution; ++c) out[c] += pi[a] * cell_rows[a][c];
    }
    est.rows.push_back(std::move(out));
  }
  return est;
}

// ---------------------------------------------------------------------------

ContractionReport contraction_coefficients(const RsccSystem& sys, const ContractionOptions& options) {
  if (options.k_max < 1) throw DomainError("contraction_coefficients: k_max must be >= 1");
  if (options.word_cap < 2) throw DomainError("contraction_coefficients: word_cap must be >= 2");
  const auto& ev = sys.events();
  const bool infinite_x = !ev.is_finite();
  if (infinite_x && !sys.spec().tail_lipschitz) {
    throw DomainError("contraction_coefficients: infinite X needs tail_lipschitz");
  }
  const std::vector<double> states =
      sys.states().is_finite() ? sys.states().points : uniform_nodes(sys.states(), options.grid);
  const std::size_t n_states = states.size();
  const auto isa = simd::active_isa();

  ContractionReport report;
  std::vector<std::vector<double>> p1;  // k = 1 probabilities, kept for R
  std::size_t letters1 = 0;

  for (int k = 1; k <= options.k_max; ++k) {
    std::size_t letters = 0;
    if (infinite_x) {
      letters = integer_root(options.word_cap, k);
      if (letters < 2) letters = 0;
    } else {
      const double total = std::pow(static_cast<double>(ev.size()), k);
      letters = total <= static_cast<double>(options.word_cap) ? ev.size() : 0;
    }
    report.letters_per_position.push_back(letters);
    if (letters == 0) {
      double bound = std::numeric_limits<double>::infinity();
      for (int j = 1; j < k; ++j) bound = std::min(bound, report.r_values[j - 1] * report.r_values[k - j - 1]);
      report.r_values.push_back(bound);
      report.r_from_bound.push_back(true);
      report.tail_bounds.push_back(0.0);
      continue;
    }
    std::size_t words = 1;
    for (int i = 0; i < k; ++i) words *= letters;
    charge_budget(static_cast<double>(n_states) * n_states * words, "contraction_coefficients");

    std::vector<std::vector<double>> prob(n_states, std::vector<double>(words));
    std::vector<std::vector<double>> image(n_states, std::vector<double>(words));
    std::vector<double> tail_bound(n_states, 0.0);
    const double lip_first = infinite_x ? sys.spec().tail_lipschitz(ev.first) : 0.0;
    const double lip_tail =
        infinite_x ? sys.spec().tail_lipschitz(ev.first + static_cast<Event>(letters)) : 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
      double mass = 0.0;
      for (std::size_t idx = 0; idx < words; ++idx) {
        std::size_t code = idx;
        double w = states[s];
        double p = 1.0;
        for (int pos = 0; pos < k; ++pos) {
          const Event x = ev.first + static_cast<Event>(code % letters);
          code /= letters;
          p *= sys.probability(w, x);
          w = sys.transition(w, x);
        }
        prob[s][idx] = p;
        image[s][idx] = w;
        mass += p;
      }
      if (infinite_x) {
        // Words with some letter beyond the truncation.
        tail_bound[s] = std::max(0.0, 1.0 - mass) * lip_tail * std::pow(lip_first, k - 1);
      }
    }
    double r = 0.0;
    double worst_tail = 0.0;
    for (std::size_t a = 0; a < n_states; ++a) {
      for (std::size_t b = 0; b < n_states; ++b) {
        if (a == b) continue;
        const double dist = std::abs(states[a] - states[b]);
        const double sum = simd::weighted_l1(isa, prob[a], image[a], image[b]);
        r = std::max(r, sum / dist + tail_bound[a]);
      }
      worst_tail = std::max(worst_tail, tail_bound[a]);
    }
    // r_k <= r_j r_{k-j}; with few letters per position the tail term can
    // be the looser of the two.
    double product = std::numeric_limits<double>::infinity();
    for (int j = 1; j < k; ++j) product = std::min(product, report.r_values[j - 1] * report.r_values[k - j - 1]);
    report.r_values.push_back(std::min(r, product));
    report.r_from_bound.push_back(product < r);
    report.tail_bounds.push_back(worst_tail);
    if (k == 1) {
      p1 = std::move(prob);
      letters1 = letters;
    }
  }

  // R: sup over A of |P(w',A) - P(w'',A)| is attained at A = {x : P(w',x) > P(w'',x)}
  // and equals half the L1 distance of the two rows. Past the truncation the
  // differences are taken to share one sign, so the tail enters as one term.
  double big_r = 0.0;
  const Event cut = ev.first + static_cast<Event>(letters1);
  for (std::size_t a = 0; a < n_states; ++a) {
    for (std::size_t b = 0; b < n_states; ++b) {
      if (a == b) continue;
      double l1 = simd::l1_distance(isa, p1[a], p1[b]);
      if (infinite_x) l1 += std::abs(sys.tail_mass(states[a], cut) - sys.tail_mass(states[b], cut));
      big_r = std::max(big_r, 0.5 * l1 / std::abs(states[a] - states[b]));
    }
  }
  report.big_r = big_r;
  for (int k = 1; k <= options.k_max; ++k) {
    if (report.r_values[k - 1] < 1.0 - options.margin) {
      report.certified_at = k;
      break;
    }
  }
  report.certified = std::isfinite(report.r_values[0]) && report.certified_at.has_value() &&
                     std::isfinite(report.big_r);
  return report;
}

// ---------------------------------------------------------------------------

RegularityReport regularity_witness(const RsccSystem& sys, std::span<const double> starts,
                                    int n_max, Event event, double x_star, double tolerance) {
  if (n_max < 1) throw DomainError("regularity_witness: n_max must be >= 1");
  if (!sys.events().contains(event)) throw DomainError("regularity_witness: event not in X");
  RegularityReport report;
  report.x_star = x_star;
  const double noise = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x_star));
  for (double start : starts) {
    if (!sys.states().contains(start)) throw DomainError("regularity_witness: start outside W");
    RegularityCurve curve;
    curve.start = start;
    double x = start;
    curve.distances.push_back(std::abs(x - x_star));
    for (int n = 1; n <= n_max; ++n) {
      x = sys.transition(x, event);
      curve.distances.push_back(std::abs(x - x_star));
    }
    const auto& d = curve.distances;
    for (int n = 0; n <= n_max; ++n) {
      if (d[n] < tolerance) {
        curve.reached_at = n;
        break;
      }
    }
    for (int n = 1; n < n_max; ++n) {
      if (d[n] > noise && d[n + 1] > d[n]) curve.monotone = false;
    }
    for (int n = 0; n < n_max; ++n) {
      if (d[n] >= 1e-8 && d[n + 1] > 0.0) curve.asymptotic_ratio = d[n + 1] / d[n];
    }
    report.curves.push_back(std::move(curve));
  }
  return report;
}

RegularityReport regularity_witness(NcfParams params, std::span<const double> starts, int n_max,
                                    double tolerance) {
  const double x_star = fixed_point(params);
  auto report = regularity_witness(make_ncf_rscc(params), starts, n_max, params.n(), x_star,
                                   tolerance);
  const double denom = x_star + params.nd();
  report.predicted_ratio = params.nd() / (denom * denom);
  return report;
}

// ---------------------------------------------------------------------------

Estimate shifted_path_probability(const RsccSystem& sys, double w, int n, const WordSet& set,
                                  const ShiftOptions& options) {
  if (n < 1) throw DomainError("shifted_path_probability: n must be >= 1");
  if (!sys.states().contains(w)) throw DomainError("shifted_path_probability: w outside W");
  if (n == 1) return {word_set_probability(sys, w, set), 0.0};
  if (sys.states().is_finite() && sys.events().is_finite()) {
    const auto m = matrix_power(transition_matrix(sys), n - 1);
    const std::size_t row = state_index(sys.states(), w);
    double total = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m(row, j) != 0.0) total += m(row, j) * word_set_probability(sys, sys.states().points[j], set);
    }
    return {total, 0.0};
  }
  charge_budget(static_cast<double>(options.paths) * n, "shifted_path_probability");
  UniformStream stream(options.seed, 3);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < options.paths; ++p) {
    double state = w;
    for (int s = 1; s < n; ++s) state = sys.transition(state, sys.sample_event(state, stream));
    const double v = word_set_probability(sys, state, set);
    sum += v;
    sum_sq += v * v;
  }
  const double count = static_cast<double>(options.paths);
  const double mean = sum / count;
  const double var = std::max(0.0, sum_sq / count - mean * mean);
  return {mean, std::sqrt(var / count)};
}

double limit_path_law(const RsccSystem& sys, const WordSet& set, const GaussMeasure& limit) {
  if (sys.states().is_finite()) throw DomainError("limit_path_law: needs an interval state space");
  return integrate(
      [&](double w) { return word_set_probability(sys, w, set) * limit.density(w); },
      sys.states().lo, sys.states().hi);
}

std::vector<double> ergodicity_gap_curve(const RsccSystem& sys, const GaussMeasure& limit,
                                         std::span<const double> starts,
                                         std::span<const WordSet> probes,
                                         std::span<const int> n_values,
                                         const ShiftOptions& options) {
  std::vector<double> limits;
  for (const auto& probe : probes) limits.push_back(limit_path_law(sys, probe, limit));
  std::vector<double> curve;
  for (int n : n_values) {
    double eps = 0.0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
      for (std::size_t a = 0; a < probes.size(); ++a) {
        ShiftOptions cell = options;
        cell.seed = derive_seed(options.seed, (static_cast<std::uint64_t>(n) << 32) ^ (s << 16) ^ a);
        const auto est = shifted_path_probability(sys, starts[s], n, probes[a], cell);
        eps = std::max(eps, std::abs(est.value - limits[a]));
      }
    }
    curve.push_back(eps);
  }
  return curve;
}

}  // namespace ncf
