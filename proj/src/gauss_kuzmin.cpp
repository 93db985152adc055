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

#include "ncf/gauss_kuzmin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ncf/budget.hpp"
#include "ncf/errors.hpp"
#include "ncf/simd.hpp"

namespace ncf {
namespace {

constexpr double kGridTolerance = 1e-6;

std::vector<double> node_breakpoints(std::size_t resolution) {
  std::vector<double> b;
  for (std::size_t j = 1; j < resolution; ++j) {
    b.push_back(static_cast<double>(j) / static_cast<double>(resolution));
  }
  return b;
}

GridFunction unit_mass(const GridFunction& f, NcfParams params) {
  const double mass = integrate_gn(f, GaussMeasure(params));
  std::vector<double> v(f.values().begin(), f.values().end());
  for (double& x : v) x /= mass;
  return GridFunction(std::move(v));
}

// f_0 scaled to unit mass against G_N.
GridFunction unit_ratio(const InitialMeasure& mu, NcfParams params, std::size_t resolution) {
  return unit_mass(initial_ratio(mu, params, resolution), params);
}

double upto(const std::vector<double>& cum, const GridFunction& f, const GaussMeasure& gm,
            double x) {
  const double m = static_cast<double>(f.resolution());
  const double kd = std::fmin(std::floor(x * m), m - 1.0);
  const auto k = static_cast<std::size_t>(kd);
  const double a = f.node(k);
  if (x == a) return cum[k];
  const double fa = f[k];
  const double fb = f(x);
  const double n = gm.params().nd();
  const double c1 = (fb - fa) / (x - a);
  return cum[k] + ((fb - fa) + (fa - c1 * (a + n)) * std::log1p((x - a) / (a + n))) / gm.log_norm();
}

std::vector<double> x_grid(std::size_t points) {
  if (points < 2) throw DomainError("x-grid needs at least 2 points");
  std::vector<double> xs(points);
  for (std::size_t k = 0; k < points; ++k) {
    xs[k] = static_cast<double>(k) / static_cast<double>(points - 1);
  }
  return xs;
}

// errors[n][k] = mu(T^n < x_k) - F(x_k) by operator iteration.
std::vector<std::vector<double>> error_table(const InitialMeasure& mu, NcfParams params, int n_max,
                                             const std::vector<double>& xs,
                                             std::size_t resolution, double& drift) {
  if (n_max < 0) throw DomainError("n_max must be >= 0");
  const GaussMeasure gm(params);
  std::vector<double> limit(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) limit[k] = limit_cdf(xs[k], params);
  GridFunction power = unit_ratio(mu, params, resolution);
  drift = 0.0;
  std::vector<std::vector<double>> table;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) power = apply_transfer(power, params);
    const auto cum = cumulative_gn(power, gm);
    drift = std::max(drift, std::abs(cum.back() - 1.0));
    std::vector<double> row(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) row[k] = upto(cum, power, gm, xs[k]) - limit[k];
    table.push_back(std::move(row));
  }
  return table;
}

}  // namespace

InitialMeasure::InitialMeasure(std::string name, DensityFunction density, bool lipschitz,
                               std::function<double(double)> inverse_cdf)
    : name_(std::move(name)),
      density_(std::move(density)),
      lipschitz_(lipschitz),
      inverse_cdf_(std::move(inverse_cdf)) {}

InitialMeasure InitialMeasure::lebesgue() {
  return InitialMeasure("lebesgue", DensityFunction([](double) { return 1.0; }, 0.0), true,
                        [](double u) { return u; });
}

InitialMeasure InitialMeasure::linear() {
  // h = (1 + x/2) / (5/4); F(x) = (4x + x^2) / 5.
  return InitialMeasure(
      "linear", DensityFunction([](double x) { return 0.8 + 0.4 * x; }, 0.4), true,
      [](double u) { return 5.0 * u / (2.0 + std::sqrt(4.0 + 5.0 * u)); });
}

InitialMeasure InitialMeasure::gauss(NcfParams k) {
  const GaussMeasure gm(k);
  const double lip = 1.0 / (k.nd() * k.nd() * gm.log_norm());
  return InitialMeasure("gauss" + std::to_string(k.n()),
                        DensityFunction([gm](double x) { return gm.density(x); }, lip), true,
                        [gm](double u) { return gn_inverse_cdf(u, gm); });
}

double InitialMeasure::sample(UniformStream& stream) const {
  if (!inverse_cdf_) throw DomainError("InitialMeasure " + name_ + " has no sampler");
  return inverse_cdf_(stream.next());
}

double limit_cdf(double x, NcfParams params) { return gn_cdf(x, GaussMeasure(params)); }

GridFunction initial_ratio(const InitialMeasure& mu, NcfParams params, std::size_t resolution) {
  const double n = params.nd();
  const double log_norm = GaussMeasure(params).log_norm();
  return GridFunction::sample(
      [&](double x) { return log_norm * (x + n) * mu.density()(x); }, resolution);
}

DensityFunction density_from_ratio(const GridFunction& f, NcfParams params,
                                   double mass_tolerance) {
  const double n = params.nd();
  const double log_norm = GaussMeasure(params).log_norm();
  const double lip = lipschitz_norm(f).total / (n * log_norm) * (1.0 + 1.0 / n);
  return DensityFunction([f, n, log_norm](double x) { return f(x) / ((x + n) * log_norm); }, lip,
                         node_breakpoints(f.resolution()), mass_tolerance);
}

DensityFunction pushforward_density(const InitialMeasure& mu, NcfParams params,
                                    std::size_t resolution) {
  // U f_0 loses O(h^2) grid mass to interpolation; the exact image has mass 1.
  return density_from_ratio(unit_mass(apply_transfer(unit_ratio(mu, params, resolution), params), params),
                            params);
}

Estimate distribution_at(const InitialMeasure& mu, int n, double x, NcfParams params,
                         GkMethod method, const GkOptions& options) {
  if (n < 0) throw DomainError("distribution_at: n must be >= 0");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("distribution_at: x must lie in [0,1]");
  if (method == GkMethod::operator_iteration) {
    const std::size_t m = options.resolution;
    charge_budget(static_cast<double>(n) * static_cast<double>(m + 1) *
                      static_cast<double>(transfer_truncation(params, m)),
                  "distribution_at operator");
    const GaussMeasure gm(params);
    GridFunction power = unit_ratio(mu, params, m);
    for (int k = 0; k < n; ++k) power = apply_transfer(power, params);
    return {integrate_gn(power, gm, x), 0.0};
  }
  const std::size_t count = options.samples;
  if (count == 0) throw DomainError("distribution_at: Monte Carlo needs samples > 0");
  charge_budget(static_cast<double>(count) * (n + 1), "distribution_at Monte Carlo");
  UniformStream stream(options.seed, 7);
  std::vector<double> ys(count);
  for (auto& y : ys) y = mu.sample(stream);
  simd::gauss_map_iterate(simd::active_isa(), ys, params.n(), n);
  const auto hits = std::count_if(ys.begin(), ys.end(), [x](double y) { return y < x; });
  const double p = static_cast<double>(hits) / static_cast<double>(count);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(count))};
}

std::vector<double> sup_error_curve(const InitialMeasure& mu, NcfParams params, int n_max,
                                    std::size_t x_points, std::size_t resolution, double* drift) {
  double d = 0.0;
  const auto table = error_table(mu, params, n_max, x_grid(x_points), resolution, d);
  if (drift) *drift = d;
  std::vector<double> out;
  for (const auto& row : table) {
    double sup = 0.0;
    for (double e : row) sup = std::max(sup, std::abs(e));
    out.push_back(sup);
  }
  return out;
}

GkReport run_experiment(const InitialMeasure& mu, NcfParams params, int n_max,
                        const GkExperimentOptions& options) {
  if (n_max < 5) throw DomainError("run_experiment: n_max must be >= 5");
  const auto xs = x_grid(options.x_points);
  const std::size_t m = options.gk.resolution;
  charge_budget(static_cast<double>(n_max) * static_cast<double>(m + 1) *
                    static_cast<double>(transfer_truncation(params, m)),
                "run_experiment");

  GkReport report;
  report.mu = mu.name();
  report.n_param = params.n();
  report.resolution = m;
  report.x_points = xs.size();
  const auto table = error_table(mu, params, n_max, xs, m, report.drift);
  for (int n = 0; n <= n_max; ++n) {
    double sup = 0.0;
    for (double e : table[n]) sup = std::max(sup, std::abs(e));
    report.n_values.push_back(n);
    report.sup_errors.push_back(sup);
  }
  report.floor = std::max(100.0 * std::numeric_limits<double>::epsilon(), 10.0 * report.drift);
  report.fit = fit_geometric(report.sup_errors, report.floor, 1);
  if (!(report.fit.q > 0.0 && report.fit.q < 1.0)) {
    throw FitError("run_experiment: fitted rate " + std::to_string(report.fit.q) +
                   " is not in (0,1)");
  }
  report.q_fit = report.fit.q;
  report.k_fit = report.fit.k;
  for (int n : report.fit.n_values) {
    const double qn = std::pow(report.q_fit, n);
    for (std::size_t k = 1; k < xs.size(); ++k) {
      report.theta_bound =
          std::max(report.theta_bound, std::abs(table[n][k]) / (qn * limit_cdf(xs[k], params)));
    }
  }

  if (options.check_methods && mu.can_sample()) {
    const std::pair<int, double> cells[] = {{1, 0.5}, {2, 0.25}, {5, 0.75}};
    for (std::size_t c = 0; c < 3; ++c) {
      MethodAgreement a;
      a.n = std::min(cells[c].first, n_max);
      a.x = cells[c].second;
      const std::size_t k = static_cast<std::size_t>(
          std::lround(a.x * static_cast<double>(xs.size() - 1)));
      a.operator_value = xs[k] == a.x
                             ? table[a.n][k] + limit_cdf(a.x, params)
                             : distribution_at(mu, a.n, a.x, params, GkMethod::operator_iteration,
                                               options.gk).value;
      GkOptions mc = options.gk;
      mc.seed = derive_seed(options.gk.seed, c);
      const auto est = distribution_at(mu, a.n, a.x, params, GkMethod::monte_carlo, mc);
      a.monte_carlo = est.value;
      a.std_error = est.std_error;
      a.gap = std::abs(a.operator_value - a.monte_carlo);
      a.band = 4.0 * a.std_error + kGridTolerance;
      a.within = a.gap <= a.band;
      report.method_agreement.push_back(a);
    }
  }
  return report;
}

std::string to_json(const GkReport& r) {
  nlohmann::ordered_json j;
  j["mu"] = r.mu;
  j["n"] = r.n_param;
  j["grid"] = r.resolution;
  j["x_points"] = r.x_points;
  j["n_values"] = r.n_values;
  j["sup_errors"] = r.sup_errors;
  j["drift"] = r.drift;
  j["floor"] = r.floor;
  j["q_fit"] = r.q_fit;
  j["k_fit"] = r.k_fit;
  j["theta_bound"] = r.theta_bound;
  j["fit_window"] = r.fit.n_values;
  j["residuals"] = r.fit.residuals;
  j["max_abs_residual"] = r.fit.max_abs_residual;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& a : r.method_agreement) {
    cells.push_back({{"n", a.n},
                     {"x", a.x},
                     {"operator", a.operator_value},
                     {"monte_carlo", a.monte_carlo},
                     {"std_error", a.std_error},
                     {"gap", a.gap},
                     {"band", a.band},
                     {"within", a.within}});
  }
  j["method_agreement"] = std::move(cells);
  return j.dump(2);
}

std::string to_csv(const GkReport& r) {
  std::string out = "n,sup_error\n";
  char buf[64];
  for (std::size_t i = 0; i < r.n_values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", r.n_values[i], r.sup_errors[i]);
    out += buf;
  }
  return out;
}

}  // namespace ncf
