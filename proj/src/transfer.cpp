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

#include "ncf/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include <boost/math/special_functions/trigamma.hpp>

#include "ncf/budget.hpp"
#include "ncf/errors.hpp"
#include "ncf/simd.hpp"

namespace ncf {
namespace {

// Branches i > i_max land in [0, 1/M) where f is f0 + s y. Summing the
// weights against that line gives f0 (x+N)/(x+m) plus
// s N (x+N) sum_{i>=m} 1/((x+i)^2 (x+i+1)) = s N (x+N) (psi'(x+m) - 1/(x+m)).
double linear_tail(std::span<const double> grid, double n, double x, std::int64_t m) {
  const double f0 = grid[0];
  const double s = (grid[1] - grid[0]) * static_cast<double>(grid.size() - 1);
  const double z = x + static_cast<double>(m);
  const double xn = x + n;
  double tail = f0 * xn / z;
  if (s != 0.0) tail += s * n * xn * (boost::math::trigamma(z) - 1.0 / z);
  return tail;
}

double cell_integral(double a, double b, double fa, double fb, double n, double log_norm) {
  const double c1 = (fb - fa) / (b - a);
  return ((fb - fa) + (fa - c1 * (a + n)) * std::log1p((b - a) / (a + n))) / log_norm;
}

}  // namespace

GridFunction::GridFunction(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() < 2) throw DomainError("GridFunction: needs at least 2 nodes");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("GridFunction: node values must be finite");
  }
}

GridFunction GridFunction::sample(const RealFunction& f, std::size_t resolution) {
  if (resolution < 1) throw DomainError("GridFunction: resolution must be >= 1");
  std::vector<double> v(resolution + 1);
  for (std::size_t j = 0; j <= resolution; ++j) {
    v[j] = f(static_cast<double>(j) / static_cast<double>(resolution));
  }
  return GridFunction(std::move(v));
}

GridFunction GridFunction::constant(double c, std::size_t resolution) {
  if (resolution < 1) throw DomainError("GridFunction: resolution must be >= 1");
  return GridFunction(std::vector<double>(resolution + 1, c));
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  if (a.resolution() != b.resolution()) throw DomainError("GridFunction: resolution mismatch");
  std::vector<double> v(a.values_.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = a.values_[j] + b.values_[j];
  return GridFunction(std::move(v));
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
  return a + (-1.0) * b;
}

GridFunction operator*(double c, const GridFunction& f) {
  std::vector<double> v(f.values_);
  for (double& x : v) x *= c;
  return GridFunction(std::move(v));
}

double GridFunction::node(std::size_t j) const {
  return static_cast<double>(j) / static_cast<double>(resolution());
}

double GridFunction::operator()(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("GridFunction: x must lie in [0,1]");
  const double m = static_cast<double>(resolution());
  const double t = x * m;
  const double kd = std::fmin(std::floor(t), m - 1.0);
  const auto k = static_cast<std::size_t>(kd);
  return values_[k] + (t - kd) * (values_[k + 1] - values_[k]);
}

std::int64_t transfer_truncation(NcfParams params, std::size_t resolution) {
  const auto m = static_cast<std::int64_t>(resolution);
  return std::max({std::int64_t{1000}, 100 * params.n(), params.n() * m});
}

GridFunction apply_transfer(const GridFunction& f, NcfParams params) {
  const std::size_t m = f.resolution();
  const std::int64_t i_max = transfer_truncation(params, m);
  charge_budget(static_cast<double>(m + 1) * static_cast<double>(i_max - params.n() + 1),
                "apply_transfer");
  std::vector<double> xs(m + 1), out(m + 1);
  for (std::size_t j = 0; j <= m; ++j) xs[j] = f.node(j);
  simd::transfer_branch_sum(simd::active_isa(), f.values(), params.n(), params.n(), i_max, xs, out);
  for (std::size_t j = 0; j <= m; ++j) out[j] += linear_tail(f.values(), params.nd(), xs[j], i_max + 1);
  return GridFunction(std::move(out));
}

double transfer_at(const GridFunction& f, NcfParams params, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("transfer_at: x must lie in [0,1]");
  const std::int64_t i_max = transfer_truncation(params, f.resolution());
  double out = 0.0;
  simd::transfer_branch_sum(simd::Isa::scalar, f.values(), params.n(), params.n(), i_max,
                            std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out + linear_tail(f.values(), params.nd(), x, i_max + 1);
}

LipschitzNormEstimate lipschitz_norm(const GridFunction& f) {
  LipschitzNormEstimate est;
  const auto v = f.values();
  const double m = static_cast<double>(f.resolution());
  for (std::size_t j = 0; j < v.size(); ++j) {
    est.sup_part = std::max(est.sup_part, std::abs(v[j]));
    if (j + 1 < v.size()) est.slope_part = std::max(est.slope_part, std::abs(v[j + 1] - v[j]) * m);
  }
  est.total = est.sup_part + est.slope_part;
  return est;
}

GridFunction cesaro_operator(const GridFunction& f, int n, NcfParams params) {
  if (n < 1) throw DomainError("cesaro_operator: n must be >= 1");
  GridFunction power = apply_transfer(f, params);
  std::vector<double> avg(power.values().begin(), power.values().end());
  for (int k = 2; k <= n; ++k) {
    power = apply_transfer(power, params);
    // running mean: avg_k = avg_{k-1} + (U^k f - avg_{k-1}) / k
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] += (power[j] - avg[j]) / k;
  }
  return GridFunction(std::move(avg));
}

std::vector<double> cumulative_gn(const GridFunction& f, const GaussMeasure& gm) {
  const std::size_t m = f.resolution();
  const double n = gm.params().nd();
  std::vector<double> out(m + 1, 0.0);
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double v = cell_integral(f.node(j), f.node(j + 1), f[j], f[j + 1], n, gm.log_norm());
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
    out[j + 1] = sum + comp;
  }
  return out;
}

double integrate_gn(const GridFunction& f, const GaussMeasure& gm) {
  return cumulative_gn(f, gm).back();
}

double integrate_gn(const GridFunction& f, const GaussMeasure& gm, double x_end) {
  if (!(x_end >= 0.0 && x_end <= 1.0)) throw DomainError("integrate_gn: x must lie in [0,1]");
  const auto cum = cumulative_gn(f, gm);
  const double m = static_cast<double>(f.resolution());
  const double kd = std::fmin(std::floor(x_end * m), m - 1.0);
  const auto k = static_cast<std::size_t>(kd);
  const double a = f.node(k);
  if (x_end == a) return cum[k];
  return cum[k] + cell_integral(a, x_end, f[k], f(x_end), gm.params().nd(), gm.log_norm());
}

GeometricFit fit_geometric(std::span<const double> errors, double floor, int n_first) {
  GeometricFit fit;
  std::vector<double> logs;
  for (int n = n_first; n < static_cast<int>(errors.size()); ++n) {
    if (!(errors[n] > floor)) break;
    fit.n_values.push_back(n);
    logs.push_back(std::log(errors[n]));
  }
  const std::size_t count = logs.size();
  if (count < 3) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "geometric fit: only %zu points above the error floor %.3g",
                  count, floor);
    throw FitError(buf);
  }
  double mean_n = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    mean_n += fit.n_values[i];
    mean_y += logs[i];
  }
  mean_n /= static_cast<double>(count);
  mean_y /= static_cast<double>(count);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double dn = fit.n_values[i] - mean_n;
    sxy += dn * (logs[i] - mean_y);
    sxx += dn * dn;
  }
  const double slope = sxy / sxx;
  const double intercept = mean_y - slope * mean_n;
  fit.q = std::exp(slope);
  fit.k = std::exp(intercept);
  for (std::size_t i = 0; i < count; ++i) {
    const double r = logs[i] - (intercept + slope * fit.n_values[i]);
    fit.residuals.push_back(r);
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(r));
  }
  return fit;
}

GapEstimate estimate_gap(const GridFunction& f, NcfParams params, int n_max) {
  if (n_max < 5) throw DomainError("estimate_gap: n_max must be >= 5");
  const auto v = f.values();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  if (*lo == *hi) throw DomainError("estimate_gap: f must be non-constant");

  const GaussMeasure gm(params);
  GapEstimate est;
  est.c_f = integrate_gn(f, gm);
  GridFunction power = f;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) power = apply_transfer(power, params);
    std::vector<double> centered(power.values().begin(), power.values().end());
    double sup = 0.0;
    for (double& c : centered) {
      c -= est.c_f;
      sup = std::max(sup, std::abs(c));
    }
    est.sup_errors.push_back(sup);
    est.lipschitz_errors.push_back(lipschitz_norm(GridFunction(std::move(centered))).total);
    est.drift = std::max(est.drift, std::abs(integrate_gn(power, gm) - est.c_f));
  }
  est.floor = std::max(100.0 * std::numeric_limits<double>::epsilon(), 10.0 * est.drift);
  est.fit = fit_geometric(est.sup_errors, est.floor);
  if (!(est.fit.q > 0.0 && est.fit.q < 1.0)) {
    throw FitError("estimate_gap: fitted rate " + std::to_string(est.fit.q) + " is not in (0,1)");
  }
  est.q_hat = est.fit.q;
  est.k_hat = est.fit.k;
  return est;
}

}  // namespace ncf
