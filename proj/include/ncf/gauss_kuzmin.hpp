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

// Propagation of an initial measure mu under T_N and comparison of
// mu(T_N^n < x) with the limit law log((x+N)/N) / log((N+1)/N).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ncf/core.hpp"
#include "ncf/estimate.hpp"
#include "ncf/measure.hpp"
#include "ncf/transfer.hpp"

namespace ncf {

class InitialMeasure {
 public:
  // `inverse_cdf` enables Monte Carlo sampling; without it only the
  // operator route is available.
  InitialMeasure(std::string name, DensityFunction density, bool lipschitz,
                 std::function<double(double)> inverse_cdf = {});

  static InitialMeasure lebesgue();
  // Density proportional to 1 + x/2.
  static InitialMeasure linear();
  // G_K for any K >= 1, used as an initial law under a different N.
  static InitialMeasure gauss(NcfParams k);

  const std::string& name() const { return name_; }
  const DensityFunction& density() const { return density_; }
  bool lipschitz() const { return lipschitz_; }
  bool can_sample() const { return static_cast<bool>(inverse_cdf_); }
  double sample(UniformStream& stream) const;

 private:
  std::string name_;
  DensityFunction density_;
  bool lipschitz_;
  std::function<double(double)> inverse_cdf_;
};

double limit_cdf(double x, NcfParams params);

// f_0 = dmu/dG_N = log((N+1)/N) (x+N) h(x) at the nodes j/M.
GridFunction initial_ratio(const InitialMeasure& mu, NcfParams params, std::size_t resolution);
// h(x) = f(x) / ((x+N) log((N+1)/N)) with f interpolated; inverse of the above.
DensityFunction density_from_ratio(const GridFunction& f, NcfParams params,
                                   double mass_tolerance = 1e-8);
// Density of mu o T_N^{-1}: one application of U to f_0. The grid sample of
// f_0 is rescaled to unit G_N-mass first.
DensityFunction pushforward_density(const InitialMeasure& mu, NcfParams params,
                                    std::size_t resolution = 1024);

enum class GkMethod { operator_iteration, monte_carlo };

struct GkOptions {
  std::size_t resolution = 1024;   // M
  std::size_t samples = 1'000'000; // K
  std::uint64_t seed = 0;
};

// mu(T_N^n < x). Operator: integral of U^n f_0 over [0, x) against G_N.
// Monte Carlo: fraction of K draws y ~ mu with T_N^n(y) < x.
Estimate distribution_at(const InitialMeasure& mu, int n, double x, NcfParams params,
                         GkMethod method, const GkOptions& options = {});

struct MethodAgreement {
  int n = 0;
  double x = 0.0;
  double operator_value = 0.0;
  double monte_carlo = 0.0;
  double std_error = 0.0;
  double gap = 0.0;
  double band = 0.0;  // 4 standard errors plus the grid tolerance
  bool within = false;
};

struct GkReport {
  std::string mu;
  std::int64_t n_param = 1;
  std::size_t resolution = 0;
  std::size_t x_points = 0;
  std::vector<int> n_values;         // 0..n_max
  std::vector<double> sup_errors;    // max over the x-grid of |mu(T^n < x) - F(x)|
  double drift = 0.0;                // max_n |mass of U^n f_0 - 1|
  double floor = 0.0;
  double q_fit = 0.0;
  double k_fit = 0.0;
  double theta_bound = 0.0;          // max over the window of |e_n(x)| / (q^n F(x))
  GeometricFit fit;
  std::vector<MethodAgreement> method_agreement;
};

struct GkExperimentOptions {
  std::size_t x_points = 257;
  GkOptions gk;
  bool check_methods = true;
};

// Error curve for n = 0..n_max; no fit.
std::vector<double> sup_error_curve(const InitialMeasure& mu, NcfParams params, int n_max,
                                    std::size_t x_points, std::size_t resolution,
                                    double* drift = nullptr);

// Throws FitError when fewer than 3 errors lie above the floor, which is
// the case for mu = G_N.
GkReport run_experiment(const InitialMeasure& mu, NcfParams params, int n_max,
                        const GkExperimentOptions& options = {});

std::string to_json(const GkReport& report);
// Columns: n,sup_error
std::string to_csv(const GkReport& report);

}  // namespace ncf
