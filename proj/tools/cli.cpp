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

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "ncf/core.hpp"
#include "ncf/errors.hpp"
#include "ncf/gauss_kuzmin.hpp"
#include "ncf/measure.hpp"
#include "ncf/random.hpp"
#include "ncf/rscc.hpp"
#include "ncf/transfer.hpp"

namespace ncf::cli {
namespace {

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::string command;
  std::int64_t n = 1;
  std::string x;
  std::string digits;
  double alpha = 0.5;
  double beta = 0.5;
  std::uint64_t seed = 0;
  std::optional<std::int64_t> grid;
  std::optional<std::int64_t> n_max;
  std::string mu = "lebesgue";
  std::string format = "json";
  std::string out_path;
  bool dot = false;
};

// Output is either a JSON document or CSV rows; both end up as text.
struct Output {
  Json json;
  std::string csv;
  std::string raw;  // used verbatim when set (DOT)
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string rational_text(const Rational& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << "/" << denominator(r);
  return os.str();
}

// "p/q" or a decimal literal, both converted exactly.
// Decimal only: cpp_int reads a leading 0 as octal and 0x as hex.
BigInt parse_integer(std::string text) {
  bool negative = false;
  if (!text.empty() && (text[0] == '+' || text[0] == '-')) {
    negative = text[0] == '-';
    text.erase(0, 1);
  }
  if (text.empty() || !std::all_of(text.begin(), text.end(),
                                   [](unsigned char c) { return std::isdigit(c); })) {
    throw DomainError("--x: not an integer: " + text);
  }
  const auto nz = text.find_first_not_of('0');
  const BigInt v(nz == std::string::npos ? std::string("0") : text.substr(nz));
  return negative ? BigInt(-v) : v;
}

Rational parse_rational(const std::string& text) {
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const BigInt p = parse_integer(text.substr(0, slash));
    const BigInt q = parse_integer(text.substr(slash + 1));
    if (q == 0) throw DomainError("--x: zero denominator");
    return Rational(p, q);
  }
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) negative = text[pos++] == '-';
  std::string mantissa;
  int scale = 0;
  bool seen_dot = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa += c;
      if (seen_dot) --scale;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    std::size_t used = 0;
    scale += std::stoi(text.substr(pos + 1), &used);
    pos += 1 + used;
  }
  if (mantissa.empty() || pos != text.size()) throw DomainError("--x: not a number: " + text);
  Rational r{parse_integer(mantissa)};
  BigInt ten = 1;
  for (int i = 0; i < std::abs(scale); ++i) ten *= 10;
  if (scale >= 0) {
    r *= ten;
  } else {
    r /= ten;
  }
  return negative ? -r : r;
}

std::vector<std::int64_t> parse_digit_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const long long v = std::stoll(item, &used);
    if (used != item.size()) throw DomainError("--digits: bad entry '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw DomainError("--digits: empty list");
  return out;
}

std::size_t positive(std::optional<std::int64_t> v, std::int64_t fallback, const char* flag) {
  const std::int64_t x = v.value_or(fallback);
  if (x < 1) throw DomainError(std::string(flag) + " must be >= 1");
  return static_cast<std::size_t>(x);
}

InitialMeasure parse_mu(const std::string& name, NcfParams params) {
  if (name == "lebesgue") return InitialMeasure::lebesgue();
  if (name == "linear") return InitialMeasure::linear();
  if (name == "gauss") return InitialMeasure::gauss(params);
  if (name.rfind("gauss", 0) == 0 && name.size() > 5) {
    return InitialMeasure::gauss(NcfParams(std::stoll(name.substr(5))));
  }
  throw DomainError("--mu: unknown measure '" + name + "' (lebesgue, linear, gauss, gaussK)");
}

Json header(const RunConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = c.command;
  return j;
}

// ---------------------------------------------------------------------------

Output run_expand(const RunConfig& c) {
  const NcfParams params(c.n);
  const Rational x = parse_rational(c.x);
  std::optional<std::size_t> max_len;
  if (c.n_max) max_len = positive(c.n_max, 64, "--nmax");
  const auto seq = digits(x, params, max_len);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["x"] = rational_text(x);
  o.json["digits"] = seq.digits;
  o.json["terminated"] = seq.terminated;
  o.csv = "k,digit\n";
  for (std::size_t k = 0; k < seq.digits.size(); ++k) {
    o.csv += std::to_string(k + 1) + "," + std::to_string(seq.digits[k]) + "\n";
  }
  return o;
}

Output run_eval(const RunConfig& c) {
  const NcfParams params(c.n);
  const DigitSequence seq{parse_digit_list(c.digits), true};
  const Rational value = evaluate(seq, params);
  const auto conv = convergents(seq, params);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["digits"] = seq.digits;
  o.json["value"] = rational_text(value);
  o.json["value_float"] = static_cast<double>(value);
  Json list = Json::array();
  o.csv = "k,convergent,float\n";
  for (std::size_t k = 0; k < conv.size(); ++k) {
    list.push_back(rational_text(conv[k]));
    o.csv += std::to_string(k + 1) + "," + rational_text(conv[k]) + "," +
             g17(static_cast<double>(conv[k])) + "\n";
  }
  o.json["convergents"] = std::move(list);
  return o;
}

Output run_digit_law(const RunConfig& c) {
  const NcfParams params(c.n);
  const GaussMeasure gm(params);
  const auto sys = make_ncf_rscc(params);
  const std::size_t count = positive(c.n_max, 20, "--nmax");
  constexpr std::size_t kSamples = 100'000;
  // Frequencies of the first digit over G_N draws.
  std::vector<std::size_t> hits(count, 0);
  UniformStream stream(c.seed, 0);
  for (std::size_t s = 0; s < kSamples; ++s) {
    const double y = gn_sample(stream, gm);
    if (y == 0.0) continue;
    const auto a1 = static_cast<std::int64_t>(std::floor(params.nd() / y));
    const std::int64_t slot = a1 - params.n();
    if (slot >= 0 && slot < static_cast<std::int64_t>(count)) ++hits[slot];
  }
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["seed"] = c.seed;
  o.json["samples"] = kSamples;
  Json rows = Json::array();
  o.csv = "i,law,quadrature,mc_frequency\n";
  for (std::size_t k = 0; k < count; ++k) {
    const std::int64_t i = params.n() + static_cast<std::int64_t>(k);
    const double law = digit_law(i, gm);
    const double quad = limit_path_law(sys, WordSet::single(i), gm);
    const double freq = static_cast<double>(hits[k]) / kSamples;
    rows.push_back({{"i", i}, {"law", law}, {"quadrature", quad}, {"mc_frequency", freq}});
    o.csv += std::to_string(i) + "," + g17(law) + "," + g17(quad) + "," + g17(freq) + "\n";
  }
  o.json["rows"] = std::move(rows);
  return o;
}

Output run_invariance(const RunConfig& c) {
  const NcfParams params(c.n);
  const GaussMeasure gm(params);
  const std::size_t probes = positive(c.grid, 64, "--grid");
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  Json rows = Json::array();
  double worst = 0.0;
  o.csv = "u,integral,cdf,error\n";
  for (std::size_t k = 1; k <= probes; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(probes);
    const double integral = kernel_invariance_integral(params, u);
    const double cdf = gn_cdf(u, gm);
    const double err = std::abs(integral - cdf);
    worst = std::max(worst, err);
    rows.push_back({{"u", u}, {"integral", integral}, {"cdf", cdf}, {"error", err}});
    o.csv += g17(u) + "," + g17(integral) + "," + g17(cdf) + "," + g17(err) + "\n";
  }
  o.json["max_error"] = worst;
  o.json["rows"] = std::move(rows);
  return o;
}

Output run_transfer(const RunConfig& c) {
  const NcfParams params(c.n);
  const GaussMeasure gm(params);
  const std::size_t m = positive(c.grid, 1024, "--grid");
  const int steps = static_cast<int>(positive(c.n_max, 1, "--nmax"));
  const auto one = apply_transfer(GridFunction::constant(1.0, m), params);
  double u1 = 0.0;
  for (double v : one.values()) u1 = std::max(u1, std::abs(v - 1.0));
  GridFunction f = GridFunction::sample([](double x) { return x; }, m);
  const double before = integrate_gn(f, gm);
  for (int k = 0; k < steps; ++k) f = apply_transfer(f, params);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["grid"] = m;
  o.json["steps"] = steps;
  o.json["truncation"] = transfer_truncation(params, m);
  o.json["unit_max_deviation"] = u1;
  o.json["adjoint_defect"] = std::abs(integrate_gn(f, gm) - before);
  o.json["values"] = std::vector<double>(f.values().begin(), f.values().end());
  o.csv = "j,x,value\n";
  for (std::size_t j = 0; j <= m; ++j) {
    o.csv += std::to_string(j) + "," + g17(f.node(j)) + "," + g17(f[j]) + "\n";
  }
  return o;
}

Output run_gap(const RunConfig& c) {
  const NcfParams params(c.n);
  const std::size_t m = positive(c.grid, 1024, "--grid");
  const int n_max = static_cast<int>(positive(c.n_max, 40, "--nmax"));
  const auto est = estimate_gap(GridFunction::sample([](double x) { return x; }, m), params, n_max);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["grid"] = m;
  o.json["q_hat"] = est.q_hat;
  o.json["k_hat"] = est.k_hat;
  o.json["c_f"] = est.c_f;
  o.json["drift"] = est.drift;
  o.json["floor"] = est.floor;
  o.json["fit_window"] = est.fit.n_values;
  o.json["residuals"] = est.fit.residuals;
  o.json["sup_errors"] = est.sup_errors;
  o.json["lipschitz_errors"] = est.lipschitz_errors;
  o.csv = "n,sup_error,lipschitz_error\n";
  for (std::size_t n = 0; n < est.sup_errors.size(); ++n) {
    o.csv += std::to_string(n) + "," + g17(est.sup_errors[n]) + "," +
             g17(est.lipschitz_errors[n]) + "\n";
  }
  return o;
}

Output run_gk(const RunConfig& c) {
  const NcfParams params(c.n);
  GkExperimentOptions options;
  options.gk.resolution = positive(c.grid, 1024, "--grid");
  options.gk.seed = c.seed;
  const int n_max = static_cast<int>(positive(c.n_max, 40, "--nmax"));
  const auto report = run_experiment(parse_mu(c.mu, params), params, n_max, options);
  Output o;
  o.json = header(c);
  o.json["seed"] = c.seed;
  const Json body = Json::parse(to_json(report));
  for (const auto& [key, value] : body.items()) o.json[key] = value;
  o.csv = to_csv(report);
  return o;
}

Output run_mealy(const RunConfig& c) {
  const MealySystem m(c.alpha, c.beta);
  Output o;
  if (c.dot) {
    o.raw = mealy_dot_export(m);
    return o;
  }
  const auto sys = make_mealy_rscc(m);
  const auto q = transition_matrix(sys);
  const int k_max = static_cast<int>(positive(c.n_max, 10, "--nmax"));
  auto rows = [](const SquareMatrix& a) {
    return Json::array({Json::array({a(0, 0), a(0, 1)}), Json::array({a(1, 0), a(1, 1)})});
  };
  o.json = header(c);
  o.json["alpha"] = c.alpha;
  o.json["beta"] = c.beta;
  o.json["q"] = rows(q);
  Json powers = Json::array();
  o.csv = "k,q11,q12,q21,q22\n";
  SquareMatrix power = q;
  for (int k = 1; k <= k_max; ++k) {
    powers.push_back(rows(power));
    o.csv += std::to_string(k) + "," + g17(power(0, 0)) + "," + g17(power(0, 1)) + "," +
             g17(power(1, 0)) + "," + g17(power(1, 1)) + "\n";
    power = power * q;
  }
  o.json["powers"] = std::move(powers);
  const double denom = 1.0 - m.alpha + m.beta;
  if (denom > 0.0) {
    o.json["stationary"] = {m.beta / denom, (1.0 - m.alpha) / denom};
  } else {
    o.json["stationary"] = nullptr;
  }
  Json cesaro = Json::array();
  for (double w : {1.0, 2.0}) {
    cesaro.push_back({q_cesaro(sys, k_max, w, TargetSet::points({1.0})).value,
                      q_cesaro(sys, k_max, w, TargetSet::points({2.0})).value});
  }
  o.json["cesaro"] = std::move(cesaro);
  return o;
}

Output run_contraction(const RunConfig& c) {
  const NcfParams params(c.n);
  ContractionOptions options;
  options.grid = positive(c.grid, 512, "--grid");
  options.k_max = static_cast<int>(positive(c.n_max, 3, "--nmax"));
  const auto r = contraction_coefficients(make_ncf_rscc(params), options);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["grid"] = options.grid;
  o.json["r_values"] = r.r_values;
  o.json["r_from_bound"] = r.r_from_bound;
  o.json["tail_bounds"] = r.tail_bounds;
  o.json["letters_per_position"] = r.letters_per_position;
  o.json["big_r"] = r.big_r;
  o.json["certified"] = r.certified;
  o.json["certified_at"] = r.certified_at ? Json(*r.certified_at) : Json(nullptr);
  o.csv = "k,r_k,from_bound,tail_bound,letters\n";
  for (std::size_t k = 0; k < r.r_values.size(); ++k) {
    o.csv += std::to_string(k + 1) + "," + g17(r.r_values[k]) + "," +
             (r.r_from_bound[k] ? "1" : "0") + "," + g17(r.tail_bounds[k]) + "," +
             std::to_string(r.letters_per_position[k]) + "\n";
  }
  return o;
}

Output run_regularity(const RunConfig& c) {
  const NcfParams params(c.n);
  const int n_max = static_cast<int>(positive(c.n_max, 200, "--nmax"));
  std::vector<double> starts;
  for (int k = 0; k < 8; ++k) starts.push_back(k / 7.0);
  const auto r = regularity_witness(params, starts, n_max);
  Output o;
  o.json = header(c);
  o.json["n"] = c.n;
  o.json["x_star"] = r.x_star;
  o.json["predicted_ratio"] = r.predicted_ratio;
  Json curves = Json::array();
  o.csv = "start,n,distance\n";
  for (const auto& curve : r.curves) {
    curves.push_back({{"start", curve.start},
                      {"reached_at", curve.reached_at ? Json(*curve.reached_at) : Json(nullptr)},
                      {"monotone", curve.monotone},
                      {"asymptotic_ratio", curve.asymptotic_ratio},
                      {"final_distance", curve.distances.back()}});
    for (std::size_t n = 0; n < curve.distances.size(); ++n) {
      o.csv += g17(curve.start) + "," + std::to_string(n) + "," + g17(curve.distances[n]) + "\n";
    }
  }
  o.json["curves"] = std::move(curves);
  return o;
}

void emit(const RunConfig& c, const Output& o, std::ostream& out) {
  std::string text;
  if (!o.raw.empty()) {
    text = o.raw;
  } else if (c.format == "csv") {
    text = o.csv;
  } else {
    text = o.json.dump(2) + "\n";
  }
  if (c.out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(c.out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open " + c.out_path + " for writing");
  file << text;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"N-continued fractions, their invariant measure and transfer operator"};
  app.name("ncf");
  app.require_subcommand(1);

  using Runner = std::function<Output(const RunConfig&)>;
  std::vector<std::pair<CLI::App*, Runner>> commands;
  auto add = [&](const char* name, const char* about, Runner run) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--n", c.n, "N >= 1");
    sub->add_option("--seed", c.seed, "seed for every stochastic step");
    sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", c.out_path, "write here instead of stdout");
    commands.emplace_back(sub, std::move(run));
    return sub;
  };

  auto* expand = add("expand", "digits of x", run_expand);
  expand->add_option("--x", c.x, "real or p/q in (0,1]")->required();
  expand->add_option("--nmax", c.n_max, "maximum number of digits");

  auto* eval = add("eval", "evaluate a digit list exactly", run_eval);
  eval->add_option("--digits", c.digits, "comma-separated digits")->required();

  auto* law = add("digit-law", "first-digit law under G_N", run_digit_law);
  law->add_option("--nmax", c.n_max, "number of digits listed");

  auto* inv = add("invariance", "integral of Q(x,[0,u)) against G_N", run_invariance);
  inv->add_option("--grid", c.grid, "number of probes u");

  auto* transfer = add("transfer", "U^n applied to f(x) = x", run_transfer);
  transfer->add_option("--grid", c.grid, "resolution M");
  transfer->add_option("--nmax", c.n_max, "number of applications");

  auto* gap = add("gap", "geometric rate of U^n f for f(x) = x", run_gap);
  gap->add_option("--grid", c.grid, "resolution M");
  gap->add_option("--nmax", c.n_max, "iterations");

  auto* gk = add("gk", "Gauss-Kuzmin experiment", run_gk);
  gk->add_option("--mu", c.mu, "lebesgue, linear, gauss or gaussK");
  gk->add_option("--grid", c.grid, "resolution M");
  gk->add_option("--nmax", c.n_max, "iterations");

  auto* mealy = add("rscc-mealy", "two-state Mealy chain", run_mealy);
  mealy->add_option("--alpha", c.alpha, "P(1,1)");
  mealy->add_option("--beta", c.beta, "P(2,1)");
  mealy->add_option("--nmax", c.n_max, "largest power listed");
  mealy->add_flag("--dot", c.dot, "emit the transition diagram as DOT");

  auto* contraction = add("contraction", "contraction coefficients r_k and R", run_contraction);
  contraction->add_option("--grid", c.grid, "state grid resolution");
  contraction->add_option("--nmax", c.n_max, "k_max");

  auto* regularity = add("regularity", "orbit of the event N toward x*", run_regularity);
  regularity->add_option("--nmax", c.n_max, "orbit length");

  std::vector<std::string> owned{"ncf"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ncf: " << e.what() << "\n";
    return kUsage;
  }

  try {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) {
        c.command = sub->get_name();
        emit(c, run(c), out);
        return kOk;
      }
    }
  } catch (const BudgetError& e) {
    err << "ncf: budget: " << e.what() << "\n";
    return kBudget;
  } catch (const FitError& e) {
    err << "ncf: fit: " << e.what() << "\n";
    return kFit;
  } catch (const DomainError& e) {
    err << "ncf: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "ncf: bad argument: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "ncf: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace ncf::cli
