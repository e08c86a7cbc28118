/*
 * Copyright 2026 The LongHorizon Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "longhorizon/sim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "longhorizon/csv.hpp"
#include "longhorizon/error.hpp"
#include "longhorizon/parallel.hpp"
#include "longhorizon/rng.hpp"
#include "longhorizon/stats.hpp"
#include "longhorizon/surrogate.hpp"

namespace longhorizon {

// ---- Enum text ------------------------------------------------------------------

std::string_view ToString(DgpFamily v) { return v == DgpFamily::kStructural ? "structural" : "subscriber"; }
std::string_view ToString(EffectProfile v) {
  return v == EffectProfile::kBimodalGap ? "bimodal_gap" : "continuous_near_zero";
}
std::string_view ToString(DesignKind v) { return v == DesignKind::kCovariate ? "covariate" : "uniform"; }
std::string_view ToString(SurrogateSet v) {
  switch (v) {
    case SurrogateSet::kBoth:
      return "both";
    case SurrogateSet::kRevenue:
      return "revenue";
    case SurrogateSet::kConsumption:
      return "consumption";
  }
  return "both";
}

DgpFamily ParseDgpFamily(std::string_view t) {
  if (t == "structural") return DgpFamily::kStructural;
  if (t == "subscriber") return DgpFamily::kSubscriber;
  throw ArgumentError("unknown DGP family '" + std::string(t) + "'");
}
EffectProfile ParseEffectProfile(std::string_view t) {
  if (t == "bimodal_gap") return EffectProfile::kBimodalGap;
  if (t == "continuous_near_zero") return EffectProfile::kContinuousNearZero;
  throw ArgumentError("unknown effect profile '" + std::string(t) + "'");
}
DesignKind ParseDesignKind(std::string_view t) {
  if (t == "covariate" || t == "design") return DesignKind::kCovariate;
  if (t == "uniform") return DesignKind::kUniform;
  throw ArgumentError("unknown design '" + std::string(t) + "'");
}
SurrogateSet ParseSurrogateSet(std::string_view t) {
  if (t == "both") return SurrogateSet::kBoth;
  if (t == "revenue") return SurrogateSet::kRevenue;
  if (t == "consumption") return SurrogateSet::kConsumption;
  throw ArgumentError("unknown surrogate set '" + std::string(t) + "'");
}

void DgpConfig::Validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ArgumentError(std::string("DGP config: ") + what);
  };
  require(n_units >= 2, "n_units must be >= 2");
  require(n_historical >= 2, "n_historical must be >= 2");
  require(k_actions >= 2, "k_actions must be >= 2");
  require(dim_x >= 2, "dim_x must be >= 2");
  require(min_gap >= 0.0, "min_gap must be >= 0");
  require(surrogacy_violation >= 0.0, "surrogacy_violation must be >= 0");
  require(confounder_strength >= 0.0, "confounder_strength must be >= 0");
  require(comparability_drift >= 0.0, "comparability_drift must be >= 0");
  require(noise_s >= 0.0 && noise_y >= 0.0, "noise scales must be >= 0");
  if (family == DgpFamily::kStructural) {
    require(dim_s >= 1, "dim_s must be >= 1");
  } else {
    require(k_actions == 2, "the subscriber panel has exactly two actions");
    require(n_periods >= 1, "n_periods must be >= 1");
    require(discount_periods >= 0 && discount_periods <= n_periods, "discount_periods must be in [0, n_periods]");
    require(horizon >= 1 && horizon <= n_periods, "horizon must be within 1..n_periods");
    require(discount_cost >= 0.0, "discount_cost must be >= 0");
  }
}

// ---- Shared helpers -------------------------------------------------------------------

namespace {

const std::vector<std::string>& SegmentLevels() {
  static const std::vector<std::string> kLevels{"s0", "s1", "s2"};
  return kLevels;
}

int DrawSegment(Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return u < 0.4 ? 0 : (u < 0.75 ? 1 : 2);
}

Table CovariateTable(const Matrix& x, const std::vector<int>& segment) {
  std::vector<Column> cols;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::vector<double> v(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) v[i] = x(i, j);
    cols.push_back(Column::Float("x" + std::to_string(j), std::move(v)));
  }
  cols.push_back(Column::Categorical("segment", segment, SegmentLevels()));
  return Table(std::move(cols));
}

Table SurrogateTable(const Matrix& s, const std::vector<std::string>& names) {
  std::vector<Column> cols;
  for (std::size_t j = 0; j < s.cols(); ++j) {
    std::vector<double> v(s.rows());
    for (std::size_t i = 0; i < s.rows(); ++i) v[i] = s(i, j);
    cols.push_back(Column::Float(names[j], std::move(v)));
  }
  return Table(std::move(cols));
}

double Logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Design propensities for one unit.
std::vector<double> DesignRow(const DgpConfig& cfg, const StructuralCoefficients* coef,
                              std::span<const double> x) {
  const auto k = static_cast<std::size_t>(cfg.k_actions);
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  if (cfg.design == DesignKind::kUniform) return p;
  if (k == 2) {
    const double p1 = std::clamp(Logistic(0.6 * x[0] - 0.4 * x[1]), 0.15, 0.85);
    return {1.0 - p1, p1};
  }
  std::vector<double> logits(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t j = 0; j < x.size(); ++j) logits[a] += coef->design_weights(a, j) * x[j];
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (std::size_t a = 0; a < k; ++a) p[a] = 0.7 * logits[a] / z + 0.3 / static_cast<double>(k);
  return p;
}

int DrawAction(Rng& rng, std::span<const double> p) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    acc += p[a];
    if (u < acc) return static_cast<int>(a);
  }
  return static_cast<int>(p.size()) - 1;
}

void FinishOracle(SimData& sim) {
  const std::size_t n = sim.potential_outcomes.rows();
  const std::size_t k = sim.potential_outcomes.cols();
  sim.oracle_cates = Matrix(n, k, 0.0);
  sim.oracle_policy.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t a = 0; a < k; ++a) {
      sim.oracle_cates(i, a) = sim.potential_outcomes(i, a) - sim.potential_outcomes(i, 0);
      if (sim.potential_outcomes(i, a) > sim.potential_outcomes(i, best)) best = a;
    }
    sim.oracle_policy[i] = static_cast<int>(best);
  }
}

// ---- Structural family -------------------------------------------------------------------

StructuralCoefficients DrawStructural(const DgpConfig& cfg) {
  Rng rng(DeriveSeed(cfg.coefficient_seed.value_or(cfg.seed), "coefficients"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto dx = static_cast<std::size_t>(cfg.dim_x);
  const auto ds = static_cast<std::size_t>(cfg.dim_s);
  const auto k = static_cast<std::size_t>(cfg.k_actions);
  StructuralCoefficients c;
  c.base = Matrix(ds, dx);
  for (auto& v : c.base.data()) v = 0.5 * gauss(rng);
  c.kink.resize(ds);
  for (auto& v : c.kink) v = 0.5 + 0.5 * unif(rng);
  c.segment_s = Matrix(ds, 3);
  for (auto& v : c.segment_s.data()) v = 0.5 * gauss(rng);
  c.loading.resize(ds);
  for (auto& v : c.loading) v = 0.5 + unif(rng);
  c.beta.resize(ds);
  for (auto& v : c.beta) v = 0.5 + unif(rng);
  double norm2 = 0.0;
  for (double b : c.beta) norm2 += b * b;
  c.effect_direction.resize(ds);
  for (std::size_t j = 0; j < ds; ++j) c.effect_direction[j] = c.beta[j] / norm2;
  c.theta.resize(dx);
  for (auto& v : c.theta) v = 0.5 * gauss(rng);
  c.segment_y.resize(3);
  for (auto& v : c.segment_y) v = 0.5 * gauss(rng);
  c.thresholds.resize(k - 1);
  for (std::size_t a = 1; a < k; ++a) {
    c.thresholds[a - 1] = k == 2 ? 0.0 : -0.5 + static_cast<double>(a - 1) / static_cast<double>(k - 2);
  }
  c.design_weights = Matrix(k, dx, 0.0);
  for (std::size_t a = 1; a < k; ++a)
    for (std::size_t j = 0; j < dx; ++j) c.design_weights(a, j) = 0.5 * gauss(rng);
  return c;
}

// Effect of action a >= 1 on the surrogates along the effect direction; this
// equals the oracle surrogate-index CATE when the outcome is linear.
double StructuralEffect(const DgpConfig& cfg, const StructuralCoefficients& c, std::span<const double> x,
                        int segment, int a) {
  if (a == 0) return 0.0;
  const auto dx = x.size();
  const std::size_t j = static_cast<std::size_t>(a - 1) % dx;
  if (cfg.effect_profile == EffectProfile::kContinuousNearZero) {
    return 0.8 * x[j] - 0.1 * static_cast<double>(a - 1);
  }
  const bool positive = x[j] > c.thresholds[static_cast<std::size_t>(a - 1)] && segment != 2;
  const double magnitude = cfg.min_gap + 0.5 * std::abs(x[(j + 1) % dx]);
  return positive ? magnitude : -magnitude;
}

struct StructuralUnit {
  std::vector<double> x;
  int segment = 0;
  double u = 0.0;
  std::vector<double> xi;
  double eps = 0.0;
};

StructuralUnit DrawStructuralUnit(const DgpConfig& cfg, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  StructuralUnit unit;
  unit.x.resize(static_cast<std::size_t>(cfg.dim_x));
  for (auto& v : unit.x) v = gauss(rng);
  unit.segment = DrawSegment(rng);
  unit.u = gauss(rng);
  unit.xi.resize(static_cast<std::size_t>(cfg.dim_s));
  for (auto& v : unit.xi) v = gauss(rng);
  unit.eps = gauss(rng);
  return unit;
}

void StructuralSurrogates(const DgpConfig& cfg, const StructuralCoefficients& c, const StructuralUnit& unit,
                          int a, std::span<double> s) {
  const double effect = StructuralEffect(cfg, c, unit.x, unit.segment, a);
  const auto dx = unit.x.size();
  for (std::size_t j = 0; j < s.size(); ++j) {
    double m = c.kink[j] * std::max(0.0, unit.x[j % dx]) + c.segment_s(j, static_cast<std::size_t>(unit.segment));
    for (std::size_t k = 0; k < dx; ++k) m += c.base(j, k) * unit.x[k];
    s[j] = m + cfg.confounder_strength * c.loading[j] * unit.u + c.effect_direction[j] * effect +
           cfg.noise_s * unit.xi[j];
  }
}

double StructuralIndex(const DgpConfig& cfg, const StructuralCoefficients& c, const StructuralUnit& unit,
                       std::span<const double> s) {
  double h = c.segment_y[static_cast<std::size_t>(unit.segment)];
  for (std::size_t j = 0; j < s.size(); ++j) h += c.beta[j] * s[j];
  for (std::size_t k = 0; k < unit.x.size(); ++k) h += c.theta[k] * unit.x[k];
  if (cfg.nonlinear_outcome) h += 0.5 * std::max(0.0, s[0]);
  return h;
}

void GenerateStructural(const DgpConfig& cfg, SimData& sim) {
  sim.coefficients = DrawStructural(cfg);
  const auto& c = sim.coefficients;
  const std::size_t n = cfg.n_units;
  const auto k = static_cast<std::size_t>(cfg.k_actions);
  const auto ds = static_cast<std::size_t>(cfg.dim_s);
  const auto dx = static_cast<std::size_t>(cfg.dim_x);
  std::vector<std::string> s_names;
  for (std::size_t j = 0; j < ds; ++j) s_names.push_back("s" + std::to_string(j));

  Rng rng_exp(DeriveSeed(cfg.seed, "experiment"));
  Rng rng_assign(DeriveSeed(cfg.seed, "assignment"));
  Matrix x(n, dx);
  std::vector<int> segment(n);
  sim.potential_outcomes = Matrix(n, k);
  sim.potential_surrogates.assign(k, Matrix(n, ds));
  sim.oracle_index = Matrix(n, k);
  sim.experiment.propensities = Matrix(n, k);
  sim.experiment.actions.resize(n);
  sim.design_treat_probability.assign(n, 0.0);
  Matrix realised_s(n, ds);
  sim.outcomes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const StructuralUnit unit = DrawStructuralUnit(cfg, rng_exp);
    std::copy(unit.x.begin(), unit.x.end(), x.row(i).begin());
    segment[i] = unit.segment;
    for (std::size_t a = 0; a < k; ++a) {
      auto s = sim.potential_surrogates[a].row(i);
      StructuralSurrogates(cfg, c, unit, static_cast<int>(a), s);
      const double h = StructuralIndex(cfg, c, unit, s);
      sim.oracle_index(i, a) = h + cfg.comparability_drift * s[0];
      sim.potential_outcomes(i, a) =
          h - (a >= 1 ? cfg.surrogacy_violation : 0.0) + cfg.noise_y * unit.eps;
    }
    const auto p = DesignRow(cfg, &c, unit.x);
    std::copy(p.begin(), p.end(), sim.experiment.propensities.row(i).begin());
    sim.design_treat_probability[i] = k == 2 ? p[1] : 1.0 - p[0];
    const int a = DrawAction(rng_assign, p);
    sim.experiment.actions[i] = a;
    const auto s = sim.potential_surrogates[static_cast<std::size_t>(a)].row(i);
    std::copy(s.begin(), s.end(), realised_s.row(i).begin());
    sim.outcomes[i] = sim.potential_outcomes(i, static_cast<std::size_t>(a));
  }
  sim.experiment.n_actions = cfg.k_actions;
  sim.experiment.unit_ids.resize(n);
  std::iota(sim.experiment.unit_ids.begin(), sim.experiment.unit_ids.end(), std::int64_t{0});
  sim.experiment.features = CovariateTable(x, segment);
  sim.experiment.surrogates = SurrogateTable(realised_s, s_names);

  Rng rng_hist(DeriveSeed(cfg.seed, "historical"));
  const std::size_t nh = cfg.n_historical;
  Matrix hx(nh, dx);
  Matrix hs(nh, ds);
  std::vector<int> hseg(nh);
  sim.historical.outcomes.resize(nh);
  for (std::size_t i = 0; i < nh; ++i) {
    const StructuralUnit unit = DrawStructuralUnit(cfg, rng_hist);
    std::copy(unit.x.begin(), unit.x.end(), hx.row(i).begin());
    hseg[i] = unit.segment;
    auto s = hs.row(i);
    StructuralSurrogates(cfg, c, unit, 0, s);
    sim.historical.outcomes[i] =
        StructuralIndex(cfg, c, unit, s) + cfg.comparability_drift * s[0] + cfg.noise_y * unit.eps;
  }
  sim.historical.unit_ids.resize(nh);
  std::iota(sim.historical.unit_ids.begin(), sim.historical.unit_ids.end(), static_cast<std::int64_t>(n));
  sim.historical.features = CovariateTable(hx, hseg);
  sim.historical.surrogates = SurrogateTable(hs, s_names);
}

// ---- Subscriber family ---------------------------------------------------------------------

struct SubscriberUnit {
  std::vector<double> x;
  int segment = 0;
  double u = 0.0;
  std::vector<double> nu;  // consumption noise per month
  std::vector<double> eps;  // revenue noise per month
};

SubscriberUnit DrawSubscriberUnit(const DgpConfig& cfg, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  SubscriberUnit unit;
  unit.x.resize(static_cast<std::size_t>(cfg.dim_x));
  for (auto& v : unit.x) v = gauss(rng);
  unit.segment = DrawSegment(rng);
  unit.u = gauss(rng);
  unit.nu.resize(static_cast<std::size_t>(cfg.n_periods));
  unit.eps.resize(static_cast<std::size_t>(cfg.n_periods));
  for (std::size_t t = 0; t < unit.nu.size(); ++t) {
    unit.nu[t] = gauss(rng);
    unit.eps[t] = gauss(rng);
  }
  return unit;
}

struct SubscriberPath {
  double revenue_h = 0.0;
  double consumption_h = 0.0;
  double total = 0.0;
};

SubscriberPath SimulateSubscriber(const DgpConfig& cfg, const SubscriberUnit& unit, int a) {
  double uplift = 0.0;
  if (a == 1) {
    uplift = cfg.effect_profile == EffectProfile::kBimodalGap ? (unit.x[0] > 0.0 ? 0.4 : -0.5)
                                                               : 0.3 * unit.x[0];
  }
  const double engagement = 1.0 + 0.3 * unit.x[1] + cfg.confounder_strength * unit.u + uplift;
  const double base = 2.0 + 0.5 * unit.x[0] + 0.25 * static_cast<double>(unit.segment);
  SubscriberPath path;
  double revenue = 0.0;
  double consumption = 0.0;
  for (int t = 1; t <= cfg.n_periods; ++t) {
    const auto ti = static_cast<std::size_t>(t - 1);
    double r = base + engagement + cfg.noise_y * unit.eps[ti];
    if (a == 1) r -= t <= cfg.discount_periods ? cfg.discount_cost : cfg.surrogacy_violation;
    revenue += r;
    consumption += engagement + cfg.noise_s * unit.nu[ti];
    if (t == cfg.horizon) {
      path.revenue_h = revenue;
      path.consumption_h = consumption;
    }
  }
  path.total = revenue;
  return path;
}

std::vector<std::string> SubscriberSurrogateNames(SurrogateSet set) {
  switch (set) {
    case SurrogateSet::kBoth:
      return {"revenue", "consumption"};
    case SurrogateSet::kRevenue:
      return {"revenue"};
    case SurrogateSet::kConsumption:
      return {"consumption"};
  }
  return {};
}

void FillSurrogateRow(SurrogateSet set, const SubscriberPath& p, std::span<double> row) {
  switch (set) {
    case SurrogateSet::kBoth:
      row[0] = p.revenue_h;
      row[1] = p.consumption_h;
      break;
    case SurrogateSet::kRevenue:
      row[0] = p.revenue_h;
      break;
    case SurrogateSet::kConsumption:
      row[0] = p.consumption_h;
      break;
  }
}

void GenerateSubscriber(const DgpConfig& cfg, SimData& sim) {
  const std::size_t n = cfg.n_units;
  const auto dx = static_cast<std::size_t>(cfg.dim_x);
  const auto names = SubscriberSurrogateNames(cfg.surrogate_set);
  const std::size_t ds = names.size();
  Rng rng_exp(DeriveSeed(cfg.seed, "experiment"));
  Rng rng_assign(DeriveSeed(cfg.seed, "assignment"));
  Matrix x(n, dx);
  std::vector<int> segment(n);
  Matrix realised_s(n, ds);
  sim.potential_outcomes = Matrix(n, 2);
  sim.potential_surrogates.assign(2, Matrix(n, ds));
  sim.experiment.propensities = Matrix(n, 2);
  sim.experiment.actions.resize(n);
  sim.design_treat_probability.resize(n);
  sim.outcomes.resize(n);
  sim.proxy.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SubscriberUnit unit = DrawSubscriberUnit(cfg, rng_exp);
    std::copy(unit.x.begin(), unit.x.end(), x.row(i).begin());
    segment[i] = unit.segment;
    SubscriberPath paths[2] = {SimulateSubscriber(cfg, unit, 0), SimulateSubscriber(cfg, unit, 1)};
    for (std::size_t a = 0; a < 2; ++a) {
      sim.potential_outcomes(i, a) = paths[a].total;
      FillSurrogateRow(cfg.surrogate_set, paths[a], sim.potential_surrogates[a].row(i));
    }
    const auto p = DesignRow(cfg, nullptr, unit.x);
    std::copy(p.begin(), p.end(), sim.experiment.propensities.row(i).begin());
    sim.design_treat_probability[i] = p[1];
    const int a = DrawAction(rng_assign, p);
    sim.experiment.actions[i] = a;
    const auto s = sim.potential_surrogates[static_cast<std::size_t>(a)].row(i);
    std::copy(s.begin(), s.end(), realised_s.row(i).begin());
    sim.outcomes[i] = paths[a].total;
    sim.proxy[i] = paths[a].revenue_h;
  }
  sim.experiment.n_actions = 2;
  sim.experiment.unit_ids.resize(n);
  std::iota(sim.experiment.unit_ids.begin(), sim.experiment.unit_ids.end(), std::int64_t{0});
  sim.experiment.features = CovariateTable(x, segment);
  sim.experiment.surrogates = SurrogateTable(realised_s, names);

  Rng rng_hist(DeriveSeed(cfg.seed, "historical"));
  const std::size_t nh = cfg.n_historical;
  Matrix hx(nh, dx);
  Matrix hs(nh, ds);
  std::vector<int> hseg(nh);
  sim.historical.outcomes.resize(nh);
  for (std::size_t i = 0; i < nh; ++i) {
    const SubscriberUnit unit = DrawSubscriberUnit(cfg, rng_hist);
    std::copy(unit.x.begin(), unit.x.end(), hx.row(i).begin());
    hseg[i] = unit.segment;
    const SubscriberPath path = SimulateSubscriber(cfg, unit, 0);
    FillSurrogateRow(cfg.surrogate_set, path, hs.row(i));
    sim.historical.outcomes[i] = path.total + cfg.comparability_drift * hs(i, 0);
  }
  sim.historical.unit_ids.resize(nh);
  std::iota(sim.historical.unit_ids.begin(), sim.historical.unit_ids.end(), static_cast<std::int64_t>(n));
  sim.historical.features = CovariateTable(hx, hseg);
  sim.historical.surrogates = SurrogateTable(hs, names);
}

}  // namespace

SimData Generate(const DgpConfig& config) {
  config.Validate();
  SimData sim;
  sim.config = config;
  if (config.family == DgpFamily::kStructural) {
    GenerateStructural(config, sim);
  } else {
    GenerateSubscriber(config, sim);
  }
  FinishOracle(sim);
  sim.experiment.Validate();
  sim.historical.Validate();
  return sim;
}

double TruePolicyValue(const SimData& sim, const PolicySnapshot& target) {
  const auto& y = sim.potential_outcomes;
  if (target.probs.rows() != y.rows() || target.probs.cols() != y.cols()) {
    throw ArgumentError("policy snapshot does not align with the simulated units");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double row = 0.0;
    for (std::size_t a = 0; a < y.cols(); ++a) row += target.probs(i, a) * y(i, a);
    total += row;
  }
  return total / static_cast<double>(y.rows());
}

std::vector<double> ConditionalBiasBounds(const SimData& sim) {
  const auto& cfg = sim.config;
  if (cfg.family != DgpFamily::kStructural || cfg.k_actions != 2 || cfg.nonlinear_outcome) {
    throw ArgumentError("conditional bias bounds need the linear structural DGP with two actions");
  }
  const auto& c = sim.coefficients;
  const auto ds = static_cast<Eigen::Index>(cfg.dim_s);
  Eigen::VectorXd lambda(ds), beta(ds), w(ds);
  for (Eigen::Index j = 0; j < ds; ++j) {
    lambda(j) = c.loading[static_cast<std::size_t>(j)];
    beta(j) = c.beta[static_cast<std::size_t>(j)];
    w(j) = c.effect_direction[static_cast<std::size_t>(j)];
  }
  const double cs = cfg.confounder_strength;
  const Eigen::MatrixXd base_var = cs * cs * lambda * lambda.transpose() +
                                   cfg.noise_s * cfg.noise_s * Eigen::MatrixXd::Identity(ds, ds);
  const auto& features = sim.experiment.features;
  const Column& seg = features.column("segment");
  std::vector<double> out(sim.experiment.size());
  std::vector<double> x(static_cast<std::size_t>(cfg.dim_x));
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = features.column(j)[i];
    const double effect = StructuralEffect(cfg, c, x, static_cast<int>(seg[i]), 1);
    const double p = sim.experiment.propensity(i, 1);
    const double v = p * (1.0 - p);
    const Eigen::MatrixXd var_s = base_var + v * effect * effect * w * w.transpose();
    const Eigen::VectorXd cov_sa = v * effect * w;
    const double delta = cfg.surrogacy_violation;
    const Eigen::VectorXd cov_sy = var_s * beta - delta * cov_sa;
    const double var_y = beta.dot(var_s * beta) - 2.0 * delta * beta.dot(cov_sa) + delta * delta * v +
                         cfg.noise_y * cfg.noise_y;
    const auto ldlt = var_s.ldlt();
    const double explained_y = cov_sy.dot(ldlt.solve(cov_sy));
    const double explained_a = cov_sa.dot(ldlt.solve(cov_sa));
    const double r2_y = std::clamp(explained_y / var_y, 0.0, 1.0);
    const double r2_a = std::clamp(explained_a / v, 0.0, 1.0);
    out[i] = std::sqrt(var_y / v * (1.0 - r2_y) * (1.0 - r2_a));
  }
  return out;
}

void WriteGroundTruth(const SimData& sim, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  std::vector<std::string> header{"unit_id"};
  for (std::size_t a = 0; a < sim.potential_outcomes.cols(); ++a) header.push_back("y_a" + std::to_string(a));
  header.emplace_back("oracle_action");
  WriteCsvRow(out, header);
  std::vector<std::string> cells;
  for (std::size_t i = 0; i < sim.potential_outcomes.rows(); ++i) {
    cells.clear();
    cells.push_back(std::to_string(sim.experiment.unit_ids[i]));
    for (double y : sim.potential_outcomes.row(i)) cells.push_back(FormatDouble(y));
    cells.push_back(std::to_string(sim.oracle_policy[i]));
    WriteCsvRow(out, cells);
  }
}

// ---- Churn simulations ------------------------------------------------------------------

ChurnPanel SyntheticChurnPanel(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChurnPanel panel;
  panel.risk.resize(n);
  panel.churn.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::clamp(Logistic(-1.75 + 1.1 * gauss(rng)), 1e-4, 1.0 - 1e-4);
    panel.risk[i] = r;
    panel.churn[i] = unif(rng) < r ? 1.0 : 0.0;
  }
  return panel;
}

void PowerConfig::Validate() const {
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("power: q must be in (0, 1)");
  if (!(tau_effect >= 0.0 && tau_effect <= 1.0)) throw ArgumentError("power: tau_effect must be in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("power: alpha must be in (0, 1)");
  if (n_reps < 1) throw ArgumentError("power: n_reps must be >= 1");
  if (assignment == DesignKind::kCovariate) {
    design.Validate();
    if (q >= design.cap) throw ArgumentError("power: q must be below the design cap");
  }
}

double CalibrateDesignThreshold(std::span<const double> risk, double q, double sigma, double cap) {
  if (risk.empty()) throw ArgumentError("threshold calibration needs risk scores");
  if (!(q > 0.0 && q < cap)) throw ArgumentError("target treated fraction must be in (0, cap)");
  auto mean_p = [&](double t) {
    double s = 0.0;
    for (double r : risk) s += std::min(cap, stats::NormalCdf((r - t) / sigma));
    return s / static_cast<double>(risk.size());
  };
  const auto [mn, mx] = std::minmax_element(risk.begin(), risk.end());
  double lo = *mn - 40.0 * sigma;  // mean_p(lo) = cap > q
  double hi = *mx + 40.0 * sigma;  // mean_p(hi) ~ 0 < q
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_p(mid) > q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

std::vector<double> PowerAssignment(std::span<const double> risk, const PowerConfig& config) {
  std::vector<double> p(risk.size(), config.q);
  if (config.assignment == DesignKind::kCovariate) {
    const double t = CalibrateDesignThreshold(risk, config.q, config.design.sigma, config.design.cap);
    for (std::size_t i = 0; i < risk.size(); ++i) {
      p[i] = std::clamp(std::min(config.design.cap, stats::NormalCdf((risk[i] - t) / config.design.sigma)),
                        kDesignPolicyFloor, 1.0 - kDesignPolicyFloor);
    }
  }
  return p;
}

}  // namespace

PowerCell PowerSimulation(std::span<const double> base_outcomes, std::span<const double> risk,
                          const PowerConfig& config, std::uint64_t seed) {
  const std::vector<double> taus{config.tau_effect};
  return PowerGrid(base_outcomes, risk, taus, config, seed).front();
}

std::vector<PowerCell> PowerGrid(std::span<const double> base_outcomes, std::span<const double> risk,
                                 std::span<const double> taus, const PowerConfig& config,
                                 std::uint64_t seed) {
  config.Validate();
  const std::size_t n = base_outcomes.size();
  if (risk.size() != n) throw ArgumentError("power: risk and outcomes differ in length");
  bool any_churn = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (base_outcomes[i] != 0.0 && base_outcomes[i] != 1.0) throw ArgumentError("power: Y(0) must be 0 or 1");
    if (!(risk[i] > 0.0 && risk[i] < 1.0)) throw ArgumentError("power: risk must be in (0, 1)");
    any_churn = any_churn || base_outcomes[i] == 1.0;
  }
  if (!any_churn) throw ArgumentError("power undefined: no unit churns under control");
  for (double t : taus) {
    if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("power: tau_effect must be in [0, 1]");
  }
  const auto p = PowerAssignment(risk, config);
  std::vector<double> q_not(n);
  for (std::size_t i = 0; i < n; ++i) q_not[i] = 1.0 - p[i];
  const double z_crit = stats::NormalQuantile(1.0 - config.alpha / 2.0);
  const auto reps = static_cast<std::size_t>(config.n_reps);
  const std::size_t n_tau = taus.size();
  // Per rep and tau: significant flag, estimate, true ATT, treated share.
  std::vector<double> sig(reps * n_tau), est(reps * n_tau), truth(reps * n_tau), treated(reps);
  parallel::ForEach(reps, [&](std::size_t r) {
    Rng rng(DeriveSeed(seed, r));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u_flip(n);
    std::vector<int> actions(n);
    std::size_t n_treated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      u_flip[i] = unif(rng);
      actions[i] = unif(rng) < p[i] ? 1 : 0;
      n_treated += static_cast<std::size_t>(actions[i]);
    }
    treated[r] = static_cast<double>(n_treated) / static_cast<double>(n);
    std::vector<double> y(n);
    for (std::size_t t = 0; t < n_tau; ++t) {
      double effect_sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double y1 = base_outcomes[i] == 1.0 && u_flip[i] < taus[t] ? 0.0 : base_outcomes[i];
        y[i] = actions[i] == 1 ? y1 : base_outcomes[i];
        if (actions[i] == 1) effect_sum += y1 - base_outcomes[i];
      }
      const std::size_t slot = r * n_tau + t;
      truth[slot] = n_treated > 0 ? effect_sum / static_cast<double>(n_treated) : 0.0;
      try {
        const auto v = EstimateContrast(actions, p, q_not, y, 1, 0, Estimand::kAtt);
        est[slot] = v.point;
        const double se = v.std_error.value_or(0.0);
        sig[slot] = se > 0.0 && std::abs(v.point / se) > z_crit ? 1.0 : 0.0;
      } catch (const DataError&) {
        est[slot] = 0.0;  // no treated or no control units: not significant
        sig[slot] = 0.0;
      }
    }
  });
  std::vector<PowerCell> cells(n_tau);
  for (std::size_t t = 0; t < n_tau; ++t) {
    PowerCell& cell = cells[t];
    cell.q = config.q;
    cell.tau_effect = taus[t];
    cell.assignment = config.assignment;
    cell.n_reps = config.n_reps;
    double s = 0.0, e = 0.0, tr = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
      s += sig[r * n_tau + t];
      e += est[r * n_tau + t];
      tr += truth[r * n_tau + t];
    }
    cell.n_significant = static_cast<int>(s);
    cell.power = s / static_cast<double>(reps);
    cell.mean_estimate = e / static_cast<double>(reps);
    cell.mean_true_att = tr / static_cast<double>(reps);
    cell.mean_treated_fraction = stats::Mean(treated);
  }
  return cells;
}

DesignVsUniformReport DesignVsUniform(std::span<const double> risk, double q_negative, int n_reps,
                                      std::uint64_t seed, double treat_fraction) {
  if (!(q_negative >= 0.0 && q_negative <= 1.0)) throw ArgumentError("q_negative must be in [0, 1]");
  if (n_reps < 2) throw ArgumentError("design-vs-uniform needs at least two reps");
  if (!(treat_fraction > 0.0 && treat_fraction < 1.0)) throw ArgumentError("treat fraction must be in (0, 1)");
  const std::size_t n = risk.size();
  if (n < 2) throw ArgumentError("design-vs-uniform needs at least two units");
  double risk_sum = 0.0;
  for (double r : risk) {
    if (!(r > 0.0 && r < 1.0)) throw ArgumentError("risk must be in (0, 1)");
    risk_sum += r;
  }
  std::vector<double> p_design(n), p_uniform(n, treat_fraction);
  for (std::size_t i = 0; i < n; ++i) {
    p_design[i] = std::min(1.0 - 1e-6, treat_fraction * static_cast<double>(n) * risk[i] / risk_sum);
  }
  std::vector<double> not_design(n), not_uniform(n);
  for (std::size_t i = 0; i < n; ++i) {
    not_design[i] = 1.0 - p_design[i];
    not_uniform[i] = 1.0 - p_uniform[i];
  }
  DesignVsUniformReport rep;
  rep.q_negative = q_negative;
  rep.n_reps = n_reps;
  rep.treat_fraction = treat_fraction;
  const auto reps = static_cast<std::size_t>(n_reps);
  rep.churn_design.resize(reps);
  rep.churn_uniform.resize(reps);
  rep.ate_error_design.resize(reps);
  rep.ate_error_uniform.resize(reps);
  rep.true_ate.resize(reps);
  std::vector<double> treated_design(reps), treated_uniform(reps);
  parallel::ForEach(reps, [&](std::size_t r) {
    Rng rng(DeriveSeed(seed, r));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> y1(n);
    std::vector<int> a_design(n), a_uniform(n);
    double effect = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool harmful = unif(rng) < q_negative;
      const double u = unif(rng);
      y1[i] = harmful ? risk[i] + u * (1.0 - risk[i]) : u * risk[i];
      effect += y1[i] - risk[i];
      a_design[i] = unif(rng) < p_design[i] ? 1 : 0;
      a_uniform[i] = unif(rng) < p_uniform[i] ? 1 : 0;
    }
    rep.true_ate[r] = effect / static_cast<double>(n);
    auto arm = [&](const std::vector<int>& a, const std::vector<double>& p, const std::vector<double>& not_p,
                   double& churn, double& error, double& share) {
      std::vector<double> y(n);
      double total = 0.0;
      std::size_t n_treated = 0;
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = a[i] == 1 ? y1[i] : risk[i];
        total += y[i];
        n_treated += static_cast<std::size_t>(a[i]);
      }
      churn = total / static_cast<double>(n);
      share = static_cast<double>(n_treated) / static_cast<double>(n);
      error = EstimateContrast(a, p, not_p, y, 1, 0, Estimand::kAte).point - rep.true_ate[r];
    };
    arm(a_design, p_design, not_design, rep.churn_design[r], rep.ate_error_design[r], treated_design[r]);
    arm(a_uniform, p_uniform, not_uniform, rep.churn_uniform[r], rep.ate_error_uniform[r], treated_uniform[r]);
  });
  rep.median_churn_design = stats::Quantile(rep.churn_design, 0.5);
  rep.median_churn_uniform = stats::Quantile(rep.churn_uniform, 0.5);
  rep.mean_error_design = stats::Mean(rep.ate_error_design);
  rep.mean_error_uniform = stats::Mean(rep.ate_error_uniform);
  const double root = std::sqrt(static_cast<double>(reps));
  rep.se_error_design = std::sqrt(stats::SampleVariance(rep.ate_error_design)) / root;
  rep.se_error_uniform = std::sqrt(stats::SampleVariance(rep.ate_error_uniform)) / root;
  rep.mean_treated_design = stats::Mean(treated_design);
  rep.mean_treated_uniform = stats::Mean(treated_uniform);
  return rep;
}

// ---- Validation experiment --------------------------------------------------------------

namespace {

double MeanPotential(const Matrix& y, std::span<const std::size_t> rows, std::span<const int> actions) {
  double s = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) s += y(rows[r], static_cast<std::size_t>(actions[r]));
  return s / static_cast<double>(rows.size());
}

std::vector<double> Gather(std::span<const double> v, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

ValidationReport ValidationExperiment(const DgpConfig& config, std::span<const int> horizons,
                                      std::span<const SurrogateSet> sets, const ValidationOptions& options) {
  if (config.family != DgpFamily::kSubscriber) {
    throw ArgumentError("the validation experiment needs the subscriber panel");
  }
  if (horizons.empty() || sets.empty()) throw ArgumentError("validation needs horizons and surrogate sets");
  for (int h : horizons) {
    if (h < 1 || h > config.n_periods) {
      throw ArgumentError("horizon " + std::to_string(h) + " exceeds the surrogate span 1.." +
                          std::to_string(config.n_periods));
    }
  }
  ValidationReport report;
  for (int h : horizons) {
    for (SurrogateSet set : sets) {
      DgpConfig cfg = config;
      cfg.horizon = h;
      cfg.surrogate_set = set;
      const SimData sim = Generate(cfg);
      const auto& exp = sim.experiment;
      ValidationRow row;
      row.horizon = h;
      row.surrogate_set = set;
      row.identity_index = h == cfg.n_periods && set == SurrogateSet::kRevenue &&
                           cfg.comparability_drift == 0.0;
      std::vector<double> index;
      if (row.identity_index) {
        // The surrogate is the outcome itself, so E[Y | S, X] = S.
        const auto v = exp.surrogates.column("revenue").values();
        index.assign(v.begin(), v.end());
      } else {
        SurrogateFitOptions fit;
        fit.spec = options.surrogate_model;
        fit.seed = DeriveSeed(options.seed, "surrogate");
        index = FitSurrogateIndex(sim.historical, fit).Impute(exp);
      }
      row.att_index = EstimateContrast(exp, index, 1, 0, Estimand::kAtt);
      row.att_true = EstimateContrast(exp, sim.outcomes, 1, 0, Estimand::kAtt);

      const auto split = SplitTrainTest(exp.size(), options.test_fraction, DeriveSeed(options.seed, "split"));
      const ExperimentalDataset train = exp.Subset(split.train);
      const ExperimentalDataset test = exp.Subset(split.test);
      PolicyPipelineConfig pipe = options.pipeline;
      pipe.seed = DeriveSeed(options.seed, "policy");
      const Table test_features = SelectFeatures(test.features, pipe.policy_features);
      auto learn = [&](std::span<const double> outcome) {
        const auto y_train = Gather(outcome, split.train);
        return FitPolicyPipeline(train, y_train, pipe).fit.policy.Actions(test_features);
      };
      const auto a_index = learn(index);
      const auto a_true = learn(sim.outcomes);
      const auto a_proxy = learn(sim.proxy);
      const std::vector<int> a_none(split.test.size(), 0);

      const auto& po = sim.potential_outcomes;
      row.value_status_quo = MeanPotential(po, split.test, a_none);
      row.value_index_policy = MeanPotential(po, split.test, a_index);
      row.value_true_policy = MeanPotential(po, split.test, a_true);
      row.value_proxy_policy = MeanPotential(po, split.test, a_proxy);
      double oracle = 0.0;
      for (std::size_t i : split.test) oracle += po(i, static_cast<std::size_t>(sim.oracle_policy[i]));
      row.value_oracle_policy = oracle / static_cast<double>(split.test.size());
      std::size_t agree = 0;
      for (std::size_t i = 0; i < a_index.size(); ++i) agree += a_index[i] == a_true[i] ? 1 : 0;
      row.agreement = static_cast<double>(agree) / static_cast<double>(a_index.size());

      BootstrapConfig boot;
      boot.estimator = Estimator::kDr;
      boot.replicates = options.bootstrap;
      boot.level = options.level;
      boot.seed = DeriveSeed(options.seed, "bootstrap");
      const auto index_test = Gather(index, split.test);
      const auto y_test = Gather(sim.outcomes, split.test);
      const auto mu_index = FitCrossFitOutcomeModel(test, index_test, pipe.outcome_model, pipe.n_folds,
                                                    DeriveSeed(options.seed, "evaluation-index"));
      const auto mu_true = FitCrossFitOutcomeModel(test, y_test, pipe.outcome_model, pipe.n_folds,
                                                   DeriveSeed(options.seed, "evaluation-true"));
      const auto snap_none = PolicySnapshot::FromActions(a_none, 2);
      const auto snap_index = PolicySnapshot::FromActions(a_index, 2);
      row.gain_index_policy =
          BootstrapValueDifference(test, index_test, snap_index, snap_none, &mu_index.predictions, boot);
      row.gain_proxy_policy = BootstrapValueDifference(
          test, index_test, PolicySnapshot::FromActions(a_proxy, 2), snap_none, &mu_index.predictions, boot);
      row.index_minus_true = BootstrapValueDifference(test, y_test, snap_index,
                                                      PolicySnapshot::FromActions(a_true, 2),
                                                      &mu_true.predictions, boot);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

namespace {

std::string Num(double v) { return FormatDouble(v); }
std::string Opt(const std::optional<double>& v) { return v ? FormatDouble(*v) : std::string(); }

}  // namespace

std::vector<std::filesystem::path> WriteValidationReport(const ValidationReport& report,
                                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const char* name, const std::vector<std::string>& header, auto&& row_cells) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    WriteCsvRow(out, header);
    for (const auto& r : report.rows) {
      const std::vector<std::string> cells = row_cells(r);
      WriteCsvRow(out, cells);
    }
    written.push_back(path);
  };
  auto key = [](const ValidationRow& r) {
    return std::vector<std::string>{std::to_string(r.horizon), std::string(ToString(r.surrogate_set))};
  };
  auto cat = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  write("panel_a_att.csv",
        {"horizon", "surrogate_set", "att_index", "att_index_low", "att_index_high", "att_true", "att_true_low",
         "att_true_high"},
        [&](const ValidationRow& r) {
          return cat(key(r), {Num(r.att_index.point), Opt(r.att_index.ci_low), Opt(r.att_index.ci_high),
                              Num(r.att_true.point), Opt(r.att_true.ci_low), Opt(r.att_true.ci_high)});
        });
  write("panel_b_index_policy.csv",
        {"horizon", "surrogate_set", "true_gain", "estimated_gain", "ci_low", "ci_high"},
        [&](const ValidationRow& r) {
          return cat(key(r), {Num(r.value_index_policy - r.value_status_quo), Num(r.gain_index_policy.point),
                              Opt(r.gain_index_policy.ci_low), Opt(r.gain_index_policy.ci_high)});
        });
  write("panel_c_proxy_policy.csv",
        {"horizon", "surrogate_set", "true_gain", "estimated_gain", "ci_low", "ci_high"},
        [&](const ValidationRow& r) {
          return cat(key(r), {Num(r.value_proxy_policy - r.value_status_quo), Num(r.gain_proxy_policy.point),
                              Opt(r.gain_proxy_policy.ci_low), Opt(r.gain_proxy_policy.ci_high)});
        });
  write("panel_d_index_vs_true.csv",
        {"horizon", "surrogate_set", "true_difference", "estimated_difference", "ci_low", "ci_high", "agreement"},
        [&](const ValidationRow& r) {
          return cat(key(r), {Num(r.value_index_policy - r.value_true_policy), Num(r.index_minus_true.point),
                              Opt(r.index_minus_true.ci_low), Opt(r.index_minus_true.ci_high),
                              Num(r.agreement)});
        });
  write("panel_e_surrogate_sets.csv",
        {"horizon", "surrogate_set", "identity_index", "value_status_quo", "value_index_policy",
         "value_true_policy", "value_proxy_policy", "value_oracle_policy", "agreement"},
        [&](const ValidationRow& r) {
          return cat(key(r), {r.identity_index ? "true" : "false", Num(r.value_status_quo),
                              Num(r.value_index_policy), Num(r.value_true_policy), Num(r.value_proxy_policy),
                              Num(r.value_oracle_policy), Num(r.agreement)});
        });
  return written;
}

}  // namespace longhorizon
