#include "knock/simloop.hpp"

#include <algorithm>
#include <cmath>

#include "knock/error.hpp"
#include "knock/rng.hpp"

namespace knock {

double log_mean(const MixtureParams &p) {
  return p.a * p.comp1.mu + (1.0 - p.a) * p.comp2.mu;
}

void EngineModel::validate() const {
  if (anchors.size() < 2) throw PreconditionError("engine model needs >= 2 anchors");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    knock::validate(anchors[i].model);
    if (i == 0) continue;
    if (!(anchors[i].spark > anchors[i - 1].spark)) {
      throw PreconditionError("engine anchors must have strictly increasing spark");
    }
    if (log_mean(anchors[i].model) < log_mean(anchors[i - 1].model)) {
      throw PreconditionError("engine KI must not fall as spark advances");
    }
  }
}

MixtureParams engine_response(const EngineModel &model, double spark) {
  const auto &a = model.anchors;
  if (a.empty()) throw PreconditionError("engine model has no anchors");
  if (spark <= a.front().spark) return a.front().model;
  if (spark >= a.back().spark) return a.back().model;
  const auto hi = std::upper_bound(
      a.begin(), a.end(), spark,
      [](double s, const EngineAnchor &anchor) { return s < anchor.spark; });
  const auto lo = hi - 1;
  if (spark == lo->spark) return lo->model;
  const double t = (spark - lo->spark) / (hi->spark - lo->spark);
  auto lerp = [t](double x, double y) { return x + t * (y - x); };
  const MixtureParams &p = lo->model;
  const MixtureParams &q = hi->model;
  return {lerp(p.a, q.a),
          {lerp(p.comp1.mu, q.comp1.mu), lerp(p.comp1.sigma, q.comp1.sigma)},
          {lerp(p.comp2.mu, q.comp2.mu), lerp(p.comp2.sigma, q.comp2.sigma)}};
}

double simulate_cycle(const EngineModel &model, double spark, std::uint64_t cycle) {
  return sample_mixture(engine_response(model, spark), 1,
                        derive_seed(model.seed, cycle))[0];
}

Trajectory run_closed_loop(const EngineModel &model, const StateBank &bank,
                           const ControllerState &initial, std::size_t cycles) {
  model.validate();
  bank.validate();
  initial.validate();
  Trajectory out;
  out.reserve(cycles);
  ControllerState state = initial;
  for (std::size_t c = 0; c < cycles; ++c) {
    const double spark = state.spark;
    const double ki = std::max(simulate_cycle(model, spark, c), kPositivityFloor);
    ControllerStep step = controller_step(state, bank, ki);
    out.push_back({c, spark, ki, step.posterior.probs, step.applied_delta});
    state = std::move(step.state);
  }
  return out;
}

TrajectorySummary trajectory_summary(std::span<const CycleRecord> records,
                                     Eigen::Index severe_state, double severe_cut) {
  if (records.empty()) throw PreconditionError("empty trajectory");
  const auto n = static_cast<double>(records.size());
  TrajectorySummary s;
  std::size_t severe = 0;
  for (const auto &r : records) {
    s.mean_spark += r.spark;
    s.mean_ki += r.ki;
    if (severe_state < 0 || severe_state >= r.posterior.size()) {
      throw PreconditionError("severe state index outside the posterior");
    }
    if (r.posterior[severe_state] > severe_cut) ++severe;
  }
  s.mean_spark /= n;
  s.mean_ki /= n;
  double ss = 0.0;
  for (const auto &r : records) ss += (r.spark - s.mean_spark) * (r.spark - s.mean_spark);
  s.spark_std = std::sqrt(ss / n);
  s.severe_fraction = static_cast<double>(severe) / n;
  return s;
}

EngineModel demo_engine(std::uint64_t seed) {
  EngineModel m;
  m.seed = seed;
  m.anchors = {
      {12.0, {0.92, {-2.3, 0.35}, {-1.5, 0.45}}},
      {15.0, {0.85, {-2.1, 0.35}, {-1.1, 0.50}}},
      {17.0, {0.75, {-1.9, 0.38}, {-0.7, 0.50}}},
      {19.0, {0.60, {-1.7, 0.40}, {-0.3, 0.55}}},
      {21.0, {0.45, {-1.5, 0.40}, {0.1, 0.60}}},
  };
  return m;
}

StateBank matched_bank(const EngineModel &engine) {
  StateBank bank;
  for (std::size_t i = 0; i < engine.anchors.size(); ++i) {
    bank.states.push_back({"M" + std::to_string(i + 1), engine.anchors[i].model,
                           engine.anchors[i].spark});
  }
  bank.action_weights = default_action_weights(bank.size());
  return bank;
}

}  // namespace knock
