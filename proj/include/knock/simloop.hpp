#ifndef KNOCK_SIMLOOP_HPP_
#define KNOCK_SIMLOOP_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "knock/distributions.hpp"
#include "knock/knockctl.hpp"

namespace knock {

struct EngineAnchor {
  double spark = 0.0;  // deg BTDC
  MixtureParams model;
};

// Synthetic engine: KI at a given spark timing is a mixed-lognormal draw
// whose parameters are interpolated between anchors. Anchors are sorted by
// spark and their log-space mean never falls as spark advances.
struct EngineModel {
  std::vector<EngineAnchor> anchors;
  std::uint64_t seed = 0;

  void validate() const;
};

// Log-space mean a * mu1 + (1 - a) * mu2.
double log_mean(const MixtureParams &p);

// Componentwise linear interpolation of (a, mu1, sigma1, mu2, sigma2)
// between the bracketing anchors, held constant outside the anchor range.
MixtureParams engine_response(const EngineModel &model, double spark);

// One KI draw for cycle `cycle`; the stream depends only on (seed, cycle).
double simulate_cycle(const EngineModel &model, double spark, std::uint64_t cycle);

struct CycleRecord {
  std::size_t cycle = 0;
  double spark = 0.0;  // deg BTDC at which the cycle fired
  double ki = 0.0;     // bar
  Eigen::VectorXd posterior;
  double applied_delta = 0.0;  // deg
};

using Trajectory = std::vector<CycleRecord>;

Trajectory run_closed_loop(const EngineModel &model, const StateBank &bank,
                           const ControllerState &initial, std::size_t cycles);

struct TrajectorySummary {
  double mean_spark = 0.0;
  double spark_std = 0.0;  // population
  double severe_fraction = 0.0;
  double mean_ki = 0.0;
};

// Fraction counts cycles with posterior[severe_state] > severe_cut.
TrajectorySummary trajectory_summary(std::span<const CycleRecord> records,
                                     Eigen::Index severe_state, double severe_cut);

// Demo plant: anchors at 12, 15, 17, 19, 21 deg BTDC (17 is borderline).
// Illustrative values only.
EngineModel demo_engine(std::uint64_t seed = 0);

// One bank state per engine anchor, labelled M1..Mk, default weights.
StateBank matched_bank(const EngineModel &engine);

}  // namespace knock

#endif  // KNOCK_SIMLOOP_HPP_
