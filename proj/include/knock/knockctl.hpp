#ifndef KNOCK_KNOCKCTL_HPP_
#define KNOCK_KNOCKCTL_HPP_

#include <deque>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "knock/distributions.hpp"

namespace knock {

struct KnockState {
  std::string label;
  MixtureParams model;
  double spark_anchor = 0.0;  // deg BTDC
};

// Knock-level hypotheses, ordered from least to most severe. More advanced
// spark means more knock, so spark_anchor strictly increases along the
// bank. action_weights[i] is the spark change (deg, + = advance) commanded
// when state i is certain.
struct StateBank {
  std::vector<KnockState> states;
  Eigen::VectorXd action_weights;

  Eigen::Index size() const { return static_cast<Eigen::Index>(states.size()); }
  void validate() const;
};

// +2 ... -2 deg, linear across the bank.
Eigen::VectorXd default_action_weights(Eigen::Index states);

// Probability vector over the bank's states.
struct Posterior {
  Eigen::VectorXd probs;

  static Posterior uniform(Eigen::Index states);
  Eigen::Index size() const { return probs.size(); }
  // Entries in [0, 1] summing to 1 within tol.
  bool on_simplex(double tol = 1e-12) const;
};

struct BayesUpdate {
  Posterior posterior;
  bool fallback = false;  // every state's mass underflowed; prior returned
};

// Per-state sum of ln mixture densities over the window (independent cycles).
Eigen::VectorXd state_likelihoods(const StateBank &bank,
                                  const Eigen::Ref<const Eigen::VectorXd> &window);

// Bayes rule in log space with max-shifting. States with zero prior stay at
// zero.
BayesUpdate posterior_from_log_likelihoods(const Posterior &prior,
                                           const Eigen::Ref<const Eigen::VectorXd> &loglik);

BayesUpdate posterior_update(const StateBank &bank, const Posterior &prior,
                             const Eigen::Ref<const Eigen::VectorXd> &window);

// Probability-weighted spark change, deg.
double spark_delta(const Posterior &posterior, const StateBank &bank);

struct SparkLimits {
  double min = 0.0;   // deg BTDC
  double max = 40.0;  // deg BTDC
};

struct ControllerState {
  double spark = 0.0;  // deg BTDC
  Posterior prior;
  std::deque<double> window;
  // W > 1 re-counts cycles the carried prior has already absorbed.
  Eigen::Index window_capacity = 1;
  SparkLimits limits;
  double forgetting = 0.9;  // weight of the last posterior in the next prior

  static ControllerState initial(const StateBank &bank, double spark,
                                 Eigen::Index window_capacity = 1,
                                 double forgetting = 0.9, SparkLimits limits = {});
  void validate() const;
};

struct ControllerStep {
  ControllerState state;
  Posterior posterior;
  double requested_delta = 0.0;
  double applied_delta = 0.0;  // after clamping to the spark limits
  bool fallback = false;
};

// One cycle: window <- new_ki, posterior over the window from the carried
// prior, spark += weighted delta (clamped), prior <- lambda * posterior +
// (1 - lambda) * uniform.
ControllerStep controller_step(const ControllerState &state, const StateBank &bank,
                               double new_ki);

}  // namespace knock

#endif  // KNOCK_KNOCKCTL_HPP_
