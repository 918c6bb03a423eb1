#include "knock/knockctl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "knock/error.hpp"

namespace knock {

void StateBank::validate() const {
  if (states.size() < 2) throw PreconditionError("state bank needs >= 2 states");
  if (action_weights.size() != size()) {
    throw PreconditionError("state bank needs one action weight per state");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < states.size(); ++i) {
    knock::validate(states[i].model);
    if (!labels.insert(states[i].label).second) {
      throw PreconditionError("duplicate state label '" + states[i].label + "'");
    }
    if (i > 0 && !(states[i].spark_anchor > states[i - 1].spark_anchor)) {
      throw PreconditionError(
          "state spark anchors must increase with knock severity");
    }
  }
  if (!action_weights.allFinite()) throw PreconditionError("non-finite action weight");
}

Eigen::VectorXd default_action_weights(Eigen::Index states) {
  if (states < 2) throw PreconditionError("need >= 2 states");
  return Eigen::VectorXd::LinSpaced(states, 2.0, -2.0);
}

Posterior Posterior::uniform(Eigen::Index states) {
  return {Eigen::VectorXd::Constant(states, 1.0 / static_cast<double>(states))};
}

bool Posterior::on_simplex(double tol) const {
  if (probs.size() == 0) return false;
  if ((probs.array() < 0.0).any() || (probs.array() > 1.0).any()) return false;
  return std::abs(probs.sum() - 1.0) <= tol;
}

Eigen::VectorXd state_likelihoods(const StateBank &bank,
                                  const Eigen::Ref<const Eigen::VectorXd> &window) {
  if (window.size() == 0) throw PreconditionError("empty KI window");
  require_positive(window);
  Eigen::VectorXd ll(bank.size());
  for (Eigen::Index j = 0; j < bank.size(); ++j) {
    ll[j] = log_likelihood(window, bank.states[static_cast<std::size_t>(j)].model);
  }
  return ll;
}

BayesUpdate posterior_from_log_likelihoods(const Posterior &prior,
                                           const Eigen::Ref<const Eigen::VectorXd> &loglik) {
  if (!prior.on_simplex(1e-9)) throw PreconditionError("prior is not on the simplex");
  if (loglik.size() != prior.size()) {
    throw PreconditionError("likelihood and prior sizes differ");
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd lp(prior.size());
  for (Eigen::Index j = 0; j < prior.size(); ++j) {
    const double t = prior.probs[j] > 0.0 ? std::log(prior.probs[j]) + loglik[j] : ninf;
    lp[j] = std::isnan(t) ? ninf : t;
  }
  const double top = lp.maxCoeff();
  if (!std::isfinite(top)) return {prior, true};

  // std::exp, not the packet exp: the latter maps -inf to a denormal, and a
  // zero prior must stay exactly zero.
  Eigen::VectorXd p =
      (lp.array() - top).unaryExpr([](double v) { return std::exp(v); }).matrix();
  p /= p.sum();
  return {Posterior{p}, false};
}

BayesUpdate posterior_update(const StateBank &bank, const Posterior &prior,
                             const Eigen::Ref<const Eigen::VectorXd> &window) {
  return posterior_from_log_likelihoods(prior, state_likelihoods(bank, window));
}

double spark_delta(const Posterior &posterior, const StateBank &bank) {
  if (posterior.size() != bank.action_weights.size()) {
    throw PreconditionError("posterior and bank sizes differ");
  }
  return posterior.probs.dot(bank.action_weights);
}

ControllerState ControllerState::initial(const StateBank &bank, double spark,
                                         Eigen::Index window_capacity,
                                         double forgetting, SparkLimits limits) {
  ControllerState s;
  s.spark = std::clamp(spark, limits.min, limits.max);
  s.prior = Posterior::uniform(bank.size());
  s.window_capacity = window_capacity;
  s.limits = limits;
  s.forgetting = forgetting;
  s.validate();
  return s;
}

void ControllerState::validate() const {
  if (window_capacity < 1) throw PreconditionError("window capacity must be >= 1");
  if (!(limits.min <= limits.max)) throw PreconditionError("spark limits inverted");
  if (!(spark >= limits.min && spark <= limits.max)) {
    throw PreconditionError("spark outside its limits");
  }
  if (!(forgetting >= 0.0 && forgetting <= 1.0)) {
    throw PreconditionError("forgetting factor must lie in [0, 1]");
  }
}

ControllerStep controller_step(const ControllerState &state, const StateBank &bank,
                               double new_ki) {
  if (!(new_ki > 0.0) || !std::isfinite(new_ki)) {
    throw DomainError("knock intensity must be a finite positive value");
  }
  ControllerStep out{state, {}, 0.0, 0.0, false};
  ControllerState &next = out.state;
  next.window.push_back(new_ki);
  while (static_cast<Eigen::Index>(next.window.size()) > next.window_capacity) {
    next.window.pop_front();
  }
  Eigen::VectorXd window(static_cast<Eigen::Index>(next.window.size()));
  std::copy(next.window.begin(), next.window.end(), window.begin());

  const BayesUpdate upd = posterior_update(bank, state.prior, window);
  out.posterior = upd.posterior;
  out.fallback = upd.fallback;
  out.requested_delta = spark_delta(upd.posterior, bank);
  const double spark =
      std::clamp(state.spark + out.requested_delta, state.limits.min, state.limits.max);
  out.applied_delta = spark - state.spark;
  next.spark = spark;
  const double u = 1.0 / static_cast<double>(bank.size());
  next.prior.probs =
      (state.forgetting * upd.posterior.probs.array() + (1.0 - state.forgetting) * u)
          .matrix();
  return out;
}

}  // namespace knock
