#ifndef KNOCK_EM_HPP_
#define KNOCK_EM_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "knock/distributions.hpp"

namespace knock {

struct EMConfig {
  int max_iters = 500;
  double rel_tol = 1e-8;  // on the relative log-likelihood change
  int restarts = 5;
  double variance_floor = 1e-6;  // lower bound on sigma^2, log space
  std::uint64_t seed = 0;

  void validate() const;
};

struct EMResult {
  MixtureParams params;
  double log_likelihood = 0.0;  // KI space, same value as log_likelihood()
  int iterations = 0;           // M-steps taken by the winning run
  int best_restart = 0;
  int collapsed_restarts = 0;
  // Log-likelihood before every M-step of the winning run, then at the
  // returned parameters.
  std::vector<double> trace;
};

// Two-component lognormal mixture by expectation-maximization on ln(x),
// which is a two-component Gaussian mixture. Restart 0 splits the sorted
// log-data at its median; later restarts perturb that start with seeded
// noise. The run with the highest final likelihood wins.
//
// Throws InsufficientDataError for fewer than 10 samples, DomainError for
// non-positive samples and DegenerateError when every restart drives the
// weight to within 1e-6 of 0 or 1.
EMResult mixture_em(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    const EMConfig &cfg = {});
inline EMResult mixture_em(const KIDataset &data, const EMConfig &cfg = {}) {
  return mixture_em(data.ki, cfg);
}

}  // namespace knock

#endif  // KNOCK_EM_HPP_
