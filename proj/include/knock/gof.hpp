#ifndef KNOCK_GOF_HPP_
#define KNOCK_GOF_HPP_

#include <cmath>
#include <cstdint>

#include <Eigen/Core>

#include "knock/distributions.hpp"
#include "knock/em.hpp"

namespace knock {

// Step function of a sample. Tied values collapse to one point carrying the
// highest step they reach, so `steps` is strictly increasing and ends at 1.
struct EmpiricalCDF {
  Eigen::VectorXd points;
  Eigen::VectorXd steps;

  Eigen::Index size() const { return points.size(); }
};

struct FitScores {
  double r2 = 0.0;
  double ks = 0.0;
};

// Monte Carlo acceptance cutoffs for one model family.
struct Thresholds {
  Family family = Family::Lognormal;
  Eigen::Index n = 0;
  Eigen::Index reps = 0;
  double r2_5th = 0.0;
  double ks_95th = 0.0;
  std::uint64_t seed = 0;
  Model truth = LognormalParams{};
  Eigen::Index redraws = 0;  // replicates re-drawn after EM degeneracy
};

struct FitReport {
  Model model;
  FitScores scores;
  bool r2_pass = false;
  bool ks_pass = false;
  bool accept = false;
  double log_likelihood = 0.0;
};

EmpiricalCDF empirical_cdf(const Eigen::Ref<const Eigen::VectorXd> &samples);

// Lag-k sample autocorrelations r_0..r_max_lag about the full-sample mean.
Eigen::VectorXd acf(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    Eigen::Index max_lag);

// Two-sided white-noise band z_{1-alpha/2} / sqrt(n).
double acf_bounds(Eigen::Index n, double alpha = 0.05);

// Coefficient of determination between the ECDF steps and a model CDF
// evaluated at the ECDF points. Not clamped; poor fits go negative.
template <typename Cdf>
double r_squared(const EmpiricalCDF &ecdf, Cdf &&cdf) {
  if (ecdf.size() == 0) throw PreconditionError("empty empirical CDF");
  const double mean = ecdf.steps.mean();
  double total = 0.0;
  double residual = 0.0;
  for (Eigen::Index i = 0; i < ecdf.size(); ++i) {
    const double y = ecdf.steps[i];
    const double d = y - cdf(ecdf.points[i]);
    total += (y - mean) * (y - mean);
    residual += d * d;
  }
  if (!(total > 0.0)) {
    throw DegenerateError("R^2 undefined for a single-step empirical CDF");
  }
  return (total - residual) / total;
}

// Exact supremum distance between the ECDF step function and a continuous
// model CDF: both sides of every jump are compared.
template <typename Cdf>
double ks_distance(const EmpiricalCDF &ecdf, Cdf &&cdf) {
  if (ecdf.size() == 0) throw PreconditionError("empty empirical CDF");
  double sup = 0.0;
  double below = 0.0;
  for (Eigen::Index i = 0; i < ecdf.size(); ++i) {
    const double f = cdf(ecdf.points[i]);
    sup = std::max({sup, std::abs(ecdf.steps[i] - f), std::abs(below - f)});
    below = ecdf.steps[i];
  }
  return sup;
}

FitScores score_fit(const EmpiricalCDF &ecdf, const Model &model);
FitScores score_fit(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    const Model &model);

// Fits the requested family: closed-form MLE or EM.
Model fit_model(const Eigen::Ref<const Eigen::VectorXd> &samples, Family family,
                const EMConfig &cfg = {});

// Nearest-rank percentile, p in (0, 100].
double nearest_rank_percentile(Eigen::VectorXd values, double p);

// Parametric-bootstrap calibration: each replicate draws n points from
// `truth`, refits the same family and scores the fit; returns the 5th
// percentile of R^2 and the 95th percentile of KS. Replicate r uses seeds
// derived from (seed, r) only, so the result is identical for any thread
// count (threads <= 0 reads KNOCK_THREADS, default 1).
Thresholds mc_thresholds(const Model &truth, Eigen::Index n, Eigen::Index reps,
                         std::uint64_t seed, const EMConfig &em = {},
                         int threads = 0);

// Fits `family`, scores it and applies the thresholds:
// accept iff r2 >= r2_5th and ks <= ks_95th.
FitReport fit_report(const Eigen::Ref<const Eigen::VectorXd> &samples,
                     Family family, const Thresholds &thresholds,
                     const EMConfig &cfg = {});

// Default truth models for global (non-bootstrap) threshold calibration.
// The lognormal scores do not depend on mu or sigma; the mixture scores do.
LognormalParams canonical_lognormal();
MixtureParams canonical_mixture();

// Worker count from KNOCK_THREADS (>= 1).
int thread_count_from_env();

}  // namespace knock

#endif  // KNOCK_GOF_HPP_
