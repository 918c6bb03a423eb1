#include "knock/gof.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "knock/rng.hpp"

namespace knock {

EmpiricalCDF empirical_cdf(const Eigen::Ref<const Eigen::VectorXd> &samples) {
  const Eigen::Index n = samples.size();
  if (n == 0) throw PreconditionError("empirical CDF of an empty sample");
  Eigen::VectorXd sorted = samples;
  std::sort(sorted.begin(), sorted.end());

  EmpiricalCDF out;
  out.points.resize(n);
  out.steps.resize(n);
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double step = static_cast<double>(i + 1) / static_cast<double>(n);
    if (m > 0 && sorted[i] == out.points[m - 1]) {
      out.steps[m - 1] = step;
    } else {
      out.points[m] = sorted[i];
      out.steps[m] = step;
      ++m;
    }
  }
  out.points.conservativeResize(m);
  out.steps.conservativeResize(m);
  out.steps[m - 1] = 1.0;
  return out;
}

Eigen::VectorXd acf(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    Eigen::Index max_lag) {
  const Eigen::Index n = samples.size();
  if (max_lag < 0 || n < max_lag + 2) {
    throw PreconditionError("acf needs at least max_lag + 2 samples");
  }
  const Eigen::VectorXd d = samples.array() - samples.mean();
  const double denom = d.squaredNorm();
  if (!(denom > 0.0)) throw DegenerateError("acf of a constant sequence");
  Eigen::VectorXd r(max_lag + 1);
  r[0] = 1.0;
  for (Eigen::Index k = 1; k <= max_lag; ++k) {
    r[k] = d.head(n - k).dot(d.tail(n - k)) / denom;
  }
  return r;
}

double acf_bounds(Eigen::Index n, double alpha) {
  if (n < 2) throw PreconditionError("acf bounds need n >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw PreconditionError("alpha must lie in (0, 1)");
  }
  const double z =
      boost::math::quantile(boost::math::normal_distribution<double>(),
                            1.0 - alpha / 2.0);
  return z / std::sqrt(static_cast<double>(n));
}

FitScores score_fit(const EmpiricalCDF &ecdf, const Model &model) {
  const Eigen::ArrayXd f = model_cdf(ecdf.points.array(), model);
  Eigen::Index i = 0;
  auto lookup = [&f, &i](double) { return f[i++]; };
  FitScores s;
  s.r2 = r_squared(ecdf, lookup);
  i = 0;
  s.ks = ks_distance(ecdf, lookup);
  return s;
}

FitScores score_fit(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    const Model &model) {
  return score_fit(empirical_cdf(samples), model);
}

Model fit_model(const Eigen::Ref<const Eigen::VectorXd> &samples, Family family,
                const EMConfig &cfg) {
  if (family == Family::Lognormal) return lognormal_mle(samples);
  return mixture_em(samples, cfg).params;
}

double nearest_rank_percentile(Eigen::VectorXd values, double p) {
  if (values.size() == 0) throw PreconditionError("percentile of nothing");
  if (!(p > 0.0 && p <= 100.0)) throw PreconditionError("percentile outside (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<Eigen::Index>(
      std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<Eigen::Index>(rank, 1, values.size()) - 1];
}

LognormalParams canonical_lognormal() { return {0.0, 1.0}; }

MixtureParams canonical_mixture() { return {0.5, {-1.0, 0.5}, {1.0, 0.5}}; }

int thread_count_from_env() {
  if (const char *v = std::getenv("KNOCK_THREADS")) {
    try {
      return std::max(1, std::stoi(v));
    } catch (const std::exception &) {
      throw UsageError(std::string("KNOCK_THREADS is not an integer: ") + v);
    }
  }
  return 1;
}

namespace {

constexpr int kMaxRedraws = 100;

struct Replicate {
  FitScores scores;
  int redraws = 0;
};

Replicate run_replicate(const Model &truth, Family family, Eigen::Index n,
                        std::uint64_t seed, const EMConfig &em) {
  Replicate out;
  for (int attempt = 0;; ++attempt) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    const Eigen::VectorXd x = sample_model(truth, n, s);
    EMConfig cfg = em;
    cfg.seed = s;
    try {
      out.scores = score_fit(x, fit_model(x, family, cfg));
      return out;
    } catch (const DegenerateError &) {
      if (attempt + 1 >= kMaxRedraws) throw;
      ++out.redraws;
    }
  }
}

}  // namespace

Thresholds mc_thresholds(const Model &truth, Eigen::Index n, Eigen::Index reps,
                         std::uint64_t seed, const EMConfig &em, int threads) {
  validate(truth);
  em.validate();
  if (reps < 1) throw PreconditionError("reps must be >= 1");
  if (n < 10) throw PreconditionError("replicate size n must be >= 10");
  if (threads <= 0) threads = thread_count_from_env();
  threads = static_cast<int>(std::min<Eigen::Index>(threads, reps));

  const Family family = family_of(truth);
  std::vector<Replicate> results(static_cast<std::size_t>(reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));

  auto work = [&](int worker) {
    try {
      for (Eigen::Index r = worker; r < reps; r += threads) {
        results[static_cast<std::size_t>(r)] = run_replicate(
            truth, family, n, derive_seed(seed, static_cast<std::uint64_t>(r)), em);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(worker)] = std::current_exception();
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto &t : pool) t.join();
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }

  Eigen::VectorXd r2(reps), ks(reps);
  Thresholds th;
  for (Eigen::Index r = 0; r < reps; ++r) {
    r2[r] = results[static_cast<std::size_t>(r)].scores.r2;
    ks[r] = results[static_cast<std::size_t>(r)].scores.ks;
    th.redraws += results[static_cast<std::size_t>(r)].redraws;
  }
  th.family = family;
  th.n = n;
  th.reps = reps;
  th.seed = seed;
  th.truth = truth;
  th.r2_5th = nearest_rank_percentile(r2, 5.0);
  th.ks_95th = nearest_rank_percentile(ks, 95.0);
  return th;
}

FitReport fit_report(const Eigen::Ref<const Eigen::VectorXd> &samples,
                     Family family, const Thresholds &thresholds,
                     const EMConfig &cfg) {
  if (family != thresholds.family) {
    throw PreconditionError("thresholds were calibrated for the " +
                            to_string(thresholds.family) + " family, not " +
                            to_string(family));
  }
  FitReport rep;
  rep.model = fit_model(samples, family, cfg);
  rep.scores = score_fit(samples, rep.model);
  rep.log_likelihood = log_likelihood(samples, rep.model);
  rep.r2_pass = rep.scores.r2 >= thresholds.r2_5th;
  rep.ks_pass = rep.scores.ks <= thresholds.ks_95th;
  rep.accept = rep.r2_pass && rep.ks_pass;
  return rep;
}

}  // namespace knock
