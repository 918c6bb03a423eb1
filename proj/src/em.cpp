#include "knock/em.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "knock/rng.hpp"

namespace knock {

void EMConfig::validate() const {
  if (max_iters < 1) throw PreconditionError("EM max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw PreconditionError("EM rel_tol must be > 0");
  if (restarts < 1) throw PreconditionError("EM restarts must be >= 1");
  if (!(variance_floor > 0.0)) {
    throw PreconditionError("EM variance_floor must be > 0");
  }
}

namespace {

constexpr double kCollapse = 1e-6;

// Gaussian mixture over y = ln x. Variances rather than deviations.
struct GaussMix {
  double a;
  double mu1, var1;
  double mu2, var2;
};

struct Run {
  GaussMix g;
  double loglik;  // Gaussian space
  int iterations;
  std::vector<double> trace;  // Gaussian space
};

class Estimator {
 public:
  Estimator(const Eigen::ArrayXd &y, const EMConfig &cfg)
      : y_(y), cfg_(cfg), resp_(y.size()) {}

  // E-step: fills responsibilities of component 1, returns log-likelihood.
  double expect(const GaussMix &g) {
    const double c = 0.5 * std::log(2.0 * std::numbers::pi);
    const double k1 = std::log(g.a) - 0.5 * std::log(g.var1) - c;
    const double k2 = std::log1p(-g.a) - 0.5 * std::log(g.var2) - c;
    const double h1 = 0.5 / g.var1;
    const double h2 = 0.5 / g.var2;
    double total = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double d1 = y_[i] - g.mu1;
      const double d2 = y_[i] - g.mu2;
      const double l1 = k1 - h1 * d1 * d1;
      const double l2 = k2 - h2 * d2 * d2;
      const double hi = std::max(l1, l2);
      const double lse = hi + std::log1p(std::exp(-std::abs(l1 - l2)));
      resp_[i] = std::exp(l1 - lse);
      total += lse;
    }
    return total;
  }

  // M-step. Returns nullopt if the weight collapses onto one component.
  std::optional<GaussMix> maximize() const {
    const double n = static_cast<double>(y_.size());
    const double n1 = resp_.sum();
    const double n2 = n - n1;
    const double a = n1 / n;
    if (!(a > kCollapse && a < 1.0 - kCollapse)) return std::nullopt;
    const double mu1 = (resp_ * y_).sum() / n1;
    const double mu2 = ((1.0 - resp_) * y_).sum() / n2;
    double var1 = (resp_ * (y_ - mu1).square()).sum() / n1;
    double var2 = ((1.0 - resp_) * (y_ - mu2).square()).sum() / n2;
    var1 = std::max(var1, cfg_.variance_floor);
    var2 = std::max(var2, cfg_.variance_floor);
    return GaussMix{a, mu1, var1, mu2, var2};
  }

  std::optional<Run> run(GaussMix g) {
    Run r{g, 0.0, 0, {}};
    r.trace.reserve(static_cast<std::size_t>(cfg_.max_iters) + 1);
    double prev = expect(g);
    r.trace.push_back(prev);
    for (int it = 0; it < cfg_.max_iters; ++it) {
      const auto next = maximize();
      if (!next) return std::nullopt;
      g = *next;
      ++r.iterations;
      const double cur = expect(g);
      r.trace.push_back(cur);
      const bool converged =
          std::abs(cur - prev) <= cfg_.rel_tol * std::abs(prev);
      prev = cur;
      if (converged) break;
    }
    r.g = g;
    r.loglik = prev;
    return r;
  }

 private:
  const Eigen::ArrayXd &y_;
  const EMConfig &cfg_;
  Eigen::ArrayXd resp_;
};

GaussMix median_split_start(const Eigen::ArrayXd &y, double floor) {
  Eigen::ArrayXd s = y;
  std::sort(s.begin(), s.end());
  const Eigen::Index half = s.size() / 2;
  const auto lower = s.head(half);
  const auto upper = s.tail(s.size() - half);
  const double mu1 = lower.mean();
  const double mu2 = upper.mean();
  const double var1 = std::max((lower - mu1).square().mean(), floor);
  const double var2 = std::max((upper - mu2).square().mean(), floor);
  return {0.5, mu1, var1, mu2, var2};
}

GaussMix perturbed(const GaussMix &base, double spread, double floor,
                   std::uint64_t seed) {
  Rng rng(seed);
  GaussMix g = base;
  g.mu1 += 0.5 * spread * rng.normal();
  g.mu2 += 0.5 * spread * rng.normal();
  g.var1 = std::max(g.var1 * std::exp(0.5 * rng.normal()), floor);
  g.var2 = std::max(g.var2 * std::exp(0.5 * rng.normal()), floor);
  g.a = std::clamp(0.5 + 0.2 * rng.normal(), 0.1, 0.9);
  return g;
}

}  // namespace

EMResult mixture_em(const Eigen::Ref<const Eigen::VectorXd> &samples,
                    const EMConfig &cfg) {
  cfg.validate();
  if (samples.size() < 10) {
    throw InsufficientDataError("mixture fit needs at least 10 samples");
  }
  require_positive(samples);

  const Eigen::ArrayXd y = samples.array().log();
  const double spread = std::sqrt((y - y.mean()).square().mean());
  const GaussMix start = median_split_start(y, cfg.variance_floor);

  Estimator est(y, cfg);
  std::optional<Run> best;
  EMResult out;
  for (int r = 0; r < cfg.restarts; ++r) {
    const GaussMix init =
        r == 0 ? start
               : perturbed(start, spread, cfg.variance_floor,
                           derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    auto run = est.run(init);
    if (!run) {
      ++out.collapsed_restarts;
      continue;
    }
    if (!best || run->loglik > best->loglik) {
      best = std::move(run);
      out.best_restart = r;
    }
  }
  if (!best) {
    throw DegenerateError("every EM restart collapsed onto one component");
  }

  // Densities of x and of ln x differ by the Jacobian 1/x.
  const double jacobian = y.sum();
  out.params = canonical(MixtureParams{
      best->g.a,
      {best->g.mu1, std::sqrt(best->g.var1)},
      {best->g.mu2, std::sqrt(best->g.var2)}});
  out.log_likelihood = best->loglik - jacobian;
  out.iterations = best->iterations;
  out.trace.reserve(best->trace.size());
  for (double l : best->trace) out.trace.push_back(l - jacobian);
  return out;
}

}  // namespace knock
