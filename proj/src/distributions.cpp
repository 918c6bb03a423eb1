#include "knock/distributions.hpp"

#include <utility>

#include "knock/rng.hpp"

namespace knock {

void require_positive(const Eigen::Ref<const Eigen::VectorXd> &samples) {
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    if (!(samples[i] > 0.0) || !std::isfinite(samples[i])) {
      throw DomainError("sample " + std::to_string(i) +
                        " is not a finite positive value");
    }
  }
}

std::string to_string(Family family) {
  return family == Family::Lognormal ? "lognormal" : "mixture";
}

Family parse_family(const std::string &name) {
  if (name == "lognormal") return Family::Lognormal;
  if (name == "mixture") return Family::Mixture;
  throw UsageError("unknown family '" + name + "' (expected lognormal|mixture)");
}

Family family_of(const Model &model) {
  return std::holds_alternative<LognormalParams>(model) ? Family::Lognormal
                                                        : Family::Mixture;
}

void validate(const LognormalParams &p) {
  if (!std::isfinite(p.mu) || !std::isfinite(p.sigma) || !(p.sigma > 0.0)) {
    throw DomainError("lognormal parameters need finite mu and sigma > 0");
  }
}

void validate(const MixtureParams &p) {
  if (!(p.a > 0.0 && p.a < 1.0)) {
    throw DomainError("mixture weight must lie in (0, 1)");
  }
  validate(p.comp1);
  validate(p.comp2);
}

void validate(const Model &m) {
  std::visit([](const auto &p) { validate(p); }, m);
}

MixtureParams canonical(MixtureParams p) {
  if (p.comp1.mu > p.comp2.mu) {
    std::swap(p.comp1, p.comp2);
    p.a = 1.0 - p.a;
  }
  return p;
}

double model_cdf(double x, const Model &m) {
  return std::visit(
      [x](const auto &p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LognormalParams>) {
          return lognormal_cdf(x, p);
        } else {
          return mixture_cdf(x, p);
        }
      },
      m);
}

double model_logpdf(double x, const Model &m) {
  return std::visit(
      [x](const auto &p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LognormalParams>) {
          return lognormal_logpdf(x, p);
        } else {
          return mixture_logpdf(x, p);
        }
      },
      m);
}

LognormalParams lognormal_mle(const Eigen::Ref<const Eigen::VectorXd> &samples) {
  if (samples.size() < 2) {
    throw InsufficientDataError("lognormal fit needs at least 2 samples");
  }
  require_positive(samples);
  const Eigen::ArrayXd y = samples.array().log();
  const double mu = y.mean();
  const double var = (y - mu).square().mean();
  if (!(var > 0.0)) {
    throw DegenerateError("all samples identical; sigma would be zero");
  }
  return {mu, std::sqrt(var)};
}

double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const LognormalParams &p) {
  require_positive(samples);
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    total += detail::lognormal_logpdf_unchecked(samples[i], p);
  }
  return total;
}

double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const MixtureParams &p) {
  require_positive(samples);
  const double la = std::log(p.a);
  const double lb = std::log1p(-p.a);
  double total = 0.0;
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    total += detail::log_add_exp(
        la + detail::lognormal_logpdf_unchecked(samples[i], p.comp1),
        lb + detail::lognormal_logpdf_unchecked(samples[i], p.comp2));
  }
  return total;
}

double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const Model &m) {
  return std::visit([&samples](const auto &p) { return log_likelihood(samples, p); },
                    m);
}

Eigen::VectorXd sample_lognormal(const LognormalParams &p, Eigen::Index n,
                                 std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample count must be >= 1");
  Rng rng(seed);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out[i] = std::exp(p.mu + p.sigma * rng.normal());
  }
  return out;
}

Eigen::VectorXd sample_mixture(const MixtureParams &p, Eigen::Index n,
                               std::uint64_t seed) {
  if (n < 1) throw PreconditionError("sample count must be >= 1");
  if (1.0 - p.a < 1e-12) return sample_lognormal(p.comp1, n, seed);
  if (p.a < 1e-12) return sample_lognormal(p.comp2, n, seed);
  Rng rng(seed);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const LognormalParams &c = rng.uniform() < p.a ? p.comp1 : p.comp2;
    out[i] = std::exp(c.mu + c.sigma * rng.normal());
  }
  return out;
}

Eigen::VectorXd sample_model(const Model &m, Eigen::Index n, std::uint64_t seed) {
  return std::visit(
      [n, seed](const auto &p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LognormalParams>) {
          return sample_lognormal(p, n, seed);
        } else {
          return sample_mixture(p, n, seed);
        }
      },
      m);
}

}  // namespace knock
