#ifndef KNOCK_DISTRIBUTIONS_HPP_
#define KNOCK_DISTRIBUTIONS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include <Eigen/Core>

#include "knock/dataset.hpp"
#include "knock/error.hpp"

namespace knock {

// Lognormal law: ln X ~ Normal(mu, sigma^2).
template <typename Scalar>
struct BasicLognormal {
  Scalar mu{0};
  Scalar sigma{1};
};

// Two-component lognormal mixture, a * comp1 + (1 - a) * comp2.
// Canonical labelling keeps comp1.mu <= comp2.mu.
template <typename Scalar>
struct BasicMixture {
  Scalar a{0.5};
  BasicLognormal<Scalar> comp1;
  BasicLognormal<Scalar> comp2;
};

using LognormalParams = BasicLognormal<double>;
using MixtureParams = BasicMixture<double>;

enum class Family { Lognormal, Mixture };

using Model = std::variant<LognormalParams, MixtureParams>;

std::string to_string(Family family);
Family parse_family(const std::string &name);
Family family_of(const Model &model);

void validate(const LognormalParams &p);
void validate(const MixtureParams &p);
void validate(const Model &m);

// Swaps components so that comp1.mu <= comp2.mu.
MixtureParams canonical(MixtureParams p);

namespace detail {

template <typename Scalar>
void require_support(const Scalar &x) {
  if (!(x > Scalar(0))) {
    throw DomainError("density evaluated outside (0, inf)");
  }
}

template <typename Scalar>
Scalar lognormal_logpdf_unchecked(const Scalar &x,
                                  const BasicLognormal<Scalar> &p) {
  using std::log;
  const Scalar lx = log(x);
  const Scalar z = (lx - p.mu) / p.sigma;
  return -Scalar(0.5) * z * z - lx - log(p.sigma) -
         Scalar(0.5) * Scalar(std::log(2.0 * std::numbers::pi));
}

template <typename Scalar>
Scalar lognormal_cdf_unchecked(const Scalar &x,
                               const BasicLognormal<Scalar> &p) {
  using std::erfc;
  using std::log;
  // 1/2 + 1/2 erf(t) written as 1/2 erfc(-t) for lower-tail accuracy.
  return Scalar(0.5) *
         erfc(-(log(x) - p.mu) / (p.sigma * Scalar(std::numbers::sqrt2)));
}

template <typename Scalar>
Scalar log_add_exp(const Scalar &u, const Scalar &v) {
  using std::exp;
  using std::log1p;
  const Scalar hi = u > v ? u : v;
  const Scalar lo = u > v ? v : u;
  if (hi == -std::numeric_limits<Scalar>::infinity()) return hi;
  return hi + log1p(exp(lo - hi));
}

}  // namespace detail

template <typename Scalar>
Scalar lognormal_logpdf(const Scalar &x, const BasicLognormal<Scalar> &p) {
  detail::require_support(x);
  return detail::lognormal_logpdf_unchecked(x, p);
}

template <typename Scalar>
Scalar lognormal_pdf(const Scalar &x, const BasicLognormal<Scalar> &p) {
  using std::exp;
  return exp(lognormal_logpdf(x, p));
}

template <typename Scalar>
Scalar lognormal_cdf(const Scalar &x, const BasicLognormal<Scalar> &p) {
  detail::require_support(x);
  return detail::lognormal_cdf_unchecked(x, p);
}

template <typename Scalar>
Scalar mixture_logpdf(const Scalar &x, const BasicMixture<Scalar> &p) {
  using std::log;
  detail::require_support(x);
  return detail::log_add_exp(
      log(p.a) + detail::lognormal_logpdf_unchecked(x, p.comp1),
      log(Scalar(1) - p.a) + detail::lognormal_logpdf_unchecked(x, p.comp2));
}

template <typename Scalar>
Scalar mixture_pdf(const Scalar &x, const BasicMixture<Scalar> &p) {
  return p.a * lognormal_pdf(x, p.comp1) +
         (Scalar(1) - p.a) * lognormal_pdf(x, p.comp2);
}

template <typename Scalar>
Scalar mixture_cdf(const Scalar &x, const BasicMixture<Scalar> &p) {
  return p.a * lognormal_cdf(x, p.comp1) +
         (Scalar(1) - p.a) * lognormal_cdf(x, p.comp2);
}

// Coefficient-wise overloads over Eigen arrays.

template <typename Derived>
Eigen::ArrayXd lognormal_cdf(const Eigen::ArrayBase<Derived> &x,
                             const LognormalParams &p) {
  if ((x <= 0.0).any()) throw DomainError("density evaluated outside (0, inf)");
  return x.unaryExpr(
      [&p](double v) { return detail::lognormal_cdf_unchecked(v, p); });
}

template <typename Derived>
Eigen::ArrayXd mixture_cdf(const Eigen::ArrayBase<Derived> &x,
                           const MixtureParams &p) {
  return p.a * lognormal_cdf(x, p.comp1) +
         (1.0 - p.a) * lognormal_cdf(x, p.comp2);
}

template <typename Derived>
Eigen::ArrayXd model_cdf(const Eigen::ArrayBase<Derived> &x, const Model &m) {
  return std::visit(
      [&x](const auto &p) -> Eigen::ArrayXd {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LognormalParams>) {
          return lognormal_cdf(x, p);
        } else {
          return mixture_cdf(x, p);
        }
      },
      m);
}

double model_cdf(double x, const Model &m);
double model_logpdf(double x, const Model &m);

// Closed-form maximum likelihood: mean and divide-by-N variance of ln x.
LognormalParams lognormal_mle(const Eigen::Ref<const Eigen::VectorXd> &samples);
inline LognormalParams lognormal_mle(const KIDataset &data) {
  return lognormal_mle(data.ki);
}

// Sum of log densities, evaluated in log space.
double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const LognormalParams &p);
double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const MixtureParams &p);
double log_likelihood(const Eigen::Ref<const Eigen::VectorXd> &samples,
                      const Model &m);

// Seeded draws. A mixture whose weight is within 1e-12 of 1 is sampled as
// comp1 alone.
Eigen::VectorXd sample_lognormal(const LognormalParams &p, Eigen::Index n,
                                 std::uint64_t seed);
Eigen::VectorXd sample_mixture(const MixtureParams &p, Eigen::Index n,
                               std::uint64_t seed);
Eigen::VectorXd sample_model(const Model &m, Eigen::Index n, std::uint64_t seed);

}  // namespace knock

#endif  // KNOCK_DISTRIBUTIONS_HPP_
