#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "knock/distributions.hpp"
#include "knock/em.hpp"
#include "knock/error.hpp"
#include "knock/rng.hpp"

using namespace knock;

namespace {

double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_density(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

const MixtureParams kRecovery{0.7, {-1.0, 0.4}, {1.0, 0.5}};

// Integral of f over (0, inf), split at `mid` so both halves are smooth.
template <typename F>
double integrate_positive(F f, double mid) {
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  return gauss_kronrod<double, 61>::integrate(f, 0.0, mid, 15, 1e-12) +
         gauss_kronrod<double, 61>::integrate(f, mid, inf, 15, 1e-12);
}

}  // namespace

TEST_CASE("lognormal pdf values") {
  const LognormalParams std_ln{0.0, 1.0};
  CHECK(lognormal_pdf(1.0, std_ln) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  const double oracle = (1.0 / std::numbers::e) * normal_density(1.0);
  CHECK(oracle == doctest::Approx(0.08901605491595148).epsilon(1e-14));
  CHECK(lognormal_pdf(std::numbers::e, std_ln) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK_THROWS_AS(lognormal_pdf(0.0, std_ln), DomainError);
  CHECK_THROWS_AS(lognormal_pdf(-1.0, std_ln), DomainError);
}

TEST_CASE("lognormal cdf values") {
  const LognormalParams p{0.3, 0.7};
  CHECK(lognormal_cdf(std::exp(0.3), p) == doctest::Approx(0.5).epsilon(1e-15));
  const LognormalParams std_ln{0.0, 1.0};
  CHECK(phi(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-14));
  CHECK(lognormal_cdf(std::numbers::e, std_ln) == doctest::Approx(phi(1.0)).epsilon(1e-14));
  CHECK(std::abs(lognormal_cdf(1e9, std_ln) - 1.0) <= 1e-12);
  CHECK(lognormal_cdf(1e-300, std_ln) >= 0.0);
  CHECK_THROWS_AS(lognormal_cdf(0.0, std_ln), DomainError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(validate(LognormalParams{0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(validate(LognormalParams{NAN, 1.0}), DomainError);
  CHECK_THROWS_AS(validate(MixtureParams{1.0, {0, 1}, {1, 1}}), DomainError);
  CHECK_THROWS_AS(validate(MixtureParams{0.0, {0, 1}, {1, 1}}), DomainError);
  CHECK_NOTHROW(validate(MixtureParams{0.3, {0, 1}, {1, 1}}));
}

TEST_CASE("canonical order swaps labels and weight") {
  const MixtureParams c = canonical(MixtureParams{0.3, {2.0, 0.5}, {-1.0, 0.2}});
  CHECK(c.a == doctest::Approx(0.7));
  CHECK(c.comp1.mu == -1.0);
  CHECK(c.comp2.sigma == 0.5);
}

TEST_CASE("mixture pdf") {
  const LognormalParams c1{-0.4, 0.6};
  for (const double x : {0.05, 0.3, 1.0, 2.5, 9.0}) {
    CHECK(mixture_pdf(x, MixtureParams{1.0 - 1e-15, c1, {2.0, 0.3}}) ==
          doctest::Approx(lognormal_pdf(x, c1)).epsilon(1e-12));
    CHECK(mixture_pdf(x, MixtureParams{0.5, c1, c1}) ==
          doctest::Approx(lognormal_pdf(x, c1)).epsilon(1e-14));
  }
  const double f1 = normal_density(2.5) / 0.4;
  const double f2 = normal_density(2.0) / 0.5;
  const double oracle = 0.7 * f1 + 0.3 * f2;
  CHECK(oracle == doctest::Approx(0.06306910577165777).epsilon(1e-13));
  CHECK(mixture_pdf(1.0, kRecovery) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK_THROWS_AS(mixture_pdf(0.0, kRecovery), DomainError);
}

TEST_CASE("mixture cdf") {
  const LognormalParams c{0.2, 0.9};
  CHECK(mixture_cdf(std::exp(0.2), MixtureParams{0.3, c, c}) == doctest::Approx(0.5));
  CHECK(mixture_cdf(1.0, MixtureParams{0.5, {0.0, 0.3}, {0.0, 2.0}}) == doctest::Approx(0.5));
  const double oracle = 0.7 * phi(2.5) + 0.3 * phi(-2.0);
  CHECK(oracle == doctest::Approx(0.7024782738564105).epsilon(1e-13));
  CHECK(mixture_cdf(1.0, kRecovery) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK_THROWS_AS(mixture_cdf(-2.0, kRecovery), DomainError);
}

TEST_CASE("mixture cdf identity is exact") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const MixtureParams p{0.05 + 0.9 * rng.uniform(),
                          {rng.normal(), 0.1 + rng.uniform()},
                          {rng.normal(), 0.1 + rng.uniform()}};
    const double x = std::exp(2.0 * rng.normal());
    CHECK(mixture_cdf(x, p) ==
          p.a * lognormal_cdf(x, p.comp1) + (1.0 - p.a) * lognormal_cdf(x, p.comp2));
  }
}

TEST_CASE("array cdf matches the scalar form") {
  const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(50, 0.01, 6.0);
  const Eigen::ArrayXd f = mixture_cdf(x, kRecovery);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(f[i] == mixture_cdf(x[i], kRecovery));
  const Eigen::ArrayXd g = model_cdf(x, Model{LognormalParams{0.1, 0.5}});
  CHECK(g[7] == lognormal_cdf(x[7], LognormalParams{0.1, 0.5}));
}

TEST_CASE("densities integrate to one") {
  Rng rng(2024);
  for (int i = 0; i < 12; ++i) {
    const LognormalParams ln{rng.normal(), 0.2 + 1.3 * rng.uniform()};
    const double total = integrate_positive(
        [&](double x) { return x > 0.0 ? lognormal_pdf(x, ln) : 0.0; }, std::exp(ln.mu));
    CAPTURE(ln.mu);
    CAPTURE(ln.sigma);
    CHECK(std::abs(total - 1.0) <= 1e-6);

    const MixtureParams mx{0.1 + 0.8 * rng.uniform(),
                           {rng.normal() - 1.0, 0.2 + rng.uniform()},
                           {rng.normal() + 1.0, 0.2 + rng.uniform()}};
    const double mixed = integrate_positive(
        [&](double x) { return x > 0.0 ? mixture_pdf(x, mx) : 0.0; }, 1.0);
    CHECK(std::abs(mixed - 1.0) <= 1e-6);
  }
}

TEST_CASE("cdf equals the integrated pdf") {
  using boost::math::quadrature::gauss_kronrod;
  const MixtureParams mx{0.4, {-0.8, 0.5}, {0.9, 0.35}};
  double prev = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double x = std::exp(-3.0 + 6.0 * i / 100.0);
    const double integral = gauss_kronrod<double, 61>::integrate(
        [&](double t) { return t > 0.0 ? mixture_pdf(t, mx) : 0.0; }, 0.0, x, 15, 1e-12);
    const double f = mixture_cdf(x, mx);
    CHECK(std::abs(f - integral) <= 1e-6);
    CHECK(f >= prev);
    prev = f;
  }
}

TEST_CASE("lognormal_mle follows the closed form") {
  const Eigen::VectorXd two{{1.0, std::exp(2.0)}};
  const LognormalParams p = lognormal_mle(two);
  CHECK(p.mu == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p.sigma * p.sigma == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(lognormal_mle(Eigen::VectorXd::Constant(20, std::exp(3.0))), DegenerateError);
  CHECK_THROWS_AS(lognormal_mle(Eigen::VectorXd::Constant(1, 2.0)), InsufficientDataError);
  CHECK_THROWS_AS(lognormal_mle(Eigen::VectorXd{{1.0, -1.0, 2.0}}), DomainError);

  // exact arithmetic on ln x, divide-by-N variance
  const Eigen::VectorXd x = sample_lognormal({0.4, 0.9}, 200, 5);
  const Eigen::ArrayXd y = x.array().log();
  double mean = 0.0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (const double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(y.size());
  const LognormalParams q = lognormal_mle(x);
  CHECK(q.mu == doctest::Approx(mean).epsilon(1e-14));
  CHECK(q.sigma == doctest::Approx(std::sqrt(var)).epsilon(1e-14));
}

TEST_CASE("lognormal_mle matches a numeric maximization") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng rng(derive_seed(99, s));
    const LognormalParams truth{2.0 * rng.normal(), 0.2 + 1.5 * rng.uniform()};
    const Eigen::VectorXd x = sample_lognormal(truth, 50 + 40 * static_cast<Eigen::Index>(s), s);
    const LognormalParams mle = lognormal_mle(x);

    // coordinate ascent with Brent line searches
    double mu = 0.0, sigma = 1.0;
    for (int sweep = 0; sweep < 6; ++sweep) {
      mu = boost::math::tools::brent_find_minima(
               [&](double m) { return -log_likelihood(x, LognormalParams{m, sigma}); },
               -10.0, 10.0, 50).first;
      sigma = boost::math::tools::brent_find_minima(
                  [&](double sg) { return -log_likelihood(x, LognormalParams{mu, sg}); },
                  0.01, 10.0, 50).first;
    }
    CAPTURE(s);
    CHECK(std::abs(mu - mle.mu) <= 1e-4);
    CHECK(std::abs(sigma - mle.sigma) <= 1e-4);
  }
}

TEST_CASE("lognormal_mle sampling accuracy") {
  const LognormalParams truth{0.5, 0.8};
  const double n = 1116.0;
  int pass = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const LognormalParams p = lognormal_mle(sample_lognormal(truth, 1116, s));
    pass += std::abs(p.mu - 0.5) <= 3 * 0.8 / std::sqrt(n) &&
            std::abs(p.sigma - 0.8) <= 3 * 0.8 / std::sqrt(2 * n);
  }
  CHECK(pass >= 99);
}

TEST_CASE("lognormal_mle under scaling") {
  const Eigen::VectorXd x = sample_lognormal({-0.2, 0.6}, 300, 8);
  const LognormalParams p = lognormal_mle(x);
  for (const double c : {0.01, 3.0, 250.0}) {
    const LognormalParams q = lognormal_mle(Eigen::VectorXd(c * x));
    CHECK(q.mu == doctest::Approx(p.mu + std::log(c)).epsilon(1e-12));
    CHECK(q.sigma == doctest::Approx(p.sigma).epsilon(1e-10));
  }
}

TEST_CASE("sampling is deterministic") {
  const Eigen::VectorXd a = sample_mixture(kRecovery, 1116, 42);
  const Eigen::VectorXd b = sample_mixture(kRecovery, 1116, 42);
  CHECK((a.array() == b.array()).all());
  CHECK((a.array() != sample_mixture(kRecovery, 1116, 43).array()).any());
  CHECK((a.array() > 0.0).all());
  CHECK_THROWS_AS(sample_mixture(kRecovery, 0, 1), PreconditionError);
  CHECK_THROWS_AS(sample_lognormal({0, 1}, 0, 1), PreconditionError);
}

TEST_CASE("sampling frozen prefix") {
  // First draws of two seeded streams; guards reproducibility across builds.
  const Eigen::VectorXd ln = sample_lognormal({0.0, 1.0}, 3, 7);
  CHECK(ln[0] == doctest::Approx(0.37811273856744193).epsilon(1e-14));
  CHECK(ln[1] == doctest::Approx(2.3933526536986416).epsilon(1e-14));
  CHECK(ln[2] == doctest::Approx(4.2852468597479048).epsilon(1e-14));
  const Eigen::VectorXd mx = sample_mixture(kRecovery, 3, 7);
  CHECK(mx[0] == doctest::Approx(3.3803214179850869).epsilon(1e-14));
  CHECK(mx[1] == doctest::Approx(2.381911946725324).epsilon(1e-14));
  CHECK(mx[2] == doctest::Approx(5.8740322728386918).epsilon(1e-14));
}

TEST_CASE("near-unit weight samples the first component") {
  const MixtureParams p{1.0 - 1e-13, {0.3, 0.5}, {5.0, 0.1}};
  const Eigen::Index n = 1000000;
  const Eigen::VectorXd x = sample_mixture(p, n, 17);
  const double ln_mean = x.array().log().mean();
  CHECK(std::abs(ln_mean - 0.3) <= 4 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sample moments") {
  const Eigen::VectorXd x = sample_mixture(kRecovery, 200000, 3);
  const Eigen::ArrayXd y = x.array().log();
  const double mean = 0.7 * -1.0 + 0.3 * 1.0;
  const double var = 0.7 * (0.16 + 1.0) + 0.3 * (0.25 + 1.0) - mean * mean;
  CHECK(std::abs(y.mean() - mean) <= 4 * std::sqrt(var / 200000.0));
  const double frac_low = (y < 0.0).cast<double>().mean();
  CHECK(frac_low == doctest::Approx(0.7 * phi(2.5) + 0.3 * phi(-2.0)).epsilon(0.01));
}

TEST_CASE("log_likelihood") {
  CHECK(log_likelihood(Eigen::VectorXd::Ones(1), LognormalParams{0.0, 1.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  const Eigen::VectorXd x = sample_mixture(kRecovery, 1116, 4);
  const LognormalParams ln{0.1, 0.8};
  CHECK(log_likelihood(x, MixtureParams{1.0 - 1e-15, ln, {3.0, 0.2}}) ==
        doctest::Approx(log_likelihood(x, ln)).epsilon(1e-10));
  double naive = 0.0;
  for (const double v : x) naive += std::log(mixture_pdf(v, kRecovery));
  CHECK(log_likelihood(x, kRecovery) == doctest::Approx(naive).epsilon(1e-9));
  CHECK(log_likelihood(x, Model{kRecovery}) == log_likelihood(x, kRecovery));
  CHECK_THROWS_AS(log_likelihood(Eigen::VectorXd{{1.0, 0.0}}, ln), DomainError);
}

TEST_CASE("log_likelihood survives far tails") {
  const Eigen::VectorXd x{{1e-200, 1e200}};
  CHECK(std::isfinite(log_likelihood(x, kRecovery)));
}

TEST_CASE("EM guards") {
  CHECK_THROWS_AS(mixture_em(Eigen::VectorXd(sample_mixture(kRecovery, 5, 1))),
                  InsufficientDataError);
  // identical values do not collapse the weight; both components pin at the floor
  const EMResult flat = mixture_em(Eigen::VectorXd::Constant(50, 2.0));
  CHECK(flat.params.comp1.sigma == doctest::Approx(1e-3));
  CHECK(flat.params.comp2.mu == doctest::Approx(std::log(2.0)));
  EMConfig bad;
  bad.restarts = 0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
  bad = {};
  bad.variance_floor = 0.0;
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("EM nests the lognormal") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Eigen::VectorXd x = sample_lognormal({0.2, 0.6}, 1116, s);
    const EMResult r = mixture_em(x, EMConfig{.seed = s});
    CHECK(r.log_likelihood >= log_likelihood(x, lognormal_mle(x)) - 1e-9);
  }
}

TEST_CASE("EM result is self-consistent") {
  const Eigen::VectorXd x = sample_mixture(kRecovery, 1116, 21);
  const EMResult r = mixture_em(x);
  CHECK(r.params.comp1.mu <= r.params.comp2.mu);
  CHECK(r.log_likelihood == doctest::Approx(log_likelihood(x, r.params)).epsilon(1e-12));
  CHECK(r.trace.back() == doctest::Approx(r.log_likelihood).epsilon(1e-12));
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-10);
  const EMResult again = mixture_em(x);
  CHECK(again.params.a == r.params.a);
  CHECK(again.params.comp2.sigma == r.params.comp2.sigma);
}

TEST_CASE("EM log-likelihood never falls") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Eigen::VectorXd x = sample_mixture(kRecovery, 400, s);
    for (int restarts : {1, 5}) {
      EMConfig cfg;
      cfg.restarts = restarts;
      cfg.seed = s;
      const EMResult r = mixture_em(x, cfg);
      for (std::size_t i = 1; i < r.trace.size(); ++i) {
        CHECK(r.trace[i] >= r.trace[i - 1] - 1e-10);
      }
    }
  }
}

TEST_CASE("EM recovers well separated components") {
  std::vector<double> ea, em1, em2, es1, es2;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const EMResult r = mixture_em(sample_mixture(kRecovery, 1116, 1000 + s), EMConfig{.seed = s});
    ea.push_back(std::abs(r.params.a - 0.7));
    em1.push_back(std::abs(r.params.comp1.mu + 1.0));
    em2.push_back(std::abs(r.params.comp2.mu - 1.0));
    es1.push_back(std::abs(r.params.comp1.sigma - 0.4));
    es2.push_back(std::abs(r.params.comp2.sigma - 0.5));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + 50, v.end());
    return v[50];
  };
  CHECK(median(ea) < 0.05);
  CHECK(median(em1) < 0.1);
  CHECK(median(em2) < 0.1);
  CHECK(median(es1) < 0.08);
  CHECK(median(es2) < 0.08);
}

TEST_CASE("family names") {
  CHECK(parse_family("lognormal") == Family::Lognormal);
  CHECK(parse_family("mixture") == Family::Mixture);
  CHECK_THROWS_AS(parse_family("gamma"), UsageError);
  CHECK(to_string(Family::Mixture) == "mixture");
  CHECK(family_of(Model{kRecovery}) == Family::Mixture);
}
