#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sighedge/payoffs.hpp"

using namespace sighedge;
using Catch::Approx;

namespace {

std::vector<double> trap_mean(std::span<const double> t, std::span<const double> x) {
  double area = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) area += 0.5 * (x[k] + x[k - 1]) * (t[k] - t[k - 1]);
  return {area / (t.back() - t.front())};
}

}  // namespace

TEST_CASE("evaluate_payoff on a hand-made path") {
  const std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> x{1.0, 1.2, 0.9, 1.1, 1.05};
  CHECK(evaluate_payoff(PayoffSpec::forward(1.0), t, x) == Approx(0.05));
  CHECK(evaluate_payoff(PayoffSpec::call(1.0), t, x) == Approx(0.05));
  CHECK(evaluate_payoff(PayoffSpec::call(1.1), t, x) == 0.0);
  CHECK(evaluate_payoff(PayoffSpec::put(1.1), t, x) == Approx(0.05));
  CHECK(evaluate_payoff(PayoffSpec::asian_call(1.0), t, x) == Approx(0.05));
  CHECK(evaluate_payoff(PayoffSpec::barrier_call(1.0, 1.3), t, x) == Approx(0.05));
  CHECK(evaluate_payoff(PayoffSpec::barrier_call(1.0, 1.2), t, x) == 0.0);
  CHECK(evaluate_payoff(PayoffSpec::lookback(), t, x) == Approx(0.15));
  double rv = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) rv += std::pow(std::log(x[k] / x[k - 1]), 2);
  CHECK(evaluate_payoff(PayoffSpec::variance_swap(0.01), t, x) == Approx(rv - 0.01));

  const std::vector<double> flat(5, 1.0);
  CHECK(evaluate_payoff(PayoffSpec::forward(0.9), t, flat) == Approx(0.1));

  const std::vector<double> neg{1.0, -0.1, 1.0, 1.0, 1.0};
  CHECK_THROWS_AS(evaluate_payoff(PayoffSpec::variance_swap(0.0), t, neg), InputError);
  CHECK_THROWS_AS(PayoffSpec::barrier_call(1.0, 0.9).validate(1.0), InputError);
  CHECK(payoff_kind_from_string("asian_call") == PayoffKind::asian_call);
  CHECK_THROWS_AS(payoff_kind_from_string("american"), InputError);
}

TEST_CASE("signature forms of the forward and the Asian forward") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> t{0.0}, x{1.0};
    for (int k = 0; k < 12; ++k) {
      t.push_back(t.back() + 0.05 + 0.1 * std::abs(z(rng)));
      x.push_back(x.back() * std::exp(0.1 * z(rng)));
    }
    const double T = t.back();
    const double K = 0.95;
    const auto fwd = FreeTensor::from_terms(4, 1, {{Word{}, 1.0 - K}, {Word{2}, 1.0}});
    CHECK(evaluate_payoff(PayoffSpec::custom(fwd), t, x) == Approx(x.back() - K).epsilon(1e-12));
    const auto asian = FreeTensor::from_terms(4, 2, {{Word{}, 1.0 - K}, {Word{2, 1}, 1.0 / T}});
    CHECK(evaluate_payoff(PayoffSpec::custom(asian), t, x) == Approx(trap_mean(t, x)[0] - K).margin(1e-10));
  }
}

TEST_CASE("regression recovers linear signature payoffs") {
  const auto model = ModelSpec::black_scholes(0.2, 0.0);
  const auto train = sample_paths(model, 1.0, 20, 800, 3);
  const auto test = sample_paths(model, 1.0, 20, 200, 4);
  const SignatureDesign design(train, 3);

  const auto fwd = design.fit(PayoffSpec::forward(1.1));
  CHECK(fwd.diagnostics.r2 == Approx(1.0).margin(1e-10));
  CHECK(fwd.f.dimension() == 4);
  for (std::size_t i = 0; i < test.n_paths; ++i) {
    const auto p = test.path_prices(i);
    const double pred = pair(fwd.f, leadlag_signature(augment(test.times, p), 3).tensor);
    CHECK(pred == Approx(p.back() - 1.1).margin(1e-7));
  }

  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  FreeTensor f0(4, 3);
  for (auto& c : f0.coefficients()) c = z(rng);
  const auto fit = design.fit(PayoffSpec::custom(f0));
  double sst = 0, ssr = 0, mean = 0;
  std::vector<double> y, yhat;
  for (std::size_t i = 0; i < test.n_paths; ++i) {
    const auto S = leadlag_signature(augment(test.times, test.path_prices(i)), 3).tensor;
    y.push_back(pair(f0, S));
    yhat.push_back(pair(fit.f, S));
    mean += y.back();
  }
  mean /= static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    sst += (y[i] - mean) * (y[i] - mean);
    ssr += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  }
  CHECK(1.0 - ssr / sst > 1.0 - 1e-8);
}

TEST_CASE("regression needs a ridge when the design is collinear") {
  const auto e = sample_paths(ModelSpec::black_scholes(0.2), 1.0, 10, 100, 3);
  // Time words are constant across paths, so the unregularized normal matrix is singular.
  CHECK_THROWS_AS(SignatureDesign(e, 3, 0.0), NumericalError);
  CHECK_THROWS_AS(SignatureDesign(e, 1), InputError);
  CHECK_THROWS_AS(SignatureDesign(e, 3, -1.0), InputError);
}

TEST_CASE("constant targets report undefined R2") {
  const auto e = sample_paths(ModelSpec::black_scholes(0.2), 1.0, 10, 100, 3);
  const auto fit = SignatureDesign(e, 2).fit(PayoffSpec::custom(FreeTensor::unit(4, 0)));
  CHECK(std::isnan(fit.diagnostics.r2));
}

TEST_CASE("Asian call on Heston is well approximated at order 5") {
  const auto e = sample_paths(ModelSpec::heston(0.0), 1.0, 50, 5000, 17);
  // The order-5 fit of the kink loses accuracy as the strike moves up: about
  // 0.994 at K = 0.9, 0.985 at the money, 0.95 at K = 1.1.
  const SignatureDesign design(e, 5);
  CHECK(design.fit(PayoffSpec::asian_call(0.9)).diagnostics.r2 >= 0.99);
  CHECK(design.fit(PayoffSpec::asian_call(1.0)).diagnostics.r2 >= 0.98);
}

TEST_CASE("letter-subset designs embed into the full alphabet") {
  const auto e = sample_paths(ModelSpec::black_scholes(0.2), 1.0, 20, 600, 5);
  const SignatureDesign design(e, 4, std::nullopt, 0, 0b1011);
  CHECK(!design.full_alphabet());
  const auto fit = design.fit(PayoffSpec::forward(1.0));
  CHECK(fit.f.dimension() == 4);
  CHECK(fit.diagnostics.r2 == Approx(1.0).margin(1e-10));
  CHECK((fit.f.letters_used() & 0b0100U) == 0U);
}

TEST_CASE("pricing against expected signatures") {
  const double r = 0.02;
  const auto model = ModelSpec::black_scholes(0.2, r);
  const auto es = expected_signature_model(model, 1.0, 20, 40000, 6, 3);
  const auto des = expected_signature_model(model, 1.0, 20, 40000, 6, 3, r);

  CHECK(price_payoff(FreeTensor::unit(4, 0), des) == Approx(0.98020).epsilon(1e-5));

  const auto w2 = FreeTensor::from_terms(4, 1, {{Word{2}, 1.0}});
  CHECK(std::abs(price_payoff(w2, es) - (std::exp(r) - 1.0)) < 3.0 * es.standard_errors[Word{2}]);

  const auto fwd = FreeTensor::from_terms(4, 1, {{Word{}, 0.0}, {Word{2}, 1.0}});
  const double Z = std::exp(-r);
  CHECK(std::abs(price_payoff(fwd, des) - Z * (std::exp(r) - 1.0)) < 3.0 * des.standard_errors[Word{2}]);

  // Linearity.
  const auto g = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}, {Word{1}, -0.5}});
  CHECK(price_payoff(2.0 * fwd + (-3.0) * g, es) ==
        Approx(2.0 * price_payoff(fwd, es) - 3.0 * price_payoff(g, es)).epsilon(1e-13));

  CHECK_THROWS_AS(price_payoff(FreeTensor::from_terms(4, 4, {{Word{2, 2, 2, 2}, 1.0}}), es), CapacityError);
  CHECK_THROWS_AS(price_payoff(FreeTensor::unit(2, 0), es), InputError);
}

TEST_CASE("fitted call prices decrease with strike") {
  const auto model = ModelSpec::black_scholes(0.2, 0.0);
  const auto e = sample_paths(model, 1.0, 20, 2000, 10);
  const SignatureDesign design(e, 4);
  const auto es = expected_signature_model(model, 1.0, 20, 20000, 11, 4);
  double prev = INFINITY;
  for (double K = 0.8; K <= 1.2001; K += 0.05) {
    const double p = price_payoff(design.fit(PayoffSpec::call(K)), es);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}
