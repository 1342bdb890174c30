#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sighedge/hedging.hpp"

using namespace sighedge;
using Catch::Approx;

namespace {

double poly_eval(const std::vector<double>& P, double x) {
  double acc = 0.0;
  for (std::size_t k = P.size(); k-- > 0;) acc = acc * x + P[k];
  return acc;
}

// Direct ensemble mean of P(F - p0 - gains + costs) from path-by-path backtests.
double direct_objective(const HedgeSolution& sol, const HedgeProblem& pb, const PathEnsemble& e, double* se = nullptr) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    const auto p = e.path_prices(i);
    const double F = evaluate_payoff(PayoffSpec::custom(pb.f), e.times, p);
    const auto bt = backtest_strategy(sol, pb, e.times, p, F);
    const double v = poly_eval(pb.risk, -bt.terminal_pnl);
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(e.n_paths);
  if (se) *se = std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n)) / n);
  return s / n;
}

HedgeSolution with_strategy(FreeTensor ell, Parametrization param) {
  HedgeSolution s;
  s.strategy = std::move(ell);
  s.param = param;
  return s;
}

FreeTensor random_functional(std::mt19937_64& rng, int d, int order, double scale) {
  std::normal_distribution<double> z(0.0, scale);
  FreeTensor t(d, order);
  for (auto& c : t.coefficients()) c = z(rng);
  return t;
}

struct Fixture {
  ModelSpec model = ModelSpec::black_scholes(0.2, 0.0);
  PathEnsemble ens = sample_paths(model, 1.0, 12, 3000, 101);
  ExpectedSignature es4 = expected_signature_mc(ens, 4);
  ExpectedSignature es6 = expected_signature_mc(ens, 6);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST_CASE("risk polynomials") {
  CHECK(risk_power(2) == std::vector<double>{0, 0, 1});
  const auto e = risk_exponential(0.5, 3);
  CHECK(e[0] == 1.0);
  CHECK(e[1] == 0.5);
  CHECK(e[2] == Approx(0.125));
  CHECK(e[3] == Approx(0.5 * 0.5 * 0.5 / 6));
  CHECK_THROWS_AS(risk_power(0), InputError);
  CHECK_THROWS_AS(risk_exponential(-1.0), InputError);
  CHECK(hedge_mode_from_string("prop_cost") == HedgeMode::prop_cost);
  CHECK_THROWS_AS(hedge_mode_from_string("nope"), InputError);
}

TEST_CASE("objective identity against path-by-path evaluation") {
  const auto& fx = fixture();
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    HedgeProblem pb;
    pb.M = trial % 2;
    pb.risk = trial < 3 ? std::vector<double>{0.1, -0.3, 1.0} : std::vector<double>{0.0, 0.2, 0.5, 1.0};
    const int q = static_cast<int>(pb.risk.size()) - 1;
    const int fdeg = q == 2 ? 3 : 2;
    pb.f = random_functional(rng, 4, fdeg, 0.3);
    pb.p0 = 0.1 * trial;
    const auto ell = random_functional(rng, 2, pb.M, 0.5);
    const auto& es = q * std::max(fdeg, pb.M + 1) <= 4 ? fx.es4 : fx.es6;
    const auto obj = assemble_objective(pb, es);
    Eigen::VectorXd x(static_cast<Eigen::Index>(obj.n_strategy));
    for (std::size_t i = 0; i < obj.n_strategy; ++i) x(static_cast<Eigen::Index>(i)) = ell[obj.words[i]];
    const double assembled = obj.poly.value(x);
    const double direct = direct_objective(with_strategy(ell, Parametrization::position), pb, fx.ens);
    CHECK(assembled == Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("speed and cost objectives match path-by-path evaluation") {
  const auto& fx = fixture();
  std::mt19937_64 rng(9);
  for (HedgeMode mode : {HedgeMode::plain, HedgeMode::fixed_cost, HedgeMode::prop_cost}) {
    HedgeProblem pb;
    pb.M = 0;
    pb.mode = mode;
    pb.param = Parametrization::speed;
    pb.alpha = mode == HedgeMode::plain ? 0.0 : 0.05;
    pb.f = random_functional(rng, 4, 2, 0.3);
    pb.p0 = 0.05;
    const auto v = random_functional(rng, 2, 0, 1.0);
    const auto obj = assemble_objective(pb, fx.es6);
    Eigen::VectorXd x(1);
    x(0) = v[Word{}];
    const double direct = direct_objective(with_strategy(v, Parametrization::speed), pb, fx.ens);
    CHECK(obj.poly.value(x) == Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("empty strategy leaves the unhedged risk") {
  const auto& fx = fixture();
  HedgeProblem pb;
  pb.M = 1;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{}, 0.3}, {Word{2, 2}, 1.0}});
  pb.p0 = 0.2;
  const auto obj = assemble_objective(pb, fx.es4);
  FreeTensor h = pb.f;
  h[Word{}] -= pb.p0;
  CHECK(obj.poly.value(Eigen::VectorXd::Zero(3)) == Approx(pair(shuffle(h, h, 4), fx.es4.tensor)).epsilon(1e-13));
}

TEST_CASE("constant hedge ratio gives the scalar quadratic") {
  const auto& fx = fixture();
  HedgeProblem pb;
  pb.M = 0;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}, {Word{2}, 0.5}});
  pb.p0 = 0.02;
  const auto obj = assemble_objective(pb, fx.es4);
  for (double lambda : {-1.0, 0.0, 0.4, 2.0}) {
    double mc = 0.0;
    for (std::size_t i = 0; i < fx.ens.n_paths; ++i) {
      const auto p = fx.ens.path_prices(i);
      const double dx = p.back() - p.front();
      const double F = 0.5 * dx * dx + 0.5 * dx;
      mc += std::pow(F - pb.p0 - lambda * dx, 2);
    }
    mc /= static_cast<double>(fx.ens.n_paths);
    Eigen::VectorXd x(1);
    x(0) = lambda;
    CHECK(obj.poly.value(x) == Approx(mc).epsilon(1e-10));
  }
}

TEST_CASE("attainable payoffs are hedged perfectly") {
  const auto& fx = fixture();
  const auto ell = FreeTensor::from_terms(2, 1, {{Word{}, 0.7}, {Word{1}, -0.3}, {Word{2}, 1.5}});
  HedgeProblem pb;
  pb.M = 1;
  pb.p0 = 0.4;
  pb.f = concat_letter(embed_lag(ell), 4);
  pb.f[Word{}] = pb.p0;
  const auto sol = solve_mean_variance(pb, fx.es4);
  CHECK(std::abs(sol.objective) < 1e-8);
  for (const Word& w : strategy_words(1)) CHECK(sol.strategy[w] == Approx(ell[w]).margin(1e-8));
  CHECK(sol.required_es_order == 4);

  const auto gen = solve_general(pb, fx.es4);
  CHECK(std::abs(gen.objective) < 1e-8);

  // Quartic risk: still a perfect hedge.
  HedgeProblem p4;
  p4.M = 0;
  p4.p0 = 0.1;
  p4.risk = risk_power(4);
  p4.f = FreeTensor::from_terms(4, 1, {{Word{}, 0.1}, {Word{4}, -0.8}});
  const auto s4 = solve_general(p4, fx.es4);
  CHECK(std::abs(s4.objective) < 1e-10);
  // The quartic is flat at its minimum, so the minimizer is only resolved to
  // about objective^(1/4).
  CHECK(s4.strategy[Word{}] == Approx(-0.8).margin(5e-3));
}

TEST_CASE("mean-variance optimality and agreement with the general solver") {
  const auto& fx = fixture();
  HedgeProblem pb;
  pb.M = 1;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}, {Word{1, 2}, 0.3}});
  pb.p0 = 0.02;
  const auto obj = assemble_objective(pb, fx.es4);
  const auto sol = solve_mean_variance(pb, fx.es4);
  Eigen::VectorXd x(static_cast<Eigen::Index>(obj.n_strategy));
  for (std::size_t i = 0; i < obj.n_strategy; ++i) x(static_cast<Eigen::Index>(i)) = sol.strategy[obj.words[i]];
  const auto q = obj.poly.quadratic();
  CHECK((q.H * x + q.g).norm() <= 1e-8 * std::max(1.0, q.g.norm()));
  CHECK(sol.objective <= obj.poly.value(Eigen::VectorXd::Zero(x.size())));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = 1e-3 * z(rng);
    CHECK(obj.poly.value(x + d) >= sol.objective - 1e-14);
  }
  const auto gen = solve_general(pb, fx.es4);
  CHECK(gen.objective == Approx(sol.objective).margin(1e-8));
}

TEST_CASE("larger strategy orders never increase the objective") {
  const auto model = ModelSpec::black_scholes(0.2);
  const LetterSet letters = 0b1011;
  const auto es = expected_signature_model(model, 1.0, 10, 1500, 5, 10, std::nullopt, letters);
  HedgeProblem pb;
  pb.f = FreeTensor::from_terms(4, 3, {{Word{2, 2}, 1.0}, {Word{2, 2, 2}, 1.0}});
  double prev = INFINITY;
  for (int M = 0; M <= 4; ++M) {
    pb.M = M;
    const auto sol = solve_mean_variance(pb, es);
    CHECK(sol.objective <= prev + 1e-12 * std::abs(prev));
    prev = sol.objective;
  }
}

TEST_CASE("order budget is enforced unless truncation is allowed") {
  const auto& fx = fixture();
  HedgeProblem pb;
  pb.M = 2;
  pb.f = FreeTensor::from_terms(4, 1, {{Word{2}, 1.0}});
  CHECK(required_es_order(pb) == 6);
  CHECK_THROWS_AS(assemble_objective(pb, fx.es4), CapacityError);
  pb.truncate = true;
  CHECK_NOTHROW(assemble_objective(pb, fx.es4));
}

TEST_CASE("letter subsets are checked against the objective") {
  const auto es = expected_signature_model(ModelSpec::black_scholes(0.2), 1.0, 10, 200, 5, 4, std::nullopt, 0b1011);
  HedgeProblem pb;
  pb.M = 1;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}});
  CHECK_NOTHROW(solve_mean_variance(pb, es));
  pb.f = FreeTensor::from_terms(4, 2, {{Word{3, 2}, 1.0}});
  CHECK_THROWS_AS(solve_mean_variance(pb, es), InputError);
}

TEST_CASE("semistatic hedging") {
  const auto& fx = fixture();
  const auto f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}, {Word{2}, 0.2}});
  HedgeProblem plain;
  plain.M = 1;
  plain.f = f;
  plain.p0 = 0.03;
  const auto base = solve_mean_variance(plain, fx.es4);

  HedgeProblem pb = plain;
  pb.mode = HedgeMode::semistatic;
  const auto empty = solve_semistatic(pb, fx.es4);
  CHECK(empty.objective == Approx(base.objective).margin(1e-12));

  FreeTensor g = f;
  g[Word{}] -= plain.p0;
  pb.basket = {g};
  const auto rep = solve_semistatic(pb, fx.es4);
  CHECK(std::abs(rep.objective) < 1e-10);
  CHECK(rep.beta[0] == Approx(1.0).margin(1e-6));
  for (const Word& w : strategy_words(1)) CHECK(std::abs(rep.strategy[w]) < 1e-6);

  // g = -(f - p0) can only make things worse for beta >= 0: the box pins beta at 0.
  pb.basket = {-1.0 * g};
  pb.beta_lower = {0.0};
  const auto boxed = solve_semistatic(pb, fx.es4);
  CHECK(boxed.beta[0] == 0.0);
  CHECK(boxed.constraint_binding);
  CHECK(boxed.objective == Approx(base.objective).epsilon(1e-10));
  // Brute force over beta on a grid.
  double best = INFINITY;
  for (double b = 0.0; b <= 2.0; b += 0.05) {
    HedgeProblem fixed = plain;
    fixed.f = (1.0 + b) * g;
    fixed.p0 = 0.0;
    best = std::min(best, solve_mean_variance(fixed, fx.es4).objective);
  }
  CHECK(boxed.objective <= best + 1e-12);
}

TEST_CASE("delayed hedging") {
  const auto& fx = fixture();
  HedgeProblem plain;
  plain.M = 1;
  plain.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}});
  plain.p0 = 0.04;
  const auto base = solve_mean_variance(plain, fx.es4);

  HedgeProblem d = plain;
  d.mode = HedgeMode::delayed;
  d.prefix = FreeTensor::unit(4, 4);
  d.p_t = plain.p0;
  const auto at0 = solve_delayed(d, fx.es4);
  CHECK(at0.objective == Approx(base.objective).margin(1e-12));

  // At maturity nothing is left to hedge.
  const auto path = fx.ens.path(3);
  const auto full = leadlag_signature(augment(path), 4).tensor;
  ExpectedSignature done;
  done.tensor = FreeTensor::unit(4, 4);
  done.standard_errors = FreeTensor(4, 4);
  done.T = 0.0;
  d.prefix = full;
  d.p_t = 0.1;
  const auto atT = solve_delayed(d, done);
  const double F = pair(plain.f, full);
  CHECK(atT.objective == Approx((F - 0.1) * (F - 0.1)).epsilon(1e-12));
}

TEST_CASE("delayed solution agrees with the full-horizon solution after t") {
  // Half the squared increment: the variance-optimal hedge is X_t - X_0.
  const auto model = ModelSpec::black_scholes(0.2);
  const LetterSet letters = 0b1011;
  const auto es = expected_signature_model(model, 1.0, 50, 40000, 3, 4, std::nullopt, letters);
  HedgeProblem pb;
  pb.M = 1;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}});
  const auto full = solve_mean_variance(pb, es);

  const auto path = sample_paths(model, 1.0, 50, 1, 99).path(0);
  const std::size_t mid = 25;
  std::vector<double> t0(path.times().begin(), path.times().begin() + mid + 1);
  std::vector<double> x0(path.values().begin(), path.values().begin() + mid + 1);
  const auto prefix = leadlag_signature(augment(DiscretePath::scalar(t0, x0)), 4).tensor;
  const auto cond = conditional_expected_signature(model, {t0.back(), x0.back(), NAN}, 1.0, 4, 40000, 4, 25, letters);
  HedgeProblem d = pb;
  d.mode = HedgeMode::delayed;
  d.prefix = prefix;
  d.start_time = t0.back();
  d.p_t = 0.0;
  const auto del = solve_delayed(d, cond);
  const auto pf = strategy_positions(full.strategy, full.param, path.times(), path.values());
  const auto pd = strategy_positions(del.strategy, del.param, path.times(), path.values());
  for (std::size_t k = mid; k + 1 < path.size(); k += 5) {
    const double delta = path.value(k) - path.value(0);
    CHECK(pd[k] == Approx(pf[k]).margin(0.03));
    CHECK(pd[k] == Approx(delta).margin(0.03));
  }
}

TEST_CASE("liquidity constraint") {
  const auto& fx = fixture();
  HedgeProblem pb;
  pb.M = 1;
  pb.mode = HedgeMode::liquidity;
  pb.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}, {Word{2}, 1.0}});
  HedgeProblem speed = pb;
  speed.mode = HedgeMode::plain;
  speed.param = Parametrization::speed;
  const auto free_sol = solve_mean_variance(speed, fx.es6);

  pb.liquidity_bound = 1e9;
  const auto loose = solve_with_liquidity(pb, fx.es6);
  CHECK(loose.objective == Approx(free_sol.objective).margin(1e-6));
  CHECK(!loose.constraint_binding);

  pb.liquidity_bound = 0.0;
  const auto zero = solve_with_liquidity(pb, fx.es6);
  CHECK(zero.strategy.degree() == -1);
  const auto obj = assemble_objective(pb, fx.es6);
  CHECK(zero.objective == Approx(obj.poly.value(Eigen::VectorXd::Zero(obj.poly.nvars()))));

  double prev = INFINITY;
  for (double b : {0.0, 0.05, 0.1, 0.3, 1.0, 3.0, 10.0}) {
    pb.liquidity_bound = b;
    const auto s = solve_with_liquidity(pb, fx.es6);
    double norm = 0.0;
    for (double c : s.strategy.coefficients()) norm += c * c;
    CHECK(std::sqrt(norm) <= b * (1 + 1e-9) + 1e-12);
    CHECK(s.objective <= prev + 1e-12);
    prev = s.objective;
  }
}

TEST_CASE("cost modes with zero intensity reduce to the speed problem") {
  const auto& fx = fixture();
  HedgeProblem speed;
  speed.M = 1;
  speed.param = Parametrization::speed;
  speed.f = FreeTensor::from_terms(4, 2, {{Word{2, 2}, 1.0}});
  const auto base = solve_mean_variance(speed, fx.es6);
  for (HedgeMode m : {HedgeMode::fixed_cost, HedgeMode::prop_cost}) {
    HedgeProblem pb = speed;
    pb.mode = m;
    pb.alpha = 0.0;
    const auto s = solve(pb, fx.es6);
    CHECK(s.objective == Approx(base.objective).margin(1e-12));
    CHECK(s.param == Parametrization::speed);
  }
  HedgeProblem costly = speed;
  costly.mode = HedgeMode::fixed_cost;
  costly.alpha = 0.01;
  CHECK(solve(costly, fx.es6).objective >= base.objective - 1e-12);
}

TEST_CASE("backtests") {
  const std::vector<double> t{0.0, 0.5, 1.0};
  const std::vector<double> x{1.0, 1.2, 0.9};
  HedgeProblem pb;
  pb.p0 = 0.3;
  const auto none = backtest_strategy(with_strategy(FreeTensor(2, 0), Parametrization::position), pb, t, x, 0.1);
  CHECK(none.terminal_pnl == Approx(0.2));
  CHECK(none.pnl.back() == Approx(0.2));
  CHECK(none.pnl.front() == 0.0);

  // Constant speed c: position c·t and cost α c² T.
  const auto v = FreeTensor::from_terms(2, 0, {{Word{}, 2.0}});
  const auto pos = strategy_positions(v, Parametrization::speed, t, x);
  CHECK(pos[1] == Approx(1.0));
  CHECK(pos[2] == Approx(2.0));
  const auto c = speed_trading_costs(v, false, t, x, 0.1);
  CHECK(c[1] + c[2] == Approx(0.1 * 4.0 * 1.0));
  const auto dc = discrete_trading_costs(pos, t, 0.1);
  CHECK(dc[1] == 0.0);
  CHECK(dc[2] == Approx(0.1 * 1.0 / 0.5));

  const auto s = summarize_pnl({1, 2, 3, 4, 5});
  CHECK(s.mean == 3.0);
  CHECK(s.std == Approx(std::sqrt(2.5)));
  CHECK(s.p05 == Approx(1.2));
  CHECK(s.p95 == Approx(4.8));
}

TEST_CASE("signature strategies reproduce their own payoff on any path") {
  std::mt19937_64 rng(4);
  const auto ell = FreeTensor::from_terms(2, 2, {{Word{}, 0.3}, {Word{2}, 1.1}, {Word{1, 2}, -0.4}});
  HedgeProblem pb;
  pb.p0 = 0.5;
  pb.f = concat_letter(embed_lag(ell), 4);
  pb.f[Word{}] = pb.p0;
  const auto e = sample_paths(ModelSpec::heston(), 1.0, 30, 20, 8);
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    const auto p = e.path_prices(i);
    const double F = evaluate_payoff(PayoffSpec::custom(pb.f), e.times, p);
    const auto bt = backtest_strategy(with_strategy(ell, Parametrization::position), pb, e.times, p, F);
    CHECK(std::abs(bt.terminal_pnl) < 1e-12);
  }
}

TEST_CASE("delta-hedge error shrinks with the rebalancing frequency") {
  const double sigma = 0.2;
  auto run = [&](int steps) {
    const auto e = sample_paths(ModelSpec::black_scholes(sigma), 1.0, steps, 2000, 12);
    std::vector<double> pnl;
    for (std::size_t i = 0; i < e.n_paths; ++i) {
      const auto p = e.path_prices(i);
      std::vector<double> pos(p.size());
      for (std::size_t k = 0; k < p.size(); ++k) pos[k] = 2.0 * p[k] * std::exp(sigma * sigma * (1.0 - e.times[k]));
      const double F = p.back() * p.back();
      pnl.push_back(backtest_positions(pos, {}, e.times, p, std::exp(sigma * sigma), F).terminal_pnl);
    }
    return summarize_pnl(pnl).std;
  };
  const double coarse = run(16), fine = run(256);
  CHECK(fine < coarse / 3.0);
}
