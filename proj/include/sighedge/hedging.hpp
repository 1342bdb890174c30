#pragma once

// Polynomial hedging reduced to the shuffle algebra: the expected risk of a
// linear signature strategy is an explicit polynomial in the strategy
// coefficients, assembled from pairings with an expected signature.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/leadlag.hpp"
#include "sighedge/market.hpp"
#include "sighedge/payoffs.hpp"
#include "sighedge/polynomial.hpp"
#include "sighedge/signature.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

enum class HedgeMode { plain, fixed_cost, prop_cost, liquidity, semistatic, delayed };

// Position strategies hold ⟨ℓ, S_{0,t}⟩; speed strategies trade at rate
// ⟨v, S_{0,t}⟩ and hold ⟨v1, S_{0,t}⟩.
enum class Parametrization { position, speed };

inline std::string to_string(HedgeMode m) {
  switch (m) {
    case HedgeMode::plain: return "plain";
    case HedgeMode::fixed_cost: return "fixed_cost";
    case HedgeMode::prop_cost: return "prop_cost";
    case HedgeMode::liquidity: return "liquidity";
    case HedgeMode::semistatic: return "semistatic";
    case HedgeMode::delayed: return "delayed";
  }
  return "unknown";
}

inline HedgeMode hedge_mode_from_string(const std::string& s) {
  for (auto m : {HedgeMode::plain, HedgeMode::fixed_cost, HedgeMode::prop_cost, HedgeMode::liquidity,
                 HedgeMode::semistatic, HedgeMode::delayed})
    if (to_string(m) == s) return m;
  throw InputError("unknown hedge mode '" + s + "'");
}

inline std::string to_string(Parametrization p) { return p == Parametrization::speed ? "speed" : "position"; }

inline Parametrization parametrization_from_string(const std::string& s) {
  if (s == "speed") return Parametrization::speed;
  if (s == "position") return Parametrization::position;
  throw InputError("unknown parametrization '" + s + "'");
}

// P(x) = x^q.
inline std::vector<double> risk_power(int q) {
  if (q < 1) throw InputError("risk degree must be >= 1");
  std::vector<double> p(static_cast<std::size_t>(q) + 1, 0.0);
  p.back() = 1.0;
  return p;
}

// Taylor polynomial of exp(λx) where x is the hedging loss F - p0 - gains.
inline std::vector<double> risk_exponential(double lambda, int degree = 6) {
  if (degree < 1) throw InputError("Taylor degree must be >= 1");
  if (!(lambda > 0.0)) throw InputError("risk aversion must be > 0");
  std::vector<double> p(static_cast<std::size_t>(degree) + 1);
  double c = 1.0;
  for (int k = 0; k <= degree; ++k) {
    p[static_cast<std::size_t>(k)] = c;
    c *= lambda / (k + 1);
  }
  return p;
}

struct HedgeProblem {
  std::vector<double> risk = risk_power(2);  // P coefficients a_0..a_q
  FreeTensor f;                               // payoff functional over 4 letters
  double p0 = 0.0;
  int M = 0;  // strategy order
  HedgeMode mode = HedgeMode::plain;
  Parametrization param = Parametrization::position;
  double alpha = 0.0;
  double liquidity_bound = std::numeric_limits<double>::infinity();
  std::vector<FreeTensor> basket;
  std::vector<double> beta_lower, beta_upper;  // empty means unbounded
  FreeTensor prefix;                           // lead-lag signature over [0, t]
  double start_time = 0.0;                     // t, for delayed hedging
  double p_t = 0.0;
  bool truncate = false;  // drop shuffle terms above the es order instead of failing

  Parametrization effective_param() const {
    switch (mode) {
      case HedgeMode::fixed_cost:
      case HedgeMode::prop_cost:
      case HedgeMode::liquidity: return Parametrization::speed;
      default: return param;
    }
  }

  bool has_box() const { return !beta_lower.empty() || !beta_upper.empty(); }

  void validate() const {
    int q = -1;
    for (std::size_t k = 0; k < risk.size(); ++k)
      if (risk[k] != 0.0) q = static_cast<int>(k);
    if (q < 1) throw InputError("risk polynomial must have degree >= 1");
    for (double a : risk)
      if (!std::isfinite(a)) throw InputError("risk coefficients must be finite");
    if (f.dimension() != kLeadLagDim) throw InputError("payoff functional must be over 4 letters");
    if (M < 0) throw InputError("strategy order must be >= 0");
    if (!std::isfinite(p0) || !std::isfinite(p_t)) throw InputError("initial capital must be finite");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("cost intensity must be finite and >= 0");
    if (!(liquidity_bound >= 0.0)) throw InputError("liquidity bound must be >= 0");
    for (const auto& g : basket)
      if (g.dimension() != kLeadLagDim) throw InputError("basket payoffs must be over 4 letters");
    if (!beta_lower.empty() && beta_lower.size() != basket.size())
      throw InputError("beta lower bounds must match the basket size");
    if (!beta_upper.empty() && beta_upper.size() != basket.size())
      throw InputError("beta upper bounds must match the basket size");
    for (std::size_t i = 0; i < beta_lower.size() && i < beta_upper.size(); ++i)
      if (beta_lower[i] > beta_upper[i]) throw InputError("empty beta box");
    if (mode == HedgeMode::delayed && prefix.dimension() != kLeadLagDim)
      throw InputError("delayed hedging needs a lead-lag prefix signature");
  }
};

struct HedgeSolution {
  FreeTensor strategy;  // over letters {1 time, 2 price}
  std::vector<double> beta;
  double objective = 0.0;
  int required_es_order = 0;
  HedgeMode mode = HedgeMode::plain;
  Parametrization param = Parametrization::position;
  bool constraint_binding = false;
};

// Words over {1, 2} of length <= M, level by level in canonical order.
inline std::vector<Word> strategy_words(int M) {
  std::vector<Word> out;
  for (int k = 0; k <= M; ++k)
    for (std::size_t i = 0; i < level_size(2, k); ++i) out.push_back(word_at(2, k, i));
  return out;
}

inline FreeTensor unit_functional(int dimension, const Word& w) {
  return FreeTensor::from_terms(dimension, static_cast<int>(w.size()), {{w, 1.0}});
}

// Functional whose lead-lag pairing is the terminal gain of the unit
// strategy w: w4 for positions, w14 for speeds.
inline FreeTensor gains_functional(const Word& w, Parametrization param) {
  const FreeTensor lag = embed_lag(unit_functional(2, w));
  const Word tail = param == Parametrization::speed ? Word{1, 4} : Word{4};
  return concat(lag, tail, static_cast<int>(w.size() + tail.size()));
}

namespace detail {

inline int risk_degree(const std::vector<double>& P) {
  int q = -1;
  for (std::size_t k = 0; k < P.size(); ++k)
    if (P[k] != 0.0) q = static_cast<int>(k);
  return q;
}

struct ObjectiveTerm {
  FreeTensor tensor;
  std::vector<int> vars;
};

// h(x) = h0 + Σ x_i h_i + Σ x_i x_j h_ij, the argument of P^⧢.
inline std::vector<ObjectiveTerm> build_terms(const HedgeProblem& pb, const std::vector<Word>& words) {
  const auto param = pb.effective_param();
  const int n = static_cast<int>(words.size());
  std::vector<ObjectiveTerm> terms;

  FreeTensor h0 = pb.f;
  h0[Word{}] -= pb.mode == HedgeMode::delayed ? pb.p_t : pb.p0;
  terms.push_back({std::move(h0), {}});

  for (int i = 0; i < n; ++i) {
    FreeTensor e = gains_functional(words[static_cast<std::size_t>(i)], param);
    FreeTensor h = -1.0 * e;
    if (pb.mode == HedgeMode::delayed) {
      // Gains already realized on [0, t] are known and return to cash.
      h[Word{}] += pair(e, pb.prefix);
    }
    terms.push_back({std::move(h), {i}});
  }
  if (pb.mode == HedgeMode::semistatic) {
    for (std::size_t j = 0; j < pb.basket.size(); ++j)
      terms.push_back({-1.0 * pb.basket[j], {n + static_cast<int>(j)}});
  }
  const bool fixed = pb.mode == HedgeMode::fixed_cost;
  const bool prop = pb.mode == HedgeMode::prop_cost;
  if ((fixed || prop) && pb.alpha > 0.0) {
    // α ∫ speed² du = α (v⧢v)1, and the proportional analogue uses v⧢(2+∅).
    std::vector<FreeTensor> base;
    for (const auto& w : words) {
      FreeTensor u = embed_lag(unit_functional(2, w));
      if (prop) {
        const FreeTensor two_plus_one = FreeTensor::from_terms(kLeadLagDim, 1, {{Word{}, 1.0}, {Word{2}, 1.0}});
        u = shuffle(u, two_plus_one, u.order() + 1);
      }
      base.push_back(std::move(u));
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const auto& a = base[static_cast<std::size_t>(i)];
        const auto& b = base[static_cast<std::size_t>(j)];
        const FreeTensor sq = shuffle(a, b, a.order() + b.order());
        const double mult = i == j ? 1.0 : 2.0;
        terms.push_back({mult * pb.alpha * concat_letter(sq, 1, sq.order() + 1), {i, j}});
      }
  }
  return terms;
}

inline int terms_degree(const std::vector<ObjectiveTerm>& terms) {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, t.tensor.degree());
  return d;
}

}  // namespace detail

inline int required_es_order(const HedgeProblem& pb) {
  pb.validate();
  const auto terms = detail::build_terms(pb, strategy_words(pb.M));
  return detail::risk_degree(pb.risk) * detail::terms_degree(terms);
}

struct AssembledObjective {
  Polynomial poly;
  std::vector<Word> words;
  std::size_t n_strategy = 0;
  std::size_t n_beta = 0;
  int required_order = 0;
  Parametrization param = Parametrization::position;
};

// Expands ⟨P^⧢(h(x)), es⟩ into a polynomial in x. Products of all but the
// last factor are materialized; the last factor is paired directly.
inline AssembledObjective assemble_objective_tensor(const HedgeProblem& pb, const FreeTensor& es,
                                                    LetterSet letters) {
  pb.validate();
  if (es.dimension() != kLeadLagDim) throw InputError("expected signature must be over 4 letters");
  AssembledObjective out;
  out.words = strategy_words(pb.M);
  out.n_strategy = out.words.size();
  out.n_beta = pb.mode == HedgeMode::semistatic ? pb.basket.size() : 0;
  out.param = pb.effective_param();
  const auto terms = detail::build_terms(pb, out.words);
  const int q = detail::risk_degree(pb.risk);
  out.required_order = q * detail::terms_degree(terms);
  const int N = es.order();
  if (!pb.truncate && out.required_order > N)
    throw CapacityError("hedging objective needs expected signature order " + std::to_string(out.required_order) +
                        " but only " + std::to_string(N) + " is available");
  for (const auto& t : terms)
    if ((t.tensor.letters_used() & ~letters) != 0)
      throw InputError("hedging objective uses letters outside the expected signature's estimated subset");

  out.poly = Polynomial(static_cast<int>(out.n_strategy + out.n_beta));
  const double a0 = pb.risk[0];
  if (a0 != 0.0) out.poly.add({}, a0 * es.coefficients()[0]);

  std::vector<int> chosen;
  const FreeTensor unit = FreeTensor::unit(kLeadLagDim, N);
  std::function<void(std::size_t, int, const FreeTensor&)> rec = [&](std::size_t start, int k,
                                                                     const FreeTensor& prod) {
    for (std::size_t t = start; t < terms.size(); ++t) {
      chosen.push_back(static_cast<int>(t));
      if (static_cast<int>(chosen.size()) == k) {
        const double v = pair_shuffle(prod, terms[t].tensor, es, pb.truncate);
        // Multinomial weight k! / Π m_t! for the multiset `chosen`.
        double mult = factorial(k);
        std::size_t run = 1;
        for (std::size_t i = 1; i <= chosen.size(); ++i) {
          if (i < chosen.size() && chosen[i] == chosen[i - 1]) {
            ++run;
          } else {
            mult /= factorial(static_cast<int>(run));
            run = 1;
          }
        }
        std::vector<int> vars;
        for (int c : chosen)
          vars.insert(vars.end(), terms[static_cast<std::size_t>(c)].vars.begin(),
                      terms[static_cast<std::size_t>(c)].vars.end());
        if (v != 0.0) out.poly.add(std::move(vars), pb.risk[static_cast<std::size_t>(k)] * mult * v);
      } else {
        rec(t, k, shuffle(prod, terms[t].tensor, N));
      }
      chosen.pop_back();
    }
  };
  for (int k = 1; k <= q; ++k)
    if (pb.risk[static_cast<std::size_t>(k)] != 0.0) rec(0, k, unit);
  return out;
}

// For delayed problems `es` is the conditional expected signature over
// [t, T]; it is composed with the prefix by Chen's identity.
inline AssembledObjective assemble_objective(const HedgeProblem& pb, const ExpectedSignature& es) {
  if (pb.mode == HedgeMode::delayed) {
    pb.validate();
    const int N = es.order();
    const FreeTensor joint = tensor_product(pb.prefix.with_order(N), es.tensor, N);
    return assemble_objective_tensor(pb, joint, es.letters);
  }
  return assemble_objective_tensor(pb, es.tensor, es.letters);
}

namespace detail {

// Pseudo-inverse of a symmetric PSD matrix after Jacobi scaling. Rows with a
// numerically zero diagonal are dropped; eigenvalues under 1e-12·trace count
// as null directions. Clearly negative curvature means the expected
// signature is not consistent with any path distribution.
inline Eigen::MatrixXd psd_pseudo_inverse(const Eigen::MatrixXd& H_in, double ref_scale) {
  const Eigen::Index n = H_in.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  if (n == 0) return out;
  const Eigen::MatrixXd H = 0.5 * (H_in + H_in.transpose());
  const double dmax = H.diagonal().cwiseAbs().maxCoeff();
  const double zero_tol = 1e-13 * std::max({dmax, std::abs(ref_scale), 1e-300});
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (H(i, i) > zero_tol) active.push_back(i);
    else if (H(i, i) < -1e-8 * std::max({dmax, std::abs(ref_scale), 1e-300}))
      throw DataQualityError("objective has negative curvature; the expected signature is too noisy or truncated");
  }
  const auto m = static_cast<Eigen::Index>(active.size());
  if (m == 0) return out;
  Eigen::VectorXd D(m);
  Eigen::MatrixXd Hs(m, m);
  for (Eigen::Index a = 0; a < m; ++a) D(a) = 1.0 / std::sqrt(H(active[a], active[a]));
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) Hs(a, b) = D(a) * H(active[a], active[b]) * D(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hs);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const double trace = static_cast<double>(m);
  const auto& lam = eig.eigenvalues();
  if (lam(0) < -1e-8 * trace)
    throw DataQualityError("objective Hessian has eigenvalue " + std::to_string(lam(0)) +
                           " after scaling; the expected signature is too noisy or truncated");
  const double floor = 1e-12 * trace;
  Eigen::VectorXd inv(m);
  for (Eigen::Index i = 0; i < m; ++i) inv(i) = lam(i) > floor ? 1.0 / lam(i) : 0.0;
  const Eigen::MatrixXd& Q = eig.eigenvectors();
  const Eigen::MatrixXd Ps = Q * inv.asDiagonal() * Q.transpose();
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) out(active[a], active[b]) = D(a) * Ps(a, b) * D(b);
  return out;
}

inline double quadratic_scale(const Polynomial::Quadratic& q) {
  return std::max({std::abs(q.c), q.g.size() ? q.g.cwiseAbs().maxCoeff() : 0.0});
}

inline Eigen::VectorXd minimize_quadratic(const Polynomial::Quadratic& q) {
  return -(psd_pseudo_inverse(q.H, quadratic_scale(q)) * q.g);
}

struct MinimizeResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

inline Eigen::MatrixXd inverse_curvature(const Eigen::MatrixXd& H_in) {
  const Eigen::Index n = H_in.rows();
  const Eigen::MatrixXd H = 0.5 * (H_in + H_in.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  const auto& lam = eig.eigenvalues();
  const double top = n ? lam.cwiseAbs().maxCoeff() : 0.0;
  if (!(top > 0.0)) return Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd inv(n);
  for (Eigen::Index i = 0; i < n; ++i) inv(i) = 1.0 / std::max(std::abs(lam(i)), 1e-8 * top);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

// BFGS with Armijo backtracking. The inverse-Hessian estimate starts from
// (and is periodically refreshed with) the analytic curvature.
inline MinimizeResult minimize_bfgs(const Polynomial& p, Eigen::VectorXd x, int max_iter = 500) {
  MinimizeResult r;
  double f = p.value(x);
  Eigen::VectorXd g = p.gradient(x);
  const double f_ref = std::max(std::abs(f), 1e-300);
  Eigen::MatrixXd B = inverse_curvature(p.hessian(x));
  int failures = 0;
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it;
    Eigen::VectorXd dir = -(B * g);
    double decrement = -g.dot(dir);
    if (!(decrement > 0.0)) {
      B = inverse_curvature(p.hessian(x));
      dir = -(B * g);
      decrement = -g.dot(dir);
    }
    if (decrement <= 1e-15 * std::max(f_ref, std::abs(f)) || g.lpNorm<Eigen::Infinity>() == 0.0) {
      r.converged = true;
      break;
    }
    double step = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd x_new;
    bool ok = false;
    for (int ls = 0; ls < 80; ++ls) {
      x_new = x + step * dir;
      f_new = p.value(x_new);
      if (std::isfinite(f_new) && f_new <= f - 1e-4 * step * decrement) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) {
      // Rounding floor: accept as converged when the predicted decrease is
      // already negligible, otherwise retry once from fresh curvature.
      if (decrement <= 1e-9 * std::max(f_ref, std::abs(f))) {
        r.converged = true;
        break;
      }
      if (++failures > 1) break;
      B = inverse_curvature(p.hessian(x));
      continue;
    }
    failures = 0;
    const Eigen::VectorXd g_new = p.gradient(x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    x = x_new;
    f = f_new;
    g = g_new;
    if ((it + 1) % 25 == 0) {
      B = inverse_curvature(p.hessian(x));
    } else if (sy > 1e-14 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::Index n = x.size();
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      B = (I - rho * s * y.transpose()) * B * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
  }
  r.x = x;
  r.f = f;
  return r;
}

// Projected gradient descent with Armijo backtracking along the projection arc.
inline MinimizeResult minimize_projected(const Polynomial& p, Eigen::VectorXd x,
                                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project,
                                         int max_iter = 20000) {
  MinimizeResult r;
  x = project(x);
  double f = p.value(x);
  double step = 1.0;
  {
    const double h = p.hessian(x).norm();
    if (h > 0.0) step = 1.0 / h;
  }
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it;
    const Eigen::VectorXd g = p.gradient(x);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::VectorXd x_new = project(x - step * g);
      const Eigen::VectorXd d = x_new - x;
      const double f_new = p.value(x_new);
      if (f_new <= f + 1e-4 * g.dot(d)) {
        const double change = d.norm();
        x = x_new;
        const double df = f - f_new;
        f = f_new;
        moved = true;
        step *= 2.0;
        if (change <= 1e-13 * (1.0 + x.norm()) || df <= 1e-16 * std::max(std::abs(f), 1e-300)) {
          r.converged = true;
          r.x = x;
          r.f = f;
          return r;
        }
        break;
      }
      step *= 0.5;
    }
    if (!moved) {
      r.converged = true;  // no feasible descent at machine resolution
      break;
    }
  }
  r.x = x;
  r.f = f;
  return r;
}

inline HedgeSolution make_solution(const HedgeProblem& pb, const AssembledObjective& obj, const Eigen::VectorXd& x) {
  HedgeSolution s;
  s.strategy = FreeTensor(2, pb.M);
  for (std::size_t i = 0; i < obj.n_strategy; ++i) s.strategy[obj.words[i]] = x(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < obj.n_beta; ++j) s.beta.push_back(x(static_cast<Eigen::Index>(obj.n_strategy + j)));
  s.objective = obj.poly.value(x);
  s.required_es_order = obj.required_order;
  s.mode = pb.mode;
  s.param = obj.param;
  return s;
}

inline HedgeSolution solve_quadratic_objective(const HedgeProblem& pb, const AssembledObjective& obj) {
  const auto q = obj.poly.quadratic();
  return make_solution(pb, obj, minimize_quadratic(q));
}

}  // namespace detail

struct GeneralOptions {
  int max_iter = 500;
  std::uint64_t seed = 20240607;
};

inline HedgeSolution solve_mean_variance(const HedgeProblem& pb, const ExpectedSignature& es) {
  const int q = detail::risk_degree(pb.risk);
  if (q != 2) throw InputError("mean-variance solve needs a quadratic risk polynomial");
  const auto obj = assemble_objective(pb, es);
  if (obj.poly.degree() > 2)
    throw InputError("objective is not quadratic in the strategy (cost terms); use the general solver");
  return detail::solve_quadratic_objective(pb, obj);
}

// Minimizes an assembled objective of any degree with multistart BFGS.
inline HedgeSolution solve_assembled_general(const HedgeProblem& pb, const AssembledObjective& obj,
                                             const std::optional<Eigen::VectorXd>& warm, const GeneralOptions& opt) {
  const Eigen::Index n = obj.poly.nvars();
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Zero(n));
  if (warm) starts.push_back(*warm);
  {
    std::mt19937_64 gen(opt.seed);
    std::normal_distribution<double> nd(0.0, 0.01);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = nd(gen);
    starts.push_back(r);
  }
  detail::MinimizeResult best;
  detail::MinimizeResult best_any;
  for (const auto& x0 : starts) {
    auto r = detail::minimize_bfgs(obj.poly, x0, opt.max_iter);
    if (r.f < best_any.f) best_any = r;
    if (r.converged && r.f < best.f) best = r;
  }
  if (!std::isfinite(best.f))
    throw NumericalError("quasi-Newton iteration did not converge within " + std::to_string(opt.max_iter) +
                         " iterations; best objective " + std::to_string(best_any.f));
  return detail::make_solution(pb, obj, best.x);
}

inline std::optional<Eigen::VectorXd> mean_variance_warm_start(const HedgeProblem& pb, const ExpectedSignature& es) {
  HedgeProblem mv = pb;
  mv.risk = risk_power(2);
  try {
    const auto obj = assemble_objective(mv, es);
    if (obj.poly.degree() > 2) return std::nullopt;
    return detail::minimize_quadratic(obj.poly.quadratic());
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline HedgeSolution solve_general(const HedgeProblem& pb, const ExpectedSignature& es,
                                   const GeneralOptions& opt = {}) {
  const auto obj = assemble_objective(pb, es);
  return solve_assembled_general(pb, obj, mean_variance_warm_start(pb, es), opt);
}

namespace detail {

inline HedgeSolution solve_by_degree(const HedgeProblem& pb, const AssembledObjective& obj,
                                     const ExpectedSignature& es, const GeneralOptions& opt) {
  if (obj.poly.degree() <= 2) return solve_quadratic_objective(pb, obj);
  return solve_assembled_general(pb, obj, mean_variance_warm_start(pb, es), opt);
}

inline Eigen::VectorXd project_box(Eigen::VectorXd x, std::size_t offset, const std::vector<double>& lo,
                                   const std::vector<double>& hi) {
  for (std::size_t j = 0; j < std::max(lo.size(), hi.size()); ++j) {
    auto& v = x(static_cast<Eigen::Index>(offset + j));
    if (j < lo.size()) v = std::max(v, lo[j]);
    if (j < hi.size()) v = std::min(v, hi[j]);
  }
  return x;
}

}  // namespace detail

// Joint minimization over the dynamic strategy and static basket weights β.
// With a box on β and quadratic risk, the strategy is eliminated exactly and
// β solves the reduced quadratic by projected coordinate descent.
inline HedgeSolution solve_semistatic(const HedgeProblem& pb_in, const ExpectedSignature& es,
                                      const GeneralOptions& opt = {}) {
  HedgeProblem pb = pb_in;
  pb.mode = HedgeMode::semistatic;
  const auto obj = assemble_objective(pb, es);
  if (!pb.has_box()) return detail::solve_by_degree(pb, obj, es, opt);

  const Eigen::Index ns = static_cast<Eigen::Index>(obj.n_strategy);
  const Eigen::Index nb = static_cast<Eigen::Index>(obj.n_beta);
  auto lo = [&](Eigen::Index j) {
    return static_cast<std::size_t>(j) < pb.beta_lower.size() ? pb.beta_lower[static_cast<std::size_t>(j)]
                                                              : -std::numeric_limits<double>::infinity();
  };
  auto hi = [&](Eigen::Index j) {
    return static_cast<std::size_t>(j) < pb.beta_upper.size() ? pb.beta_upper[static_cast<std::size_t>(j)]
                                                              : std::numeric_limits<double>::infinity();
  };
  if (obj.poly.degree() > 2) {
    auto warm = mean_variance_warm_start(pb, es);
    Eigen::VectorXd x0 = warm ? *warm : Eigen::VectorXd::Zero(ns + nb);
    auto proj = [&](const Eigen::VectorXd& x) {
      return detail::project_box(x, static_cast<std::size_t>(ns), pb.beta_lower, pb.beta_upper);
    };
    const auto r = detail::minimize_projected(obj.poly, x0, proj);
    auto s = detail::make_solution(pb, obj, r.x);
    for (Eigen::Index j = 0; j < nb; ++j)
      s.constraint_binding |= s.beta[static_cast<std::size_t>(j)] == lo(j) || s.beta[static_cast<std::size_t>(j)] == hi(j);
    return s;
  }

  const auto q = obj.poly.quadratic();
  const Eigen::MatrixXd Hll = q.H.topLeftCorner(ns, ns);
  const Eigen::MatrixXd Hlb = q.H.topRightCorner(ns, nb);
  const Eigen::MatrixXd Hbb = q.H.bottomRightCorner(nb, nb);
  const Eigen::VectorXd gl = q.g.head(ns);
  const Eigen::VectorXd gb = q.g.tail(nb);
  const Eigen::MatrixXd K = detail::psd_pseudo_inverse(Hll, detail::quadratic_scale(q));
  // Reduced quadratic in β: ½ β'Sβ + s'β.
  const Eigen::MatrixXd S = Hbb - Hlb.transpose() * K * Hlb;
  const Eigen::VectorXd sv = gb - Hlb.transpose() * K * gl;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(nb);
  for (Eigen::Index j = 0; j < nb; ++j) beta(j) = std::clamp(0.0, lo(j), hi(j));
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double grad = S.row(j).dot(beta) + sv(j);
      double next;
      if (S(j, j) > 0.0) next = beta(j) - grad / S(j, j);
      else next = grad > 0.0 ? lo(j) : (grad < 0.0 ? hi(j) : beta(j));
      next = std::clamp(next, lo(j), hi(j));
      if (!std::isfinite(next)) throw NumericalError("semistatic weights unbounded below on the box");
      change = std::max(change, std::abs(next - beta(j)));
      beta(j) = next;
    }
    if (change <= 1e-15 * (1.0 + beta.cwiseAbs().maxCoeff())) break;
  }
  Eigen::VectorXd x(ns + nb);
  x.head(ns) = -(K * (gl + Hlb * beta));
  x.tail(nb) = beta;
  auto s = detail::make_solution(pb, obj, x);
  for (Eigen::Index j = 0; j < nb; ++j)
    s.constraint_binding |= beta(j) == lo(j) || beta(j) == hi(j);
  return s;
}

// Delayed start at time t: `conditional` is the expected signature over
// [t, T] given the state at t; the problem carries the prefix and cash p_t.
inline HedgeSolution solve_delayed(const HedgeProblem& pb_in, const ExpectedSignature& conditional,
                                   const GeneralOptions& opt = {}) {
  HedgeProblem pb = pb_in;
  pb.mode = HedgeMode::delayed;
  const auto obj = assemble_objective(pb, conditional);
  if (obj.poly.degree() <= 2) return detail::solve_quadratic_objective(pb, obj);
  return solve_assembled_general(pb, obj, mean_variance_warm_start(pb, conditional), opt);
}

// Speed strategies with Euclidean coefficient norm ‖v‖ <= bound.
inline HedgeSolution solve_with_liquidity(const HedgeProblem& pb_in, const ExpectedSignature& es,
                                          const GeneralOptions& opt = {}) {
  HedgeProblem pb = pb_in;
  pb.mode = HedgeMode::liquidity;
  const double bound = pb.liquidity_bound;
  const auto obj = assemble_objective(pb, es);
  const Eigen::Index n = obj.poly.nvars();
  if (bound == 0.0) {
    auto s = detail::make_solution(pb, obj, Eigen::VectorXd::Zero(n));
    s.constraint_binding = true;
    return s;
  }
  if (obj.poly.degree() > 2) {
    auto warm = mean_variance_warm_start(pb, es);
    auto proj = [bound](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      const double nx = x.norm();
      return nx > bound ? Eigen::VectorXd(x * (bound / nx)) : x;
    };
    if (std::isinf(bound)) return solve_assembled_general(pb, obj, warm, opt);
    const auto r = detail::minimize_projected(obj.poly, warm ? *warm : Eigen::VectorXd::Zero(n), proj);
    auto s = detail::make_solution(pb, obj, r.x);
    s.constraint_binding = r.x.norm() >= bound * (1.0 - 1e-9);
    return s;
  }
  const auto q = obj.poly.quadratic();
  const Eigen::VectorXd free = detail::minimize_quadratic(q);
  if (free.norm() <= bound) return detail::make_solution(pb, obj, free);

  // Boundary solution x(μ) = -(H + μI)^{-1} g with ‖x(μ)‖ = bound.
  const Eigen::MatrixXd H = 0.5 * (q.H + q.H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
  const Eigen::VectorXd lam = eig.eigenvalues();
  const double scale = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  if (lam(0) < -1e-8 * scale)
    throw DataQualityError("objective Hessian is indefinite; the expected signature is too noisy or truncated");
  const Eigen::VectorXd gh = eig.eigenvectors().transpose() * q.g;
  auto x_of = [&](double mu) {
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = -gh(i) / (std::max(lam(i), 0.0) + mu);
    return Eigen::VectorXd(eig.eigenvectors() * c);
  };
  double mu_lo = 0.0;
  double mu_hi = q.g.norm() / bound + 1e-300;
  while (x_of(mu_hi).norm() > bound) mu_hi *= 2.0;
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    if (mid <= mu_lo || mid >= mu_hi) break;
    if (x_of(mid).norm() > bound) mu_lo = mid;
    else mu_hi = mid;
  }
  auto s = detail::make_solution(pb, obj, x_of(mu_hi));
  s.constraint_binding = true;
  return s;
}

// Routes a problem to the solver for its mode.
inline HedgeSolution solve(const HedgeProblem& pb, const ExpectedSignature& es, const GeneralOptions& opt = {}) {
  switch (pb.mode) {
    case HedgeMode::semistatic: return solve_semistatic(pb, es, opt);
    case HedgeMode::delayed: return solve_delayed(pb, es, opt);
    case HedgeMode::liquidity: return solve_with_liquidity(pb, es, opt);
    default: {
      const auto obj = assemble_objective(pb, es);
      return detail::solve_by_degree(pb, obj, es, opt);
    }
  }
}

// ---------------------------------------------------------------------------
// Backtesting

// Position held over [t_k, t_{k+1}] for every sample k.
inline std::vector<double> strategy_positions(const FreeTensor& strategy, Parametrization param,
                                              std::span<const double> times, std::span<const double> prices) {
  if (strategy.dimension() != 2) throw InputError("strategies are functionals over 2 letters");
  if (times.size() != prices.size() || times.size() < 2) throw InputError("backtest path needs >= 2 samples");
  const FreeTensor ell = param == Parametrization::speed ? concat_letter(strategy, 1) : strategy;
  FreeTensor S = FreeTensor::unit(2, ell.order());
  detail::HornerWorkspace ws;
  std::vector<double> pos(times.size());
  pos[0] = pair(ell, S);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double inc[2] = {times[k] - times[k - 1], prices[k] - prices[k - 1]};
    detail::mul_exp_inplace(S, inc, ws);
    pos[k] = pair(ell, S);
  }
  return pos;
}

struct BacktestResult {
  std::vector<double> times, positions, cash, pnl;
  double terminal_pnl = 0.0;  // wealth_T - F
  double payoff = 0.0;
  double costs = 0.0;
};

// Self-financing wealth from given positions. Per-step costs are charged at
// the end of each step.
inline BacktestResult backtest_positions(std::span<const double> positions, std::span<const double> step_costs,
                                         std::span<const double> times, std::span<const double> prices,
                                         double p0, double payoff, std::size_t start = 0) {
  const std::size_t n = times.size();
  if (positions.size() != n || prices.size() != n) throw InputError("positions must match the path grid");
  if (!step_costs.empty() && step_costs.size() != n) throw InputError("costs must match the path grid");
  if (start >= n - 1) throw InputError("backtest start must precede the last sample");
  BacktestResult r;
  double wealth = p0;
  for (std::size_t k = start; k < n; ++k) {
    const double c = step_costs.empty() ? 0.0 : step_costs[k];
    if (k > start) {
      wealth += positions[k - 1] * (prices[k] - prices[k - 1]);
      wealth -= c;
      r.costs += c;
    }
    const double held = k + 1 < n ? positions[k] : positions[k - 1];
    r.times.push_back(times[k]);
    r.positions.push_back(held);
    r.cash.push_back(wealth - held * prices[k]);
    r.pnl.push_back(k + 1 < n ? wealth - p0 : wealth - payoff);
  }
  r.payoff = payoff;
  r.terminal_pnl = wealth - payoff;
  return r;
}

// Discrete cost of a position path: α Σ (Δpos)²/Δt with the book starting flat.
inline std::vector<double> discrete_trading_costs(std::span<const double> positions, std::span<const double> times,
                                                  double alpha, std::size_t start = 0) {
  std::vector<double> c(times.size(), 0.0);
  if (alpha == 0.0) return c;
  double prev = 0.0;
  for (std::size_t k = start; k + 1 < times.size(); ++k) {
    const double dpos = positions[k] - prev;
    // The trade at t_k is charged as a speed over the step that ends at t_{k+1}.
    c[k + 1] = alpha * dpos * dpos / (times[k + 1] - times[k]);
    prev = positions[k];
  }
  return c;
}

// Exact costs α ∫ speed² (or α ∫ (speed·X)²) along the piecewise-linear path,
// incremented per step from running signature pairings.
inline std::vector<double> speed_trading_costs(const FreeTensor& v, bool proportional, std::span<const double> times,
                                               std::span<const double> prices, double alpha) {
  std::vector<double> c(times.size(), 0.0);
  if (alpha == 0.0) return c;
  FreeTensor u = v;
  if (proportional) {
    const FreeTensor two_plus_one = FreeTensor::from_terms(2, 1, {{Word{}, 1.0}, {Word{2}, 1.0}});
    u = shuffle(v, two_plus_one, v.order() + 1);
  }
  const FreeTensor sq = shuffle(u, u, 2 * u.order());
  const FreeTensor functional = concat_letter(sq, 1, sq.order() + 1);
  FreeTensor S = FreeTensor::unit(2, functional.order());
  detail::HornerWorkspace ws;
  double prev = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double inc[2] = {times[k] - times[k - 1], prices[k] - prices[k - 1]};
    detail::mul_exp_inplace(S, inc, ws);
    const double cur = alpha * pair(functional, S);
    c[k] = cur - prev;
    prev = cur;
  }
  return c;
}

inline BacktestResult backtest_strategy(const HedgeSolution& sol, const HedgeProblem& pb,
                                        std::span<const double> times, std::span<const double> prices,
                                        double realized_payoff) {
  const auto pos = strategy_positions(sol.strategy, sol.param, times, prices);
  std::vector<double> costs;
  if (sol.param == Parametrization::speed)
    costs = speed_trading_costs(sol.strategy, pb.mode == HedgeMode::prop_cost, times, prices, pb.alpha);
  else
    costs = discrete_trading_costs(pos, times, pb.alpha);
  std::size_t start = 0;
  double capital = pb.p0;
  if (pb.mode == HedgeMode::delayed) {
    // Trading starts at the first sample at or after the prefix end; the
    // strategy contributes nothing before it.
    const double t = pb.start_time;
    while (start + 1 < times.size() && times[start] < t - 1e-12) ++start;
    capital = pb.p_t;
  }
  return backtest_positions(pos, costs, times, prices, capital, realized_payoff, start);
}

struct PnlSummary {
  double mean = 0.0, std = 0.0, p05 = 0.0, p95 = 0.0;
  std::size_t n = 0;
};

inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

inline PnlSummary summarize_pnl(std::vector<double> x) {
  PnlSummary s;
  s.n = x.size();
  if (x.empty()) return s;
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  s.mean = m;
  s.std = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  std::sort(x.begin(), x.end());
  s.p05 = quantile_sorted(x, 0.05);
  s.p95 = quantile_sorted(x, 0.95);
  return s;
}

}  // namespace sighedge
