#pragma once

// Synthetic market models and Monte Carlo expected lead-lag signatures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/leadlag.hpp"
#include "sighedge/parallel.hpp"
#include "sighedge/rng.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

enum class ModelKind { black_scholes, heston };
enum class Measure { risk_neutral, objective };

struct ModelSpec {
  ModelKind kind = ModelKind::black_scholes;
  double sigma = 0.2;
  double rate = 0.0;
  double v0 = 0.04;
  double kappa = 2.0;
  double theta = 0.04;
  double xi = 0.3;
  double rho = -0.7;
  Measure measure = Measure::risk_neutral;
  double mu = 0.0;        // drift under the objective measure
  bool discount = false;  // emit e^{-rate t} X_t

  static ModelSpec black_scholes(double sigma, double rate = 0.0) {
    ModelSpec m;
    m.kind = ModelKind::black_scholes;
    m.sigma = sigma;
    m.rate = rate;
    return m;
  }
  static ModelSpec heston(double rate = 0.02) {
    ModelSpec m;
    m.kind = ModelKind::heston;
    m.rate = rate;
    return m;
  }

  double drift() const { return measure == Measure::risk_neutral ? rate : mu; }

  void validate() const {
    auto bad = [](double v) { return !std::isfinite(v); };
    if (bad(rate) || bad(mu)) throw InputError("model rate and drift must be finite");
    if (kind == ModelKind::black_scholes) {
      if (!(sigma > 0.0) || bad(sigma)) throw InputError("sigma must be > 0");
    } else {
      if (!(v0 >= 0.0) || !(theta >= 0.0) || !(xi >= 0.0) || !(kappa >= 0.0) || bad(v0) || bad(theta) ||
          bad(xi) || bad(kappa))
        throw InputError("Heston parameters need v0, theta, xi, kappa >= 0");
      if (!(std::abs(rho) <= 1.0)) throw InputError("rho must lie in [-1, 1]");
    }
  }
};

inline std::string to_string(ModelKind k) { return k == ModelKind::black_scholes ? "black_scholes" : "heston"; }

// Starting point of a simulation. NaN variance means the model's v0.
struct ModelState {
  double t = 0.0;
  double x = 1.0;
  double v = std::numeric_limits<double>::quiet_NaN();
};

struct PathEnsemble {
  std::vector<double> times;      // shared grid, steps + 1 points
  std::vector<double> prices;     // n_paths rows of times.size()
  std::vector<double> variances;  // same shape when the model has a variance factor
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::optional<ModelSpec> model;  // empty for external data

  std::size_t n_samples() const { return times.size(); }
  int steps() const { return static_cast<int>(times.size()) - 1; }
  double horizon() const { return times.back() - times.front(); }
  std::span<const double> path_prices(std::size_t i) const {
    return {prices.data() + i * n_samples(), n_samples()};
  }
  std::span<const double> path_variances(std::size_t i) const {
    return {variances.data() + i * n_samples(), n_samples()};
  }
  DiscretePath path(std::size_t i) const {
    const auto p = path_prices(i);
    return DiscretePath::scalar(times, {p.begin(), p.end()});
  }
  void validate() const {
    if (times.size() < 2) throw InputError("ensemble needs at least 2 time points");
    if (prices.size() != n_paths * times.size()) throw InputError("ensemble price matrix has wrong shape");
    for (std::size_t k = 1; k < times.size(); ++k)
      if (!(times[k] > times[k - 1])) throw InputError("ensemble times must be strictly increasing");
  }
};

inline std::vector<double> uniform_grid(double t0, double t1, int steps) {
  std::vector<double> g(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) g[static_cast<std::size_t>(k)] = t0 + (t1 - t0) * k / steps;
  g.back() = t1;
  return g;
}

// Simulates path `index` on `grid`; writes prices (and variances if given).
inline void simulate_path(const ModelSpec& model, std::span<const double> grid, const ModelState& start,
                          std::uint64_t seed, std::uint64_t index, std::span<double> prices,
                          std::span<double> variances = {}) {
  NormalStream z(seed, index);
  const double mu = model.drift();
  double logx = std::log(start.x);
  double v = std::isnan(start.v) ? model.v0 : start.v;
  auto emit = [&](std::size_t k) {
    const double disc = model.discount ? std::exp(-model.rate * grid[k]) : 1.0;
    prices[k] = std::exp(logx) * disc;
    if (!variances.empty()) variances[k] = v;
  };
  emit(0);
  if (model.kind == ModelKind::black_scholes) {
    const double s = model.sigma;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double dt = grid[k] - grid[k - 1];
      logx += (mu - 0.5 * s * s) * dt + s * std::sqrt(dt) * z();
      emit(k);
    }
    return;
  }
  const double rho_bar = std::sqrt(std::max(0.0, 1.0 - model.rho * model.rho));
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double dt = grid[k] - grid[k - 1];
    const double z1 = z();
    const double z2 = z();
    const double vp = std::max(v, 0.0);
    const double sq = std::sqrt(vp * dt);
    logx += (mu - 0.5 * vp) * dt + sq * z1;
    v += model.kappa * (model.theta - vp) * dt + model.xi * sq * (model.rho * z1 + rho_bar * z2);
    emit(k);
  }
}

inline PathEnsemble sample_paths(const ModelSpec& model, double T, int steps, std::size_t n_paths,
                                 std::uint64_t seed, int threads = 0, ModelState start = {}) {
  model.validate();
  if (steps < 2) throw InputError("steps must be >= 2");
  if (n_paths < 1) throw InputError("n_paths must be >= 1");
  if (!(T > start.t)) throw InputError("horizon must exceed the start time");
  if (!(start.x > 0.0)) throw InputError("initial price must be positive");
  PathEnsemble e;
  e.times = uniform_grid(start.t, T, steps);
  e.n_paths = n_paths;
  e.seed = seed;
  e.model = model;
  const std::size_t n = e.times.size();
  e.prices.resize(n_paths * n);
  const bool with_var = model.kind == ModelKind::heston;
  if (with_var) e.variances.resize(n_paths * n);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n_paths + kBlock - 1) / kBlock;
  for_each_block(blocks, threads, [&](std::size_t b) {
    for (std::size_t i = b * kBlock; i < std::min(n_paths, (b + 1) * kBlock); ++i)
      simulate_path(model, e.times, start, seed, i, std::span<double>(e.prices.data() + i * n, n),
                    with_var ? std::span<double>(e.variances.data() + i * n, n) : std::span<double>());
  });
  return e;
}

struct ExpectedSignature {
  FreeTensor tensor;
  FreeTensor standard_errors;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double T = 0.0;  // interval length covered
  bool discounted = false;
  double rate = 0.0;  // discount rate applied when discounted
  LetterSet letters = all_letters(kLeadLagDim);

  int order() const { return tensor.order(); }

  // Pairing a functional that touches letters never estimated would silently
  // read zeros, so refuse it.
  void require_letters(const FreeTensor& functional) const {
    const LetterSet used = functional.letters_used();
    if ((used & ~letters) != 0)
      throw InputError("functional uses letters outside the expected signature's estimated subset");
  }
};

namespace detail {

// Running mean / M2 per coefficient (Welford), merged across blocks with
// Chan's update in block order.
struct MomentAccumulator {
  std::size_t n = 0;
  std::vector<double> mean, m2;

  explicit MomentAccumulator(std::size_t size = 0) : mean(size, 0.0), m2(size, 0.0) {}

  void add(std::span<const double> x) {
    ++n;
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d * inv;
      m2[i] += d * (x[i] - mean[i]);
    }
  }

  void merge(const MomentAccumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double nt = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = o.mean[i] - mean[i];
      mean[i] += d * nb / nt;
      m2[i] += o.m2[i] + d * d * na * nb / nt;
    }
    n += o.n;
  }
};

// Fixes deterministic time-only words (pure lag time, pure lead time) to
// T^k/k!; both time copies move by exactly T over the interval.
inline void set_time_words(FreeTensor& es, FreeTensor& se, double T, double scale) {
  double v = 1.0;
  for (int k = 1; k <= es.order(); ++k) {
    v *= T / k;
    for (int letter : {1, 3}) {
      const Word w(std::vector<int>(static_cast<std::size_t>(k), letter));
      es[w] = scale * v;
      se[w] = 0.0;
    }
  }
  es[Word{}] = scale;
  se[Word{}] = 0.0;
}

template <class PathFn>
ExpectedSignature expected_signature_blocks(std::size_t n_paths, std::span<const double> times, int order,
                                            LetterSet letters, int threads, PathFn&& fill_path) {
  if (n_paths == 0) throw InputError("empty ensemble");
  if (order < 2) throw InputError("expected signature order must be >= 2");
  letters &= all_letters(kLeadLagDim);
  const auto lv = letters_of(letters, kLeadLagDim);
  if (lv.empty()) throw InputError("empty letter subset");
  const int rd = static_cast<int>(lv.size());
  const std::size_t size = tensor_size(rd, order);
  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n_paths + kBlock - 1) / kBlock;
  std::vector<MomentAccumulator> partial(blocks);
  const std::size_t n = times.size();
  for_each_block(blocks, threads, [&](std::size_t b) {
    MomentAccumulator acc(size);
    HornerWorkspace ws;
    std::vector<double> prices(n);
    FreeTensor S(rd, order);
    for (std::size_t i = b * kBlock; i < std::min(n_paths, (b + 1) * kBlock); ++i) {
      fill_path(i, std::span<double>(prices));
      std::fill(S.coefficients().begin(), S.coefficients().end(), 0.0);
      S.coefficients()[0] = 1.0;
      accumulate_leadlag(S, times, prices, lv, ws);
      acc.add(S.coefficients());
    }
    partial[b] = std::move(acc);
  });
  MomentAccumulator total(size);
  for (const auto& p : partial) total.merge(p);

  FreeTensor mean(rd, order), se(rd, order);
  const double nn = static_cast<double>(total.n);
  for (std::size_t i = 0; i < size; ++i) {
    mean.coefficients()[i] = total.mean[i];
    se.coefficients()[i] = total.n > 1 ? std::sqrt(std::max(0.0, total.m2[i] / (nn - 1.0)) / nn) : 0.0;
  }
  ExpectedSignature es;
  const bool full = letters == all_letters(kLeadLagDim);
  es.tensor = full ? std::move(mean) : embed_subset(mean, letters);
  es.standard_errors = full ? std::move(se) : embed_subset(se, letters);
  es.n_paths = n_paths;
  es.T = times.back() - times.front();
  es.letters = letters;
  return es;
}

inline void apply_discount(ExpectedSignature& es, std::optional<double> rate) {
  double scale = 1.0;
  if (rate) {
    scale = std::exp(-*rate * es.T);
    es.tensor *= scale;
    es.standard_errors *= scale;
    es.discounted = true;
    es.rate = *rate;
  }
  set_time_words(es.tensor, es.standard_errors, es.T, scale);
}

}  // namespace detail

inline ExpectedSignature expected_signature_mc(const PathEnsemble& ensemble, int order,
                                               std::optional<double> discount_rate = std::nullopt,
                                               LetterSet letters = all_letters(kLeadLagDim), int threads = 0) {
  if (ensemble.n_paths == 0) throw InputError("empty ensemble");
  ensemble.validate();
  if (ensemble.times.size() < 3) throw InputError("lead-lag transform needs at least 3 samples");
  auto es = detail::expected_signature_blocks(
      ensemble.n_paths, ensemble.times, order, letters, threads, [&](std::size_t i, std::span<double> out) {
        const auto p = ensemble.path_prices(i);
        std::copy(p.begin(), p.end(), out.begin());
      });
  es.seed = ensemble.seed;
  detail::apply_discount(es, discount_rate);
  return es;
}

// Simulates and reduces path by path without storing the ensemble; the
// result matches expected_signature_mc(sample_paths(...)) bit for bit.
inline ExpectedSignature expected_signature_model(const ModelSpec& model, double T, int steps, std::size_t n_paths,
                                                  std::uint64_t seed, int order,
                                                  std::optional<double> discount_rate = std::nullopt,
                                                  LetterSet letters = all_letters(kLeadLagDim), int threads = 0,
                                                  ModelState start = {}) {
  model.validate();
  if (steps < 2) throw InputError("steps must be >= 2");
  if (!(T > start.t)) throw InputError("horizon must exceed the start time");
  const auto grid = uniform_grid(start.t, T, steps);
  auto es = detail::expected_signature_blocks(n_paths, grid, order, letters, threads,
                                              [&](std::size_t i, std::span<double> out) {
                                                simulate_path(model, grid, start, seed, i, out);
                                              });
  es.seed = seed;
  detail::apply_discount(es, discount_rate);
  return es;
}

// Expected lead-lag signature over [state.t, T] of paths restarted from the
// given state. Prices are not renormalized, so the result composes with a
// prefix signature by Chen's identity.
inline ExpectedSignature conditional_expected_signature(const ModelSpec& model, const ModelState& state, double T,
                                                        int order, std::size_t n_paths, std::uint64_t seed,
                                                        int steps, LetterSet letters = all_letters(kLeadLagDim),
                                                        int threads = 0) {
  if (!(state.t < T)) throw InputError("conditioning time must be before the horizon");
  return expected_signature_model(model, T, steps, n_paths, seed, order, std::nullopt, letters, threads, state);
}

}  // namespace sighedge
