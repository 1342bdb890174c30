#pragma once

// Path-dependent payoffs and their least-squares projection onto linear
// signature payoffs.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/leadlag.hpp"
#include "sighedge/market.hpp"
#include "sighedge/parallel.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

enum class PayoffKind {
  forward,
  european_call,
  european_put,
  asian_call,
  barrier_up_out_call,
  lookback_call_float,
  variance_swap,
  custom_signature,
};

inline std::string to_string(PayoffKind k) {
  switch (k) {
    case PayoffKind::forward: return "forward";
    case PayoffKind::european_call: return "european_call";
    case PayoffKind::european_put: return "european_put";
    case PayoffKind::asian_call: return "asian_call";
    case PayoffKind::barrier_up_out_call: return "barrier_up_out_call";
    case PayoffKind::lookback_call_float: return "lookback_call_float";
    case PayoffKind::variance_swap: return "variance_swap";
    case PayoffKind::custom_signature: return "custom_signature";
  }
  return "unknown";
}

inline PayoffKind payoff_kind_from_string(const std::string& s) {
  for (auto k : {PayoffKind::forward, PayoffKind::european_call, PayoffKind::european_put, PayoffKind::asian_call,
                 PayoffKind::barrier_up_out_call, PayoffKind::lookback_call_float, PayoffKind::variance_swap,
                 PayoffKind::custom_signature})
    if (to_string(k) == s) return k;
  throw InputError("unknown payoff kind '" + s + "'");
}

struct PayoffSpec {
  PayoffKind kind = PayoffKind::forward;
  double strike = 0.0;  // K, or K_var for variance swaps
  double barrier = 0.0;
  FreeTensor functional;  // custom_signature only

  static PayoffSpec forward(double K) { return {PayoffKind::forward, K, 0.0, {}}; }
  static PayoffSpec call(double K) { return {PayoffKind::european_call, K, 0.0, {}}; }
  static PayoffSpec put(double K) { return {PayoffKind::european_put, K, 0.0, {}}; }
  static PayoffSpec asian_call(double K) { return {PayoffKind::asian_call, K, 0.0, {}}; }
  static PayoffSpec barrier_call(double K, double B) { return {PayoffKind::barrier_up_out_call, K, B, {}}; }
  static PayoffSpec lookback() { return {PayoffKind::lookback_call_float, 0.0, 0.0, {}}; }
  static PayoffSpec variance_swap(double K_var) { return {PayoffKind::variance_swap, K_var, 0.0, {}}; }
  static PayoffSpec custom(FreeTensor f) { return {PayoffKind::custom_signature, 0.0, 0.0, std::move(f)}; }

  void validate(double initial_price = 1.0) const {
    if (!std::isfinite(strike) || !std::isfinite(barrier)) throw InputError("payoff parameters must be finite");
    if (kind == PayoffKind::barrier_up_out_call && !(barrier > initial_price))
      throw InputError("up-and-out barrier must exceed the initial price");
    if (kind == PayoffKind::custom_signature && functional.dimension() != kLeadLagDim)
      throw InputError("custom signature payoff needs a functional over 4 letters");
  }
};

inline double evaluate_payoff(const PayoffSpec& spec, std::span<const double> times, std::span<const double> prices) {
  if (prices.size() < 2 || prices.size() != times.size()) throw InputError("payoff needs a path of >= 2 samples");
  const double xT = prices.back();
  switch (spec.kind) {
    case PayoffKind::forward: return xT - spec.strike;
    case PayoffKind::european_call: return std::max(xT - spec.strike, 0.0);
    case PayoffKind::european_put: return std::max(spec.strike - xT, 0.0);
    case PayoffKind::asian_call: {
      double sum = 0.0;
      for (double x : prices) sum += x;
      return std::max(sum / static_cast<double>(prices.size()) - spec.strike, 0.0);
    }
    case PayoffKind::barrier_up_out_call: {
      const double mx = *std::max_element(prices.begin(), prices.end());
      return mx < spec.barrier ? std::max(xT - spec.strike, 0.0) : 0.0;
    }
    case PayoffKind::lookback_call_float: return xT - *std::min_element(prices.begin(), prices.end());
    case PayoffKind::variance_swap: {
      double rv = 0.0;
      for (std::size_t k = 1; k < prices.size(); ++k) {
        if (!(prices[k] > 0.0) || !(prices[k - 1] > 0.0))
          throw InputError("variance swap needs strictly positive prices");
        const double r = std::log(prices[k] / prices[k - 1]);
        rv += r * r;
      }
      return rv - spec.strike;
    }
    case PayoffKind::custom_signature: {
      const LetterSet used = spec.functional.letters_used();
      if (used == 0) return spec.functional.coefficients()[0];
      const auto S = leadlag_signature(augment(times, prices), spec.functional.degree(), used);
      return pair(spec.functional, S.tensor);
    }
  }
  throw InputError("unknown payoff kind");
}

inline double evaluate_payoff(const PayoffSpec& spec, const DiscretePath& path) {
  if (path.dim() != 1) throw InputError("payoffs act on one-dimensional price paths");
  return evaluate_payoff(spec, path.times(), path.values());
}

struct FitDiagnostics {
  double r2 = std::numeric_limits<double>::quiet_NaN();  // NaN when the target is constant
  double residual_norm = 0.0;
  double ridge = 0.0;
  std::size_t n_paths = 0;
};

struct SignaturePayoff {
  FreeTensor f;
  FitDiagnostics diagnostics;
  PayoffSpec spec;
};

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

// Level-k coordinate scale used by every regression: features are k!·S_w.
inline std::vector<double> level_scales(int dimension, int order) {
  std::vector<double> s(tensor_size(dimension, order));
  for (int k = 0; k <= order; ++k) {
    const std::size_t off = level_offset(dimension, k);
    std::fill_n(s.begin() + static_cast<std::ptrdiff_t>(off), level_size(dimension, k), factorial(k));
  }
  return s;
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double largest_eigenvalue(const Eigen::MatrixXd& G, int iterations = 100) {
  const Eigen::Index n = G.rows();
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd w = G * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (it > 5 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

// Lead-lag signature features of an ensemble, factorized once so many
// payoffs can be projected onto the same design.
class SignatureDesign {
 public:
  // ridge: absolute Tikhonov weight on the normal matrix; empty selects
  // 1e-8 times its largest eigenvalue. `letters` restricts the features to
  // words over a letter subset; fitted functionals are still 4-letter.
  SignatureDesign(const PathEnsemble& ensemble, int order, std::optional<double> ridge = std::nullopt,
                  int threads = 0, LetterSet letters = all_letters(kLeadLagDim))
      : ensemble_(ensemble), order_(order), letters_(letters & all_letters(kLeadLagDim)) {
    ensemble.validate();
    if (ensemble.n_paths < 2) throw InputError("regression needs at least 2 paths");
    if (order < 2) throw InputError("payoff order must be >= 2");
    if (ridge && !(*ridge >= 0.0)) throw InputError("ridge must be >= 0");
    dim_ = std::popcount(letters_);
    if (dim_ == 0) throw InputError("empty letter subset");
    const std::size_t p = tensor_size(dim_, order);
    const auto n = static_cast<Eigen::Index>(ensemble.n_paths);
    phi_.resize(n, static_cast<Eigen::Index>(p));
    const auto scales = level_scales(dim_, order);
    constexpr std::size_t kBlock = 64;
    const std::size_t blocks = (ensemble.n_paths + kBlock - 1) / kBlock;
    for_each_block(blocks, threads, [&](std::size_t b) {
      for (std::size_t i = b * kBlock; i < std::min(ensemble.n_paths, (b + 1) * kBlock); ++i) {
        const FreeTensor S =
            leadlag_signature_reduced(ensemble.times, ensemble.path_prices(i), order, letters_);
        const auto c = S.coefficients();
        for (std::size_t j = 0; j < p; ++j)
          phi_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[j] * scales[j];
      }
    });
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    G.selfadjointView<Eigen::Lower>().rankUpdate(phi_.transpose());
    G = G.selfadjointView<Eigen::Lower>();
    ridge_ = ridge ? *ridge : 1e-8 * largest_eigenvalue(G);
    G.diagonal().array() += ridge_;
    ldlt_.compute(G);
    const auto D = ldlt_.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    const double dmin = D.minCoeff();
    if (ldlt_.info() != Eigen::Success || !(dmax > 0.0) || dmin <= 1e-14 * dmax)
      throw NumericalError("signature design matrix is singular; increase the ridge");
  }

  int order() const { return order_; }
  LetterSet letters() const { return letters_; }
  bool full_alphabet() const { return letters_ == all_letters(kLeadLagDim); }
  double ridge() const { return ridge_; }
  const PathEnsemble& ensemble() const { return ensemble_; }
  const Eigen::MatrixXd& features() const { return phi_; }

  std::vector<double> payoff_values(const PayoffSpec& spec) const {
    std::vector<double> y(ensemble_.n_paths);
    for (std::size_t i = 0; i < ensemble_.n_paths; ++i)
      y[i] = evaluate_payoff(spec, ensemble_.times, ensemble_.path_prices(i));
    return y;
  }

  // Coefficients in the k!-scaled feature space.
  Eigen::VectorXd fit_scaled(std::span<const double> y, FitDiagnostics* diag = nullptr) const {
    if (y.size() != ensemble_.n_paths) throw InputError("target length differs from ensemble size");
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    for (double v : y)
      if (!std::isfinite(v)) throw InputError("non-finite payoff value");
    Eigen::VectorXd beta = ldlt_.solve(phi_.transpose() * yv);
    if (diag) {
      const Eigen::VectorXd resid = yv - phi_ * beta;
      const double ssr = resid.squaredNorm();
      const double sst = (yv.array() - yv.mean()).matrix().squaredNorm();
      diag->residual_norm = std::sqrt(ssr);
      diag->r2 = sst > 0.0 ? 1.0 - ssr / sst : std::numeric_limits<double>::quiet_NaN();
      diag->ridge = ridge_;
      diag->n_paths = ensemble_.n_paths;
    }
    return beta;
  }

  FreeTensor fit_values(std::span<const double> y, FitDiagnostics* diag = nullptr) const {
    return unscale(fit_scaled(y, diag));
  }

  SignaturePayoff fit(const PayoffSpec& spec) const {
    spec.validate(ensemble_.prices.empty() ? 1.0 : ensemble_.prices[0]);
    const auto y = payoff_values(spec);
    SignaturePayoff out;
    out.f = fit_values(y, &out.diagnostics);
    out.spec = spec;
    return out;
  }

  FreeTensor unscale(const Eigen::VectorXd& beta) const {
    FreeTensor f(dim_, order_);
    const auto scales = level_scales(dim_, order_);
    auto c = f.coefficients();
    if (beta.size() != static_cast<Eigen::Index>(c.size())) throw InputError("coefficient vector has the wrong size");
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = beta(static_cast<Eigen::Index>(j)) * scales[j];
    return full_alphabet() ? f : embed_subset(f, letters_);
  }

 private:
  PathEnsemble ensemble_;
  int order_;
  LetterSet letters_;
  int dim_ = kLeadLagDim;
  double ridge_ = 0.0;
  Eigen::MatrixXd phi_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

inline SignaturePayoff fit_signature_payoff(const PayoffSpec& spec, const PathEnsemble& ensemble, int order,
                                            std::optional<double> ridge = std::nullopt, int threads = 0,
                                            LetterSet letters = all_letters(kLeadLagDim)) {
  return SignatureDesign(ensemble, order, ridge, threads, letters).fit(spec);
}

inline double price_payoff(const FreeTensor& f, const ExpectedSignature& es) {
  if (f.dimension() != kLeadLagDim) throw InputError("payoff functional must be over 4 letters");
  es.require_letters(f);
  return pair(f, es.tensor);
}

inline double price_payoff(const SignaturePayoff& f, const ExpectedSignature& es) { return price_payoff(f.f, es); }

}  // namespace sighedge
