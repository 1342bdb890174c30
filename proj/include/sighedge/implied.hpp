#pragma once

// Implied expected signature: the discounted expected signature that prices
// a set of quoted payoffs through their signature-payoff projections.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/leadlag.hpp"
#include "sighedge/market.hpp"
#include "sighedge/payoffs.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

struct Quote {
  std::string id;
  PayoffSpec spec;
  double price = 0.0;
  bool train = true;
};

struct ImpliedDiagnostics {
  double train_residual = 0.0;  // ‖B y - p‖₂
  double regularization = 0.0;  // absolute ridge added to B Bᵀ
  int rank = 0;
  bool rank_deficient = false;
  bool time_words_constrained = true;
  std::size_t n_quotes = 0;
  std::string warning;
};

struct ImpliedExpectedSignature {
  ExpectedSignature es;
  ImpliedDiagnostics diagnostics;
};

struct PricePrediction {
  std::vector<double> prices;
  double r2 = std::numeric_limits<double>::quiet_NaN();
  bool r2_defined = false;
};

struct DiscountEstimate {
  double Z = 1.0;
  double rate = 0.0;
};

namespace detail {

// True when the word at flat index `idx` uses only letters 1 and 3.
inline bool is_time_word(std::size_t idx, int order) {
  for (int k = 1; k <= order; ++k) {
    const std::size_t off = level_offset(kLeadLagDim, k);
    if (idx < off + level_size(kLeadLagDim, k)) {
      const Word w = word_at(kLeadLagDim, k, idx - off);
      return std::all_of(w.letters().begin(), w.letters().end(), [](int a) { return a == 1 || a == 3; });
    }
  }
  return false;
}

}  // namespace detail

// Lead-lag signature of the clock alone on `grid` rescaled to length T,
// embedded in the 4-letter alphabet (zero off the {1, 3} words).
inline FreeTensor time_word_signature(std::span<const double> grid, double T, int order) {
  if (grid.size() < 3) throw InputError("time grid needs at least 3 samples");
  const double span = grid.back() - grid.front();
  std::vector<double> t(grid.size()), flat(grid.size(), 1.0);
  for (std::size_t k = 0; k < grid.size(); ++k) t[k] = (grid[k] - grid.front()) * T / span;
  constexpr LetterSet kClock = 0b0101;
  return embed_subset(leadlag_signature_reduced(t, flat, order, kClock), kClock);
}

// `reg` is relative to the mean diagonal of B Bᵀ; 0 selects the exact
// minimum-norm least-squares solution.
inline ImpliedExpectedSignature implied_expected_signature(const std::vector<Quote>& quotes,
                                                           const SignatureDesign& design, double T, double reg = 1e-10,
                                                           bool constrain_time_words = true) {
  if (quotes.size() < 2) throw InputError("implied expected signature needs at least 2 quotes");
  if (!(T > 0.0)) throw InputError("maturity must be positive");
  if (!(reg >= 0.0)) throw InputError("regularization must be >= 0");
  if (!design.full_alphabet()) throw InputError("implied expected signature needs a design over all 4 letters");
  const int N = design.order();
  const std::size_t p = tensor_size(kLeadLagDim, N);
  const auto m = static_cast<Eigen::Index>(quotes.size());

  // Rows are the k!-scaled regression coefficients, unknowns y_w = k!·ES_w.
  Eigen::MatrixXd B(m, static_cast<Eigen::Index>(p));
  Eigen::VectorXd prices(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& q = quotes[static_cast<std::size_t>(i)];
    if (!std::isfinite(q.price)) throw InputError("quote '" + q.id + "' has a non-finite price");
    q.spec.validate(design.ensemble().prices[0]);
    B.row(i) = design.fit_scaled(design.payoff_values(q.spec)).transpose();
    prices(i) = q.price;
  }

  // Words over the time letters {1, 3} are deterministic: their expectation
  // is Z times the signature of the time-only lead-lag path, so with
  // y_w = k!·ES_w each such column folds into ∅ with weight k!·c_w.
  std::vector<char> eliminated(p, 0);
  const auto scales = level_scales(kLeadLagDim, N);
  FreeTensor clock;
  if (constrain_time_words) {
    clock = time_word_signature(design.ensemble().times, T, N);
    for (std::size_t idx = 1; idx < p; ++idx) {
      if (!detail::is_time_word(idx, N)) continue;
      B.col(0) += scales[idx] * clock.coefficients()[idx] * B.col(static_cast<Eigen::Index>(idx));
      eliminated[idx] = 1;
    }
  }
  std::vector<Eigen::Index> free_cols;
  for (std::size_t j = 0; j < p; ++j)
    if (!eliminated[j]) free_cols.push_back(static_cast<Eigen::Index>(j));
  Eigen::MatrixXd Bf(m, static_cast<Eigen::Index>(free_cols.size()));
  for (std::size_t c = 0; c < free_cols.size(); ++c) Bf.col(static_cast<Eigen::Index>(c)) = B.col(free_cols[c]);

  ImpliedExpectedSignature out;
  auto& diag = out.diagnostics;
  diag.n_quotes = quotes.size();
  diag.time_words_constrained = constrain_time_words;

  const Eigen::MatrixXd G = Bf * Bf.transpose();
  Eigen::VectorXd yf;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const auto& lam = eig.eigenvalues();
    const double top = lam.cwiseAbs().maxCoeff();
    int rank = 0;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
      if (lam(i) > 1e-12 * top) ++rank;
    diag.rank = rank;
    diag.rank_deficient = rank < m;
  }
  if (reg > 0.0) {
    diag.regularization = reg * G.trace() / static_cast<double>(m);
    Eigen::MatrixXd Gr = G;
    Gr.diagonal().array() += diag.regularization;
    yf = Bf.transpose() * Gr.ldlt().solve(prices);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Bf);
    yf = cod.solve(prices);
  }
  diag.train_residual = (Bf * yf - prices).norm();
  if (diag.rank_deficient)
    diag.warning = "quote payoffs are linearly dependent (rank " + std::to_string(diag.rank) + " of " +
                   std::to_string(m) + "); minimum-norm solution returned";

  FreeTensor es(kLeadLagDim, N);
  auto c = es.coefficients();
  for (std::size_t j = 0; j < free_cols.size(); ++j) {
    const auto idx = static_cast<std::size_t>(free_cols[j]);
    c[idx] = yf(static_cast<Eigen::Index>(j)) / scales[idx];
  }
  if (constrain_time_words)
    for (std::size_t idx = 1; idx < p; ++idx)
      if (eliminated[idx]) c[idx] = c[0] * clock.coefficients()[idx];
  out.es.tensor = std::move(es);
  out.es.standard_errors = FreeTensor(kLeadLagDim, N);
  out.es.n_paths = design.ensemble().n_paths;
  out.es.seed = design.ensemble().seed;
  out.es.T = T;
  out.es.discounted = true;
  const double Z = out.es.tensor.coefficients()[0];
  out.es.rate = Z > 0.0 ? -std::log(Z) / T : 0.0;
  return out;
}

inline ImpliedExpectedSignature implied_expected_signature(const std::vector<Quote>& quotes,
                                                           const PathEnsemble& ensemble, int order, double reg = 1e-10,
                                                           bool constrain_time_words = true) {
  const SignatureDesign design(ensemble, order);
  return implied_expected_signature(quotes, design, ensemble.horizon(), reg, constrain_time_words);
}

inline double r_squared(const std::vector<double>& actual, const std::vector<double>& predicted, bool* defined) {
  const std::size_t n = actual.size();
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(std::max<std::size_t>(n, 1));
  double sst = 0.0, ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sst += (actual[i] - mean) * (actual[i] - mean);
    ssr += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  }
  // Prices that agree to rounding count as constant.
  const double noise = static_cast<double>(n) * std::pow(1e-13 * std::abs(mean), 2);
  const bool ok = sst > noise && sst > 0.0;
  if (defined) *defined = ok;
  return ok ? 1.0 - ssr / sst : std::numeric_limits<double>::quiet_NaN();
}

inline PricePrediction predict_prices(const ImpliedExpectedSignature& ies, const std::vector<Quote>& quotes,
                                      const SignatureDesign& design) {
  PricePrediction out;
  std::vector<double> actual;
  for (const auto& q : quotes) {
    const FreeTensor ell = design.fit_values(design.payoff_values(q.spec));
    out.prices.push_back(pair(ell, ies.es.tensor));
    actual.push_back(q.price);
  }
  out.r2 = r_squared(actual, out.prices, &out.r2_defined);
  return out;
}

inline DiscountEstimate extract_discount(const ImpliedExpectedSignature& ies, double T) {
  if (!(T > 0.0)) throw InputError("maturity must be positive");
  const double Z = ies.es.tensor.coefficients()[0];
  if (!(Z > 0.0)) throw DataQualityError("implied discount factor is not positive (" + std::to_string(Z) + ")");
  return {Z, -std::log(Z) / T};
}

// Synthetic desk menu: European calls and puts alternating over strikes
// 0.8..1.2, up-and-out calls (K 0.8..1.1 cycling, B 1.15..1.5), variance
// swaps (K_var 0.01..0.08) and optional Asian calls. Prices are left at 0.
inline std::vector<Quote> synthetic_quote_menu(int n_european, int n_barrier, int n_varswap, int n_asian = 0) {
  if (n_european < 0 || n_barrier < 0 || n_varswap < 0 || n_asian < 0) throw InputError("quote counts must be >= 0");
  auto lin = [](int i, int n, double a, double b) { return n <= 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1); };
  std::vector<Quote> q;
  for (int i = 0; i < n_european; ++i) {
    const double K = lin(i, n_european, 0.8, 1.2);
    q.push_back({"eu" + std::to_string(i), i % 2 ? PayoffSpec::put(K) : PayoffSpec::call(K), 0.0});
  }
  for (int i = 0; i < n_barrier; ++i)
    q.push_back({"bar" + std::to_string(i),
                 PayoffSpec::barrier_call(lin(i % 10, 10, 0.8, 1.1), lin(i, n_barrier, 1.15, 1.5)), 0.0});
  for (int i = 0; i < n_varswap; ++i)
    q.push_back({"var" + std::to_string(i), PayoffSpec::variance_swap(lin(i, n_varswap, 0.01, 0.08)), 0.0});
  for (int i = 0; i < n_asian; ++i)
    q.push_back({"asian" + std::to_string(i), PayoffSpec::asian_call(lin(i, n_asian, 0.8, 1.2)), 0.0});
  return q;
}

// Discounted Monte Carlo prices Z·mean F over the ensemble.
inline void price_quotes_mc(std::vector<Quote>& quotes, const PathEnsemble& e, double Z) {
  for (auto& q : quotes) {
    double s = 0.0;
    for (std::size_t i = 0; i < e.n_paths; ++i) s += evaluate_payoff(q.spec, e.times, e.path_prices(i));
    q.price = Z * s / static_cast<double>(e.n_paths);
  }
}

}  // namespace sighedge
