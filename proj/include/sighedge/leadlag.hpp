#pragma once

// Time augmentation and the discrete lead-lag transform.
//
// Lead-lag alphabet: 1 = lag time, 2 = lag price, 3 = lead time,
// 4 = lead price. Within each sampling step the lead copy moves first and the
// lag copy follows, so the lag sits at Z_k while the lead traverses
// [Z_k, Z_{k+1}]. This ordering makes ⟨ℓ4⟩ the left-point (Itô) sum and
// ⟨42⟩ - ⟨24⟩ the realized quadratic variation, both exactly.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/signature.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

inline constexpr int kLeadLagDim = 4;

struct AugmentedPath {
  DiscretePath path;  // coordinates (time, price)
  bool normalized = false;

  std::size_t size() const { return path.size(); }
  double time(std::size_t k) const { return path.value(k, 0); }
  double price(std::size_t k) const { return path.value(k, 1); }
};

inline AugmentedPath augment(const DiscretePath& path, bool normalize = false) {
  if (path.dim() != 1) throw InputError("augment expects a one-dimensional price path");
  const double x0 = path.value(0);
  if (normalize && x0 == 0.0) throw InputError("cannot normalize a path starting at 0");
  const double scale = normalize ? 1.0 / x0 : 1.0;
  std::vector<double> vals(2 * path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    vals[2 * k] = path.time(k);
    vals[2 * k + 1] = path.value(k) * scale;
  }
  return {DiscretePath(std::vector<double>(path.times().begin(), path.times().end()), std::move(vals), 2),
          normalize};
}

inline AugmentedPath augment(std::span<const double> times, std::span<const double> prices) {
  return augment(DiscretePath::scalar({times.begin(), times.end()}, {prices.begin(), prices.end()}));
}

struct LeadLagPath {
  std::vector<std::array<double, 4>> knots;  // (lag t, lag x, lead t, lead x)
};

// Knots (Z0,Z0), (Z0,Z1), (Z1,Z1), (Z1,Z2), ..., (Z_{n-1},Z_n), (Z_n,Z_n).
inline LeadLagPath hoff_transform(const AugmentedPath& path) {
  if (path.size() < 3) throw InputError("lead-lag transform needs at least 3 samples");
  LeadLagPath out;
  const std::size_t n = path.size();
  out.knots.reserve(2 * n - 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = path.time(k), x = path.price(k);
    out.knots.push_back({t, x, t, x});
    if (k + 1 < n) out.knots.push_back({t, x, path.time(k + 1), path.price(k + 1)});
  }
  return out;
}

namespace detail {

inline std::vector<int> letters_of(LetterSet set, int dimension) {
  std::vector<int> out;
  for (int l = 1; l <= dimension; ++l)
    if (set >> (l - 1) & 1U) out.push_back(l);
  return out;
}

// Lead-lag signature restricted to the coordinates in `letters` (sorted,
// 1-based over the 4-letter alphabet), folded into S of dimension
// letters.size(). Coordinates outside the subset are projected out, which
// leaves the signature of the projected path.
inline void accumulate_leadlag(FreeTensor& S, std::span<const double> times, std::span<const double> prices,
                               std::span<const int> letters, HornerWorkspace& ws) {
  const std::size_t m = letters.size();
  std::array<double, 4> inc{};
  std::array<int, 4> slot{-1, -1, -1, -1};
  for (std::size_t i = 0; i < m; ++i) slot[static_cast<std::size_t>(letters[i] - 1)] = static_cast<int>(i);
  auto put = [&](int letter, double v) {
    const int s = slot[static_cast<std::size_t>(letter - 1)];
    if (s >= 0) inc[static_cast<std::size_t>(s)] = v;
  };
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double dt = times[k + 1] - times[k];
    const double dx = prices[k + 1] - prices[k];
    inc.fill(0.0);
    put(3, dt);
    put(4, dx);
    mul_exp_inplace(S, std::span<const double>(inc.data(), m), ws);
    inc.fill(0.0);
    put(1, dt);
    put(2, dx);
    mul_exp_inplace(S, std::span<const double>(inc.data(), m), ws);
  }
}

}  // namespace detail

// Lead-lag signature over the letter subset `letters`, returned in the
// reduced alphabet (dimension = popcount). Used where only some letters are
// ever paired, since cost grows like |letters|^order.
inline FreeTensor leadlag_signature_reduced(std::span<const double> times, std::span<const double> prices,
                                            int order, LetterSet letters) {
  if (times.size() < 3) throw InputError("lead-lag transform needs at least 3 samples");
  const auto lv = detail::letters_of(letters & all_letters(kLeadLagDim), kLeadLagDim);
  if (lv.empty()) throw InputError("empty letter subset");
  FreeTensor S = FreeTensor::unit(static_cast<int>(lv.size()), order);
  detail::HornerWorkspace ws;
  detail::accumulate_leadlag(S, times, prices, lv, ws);
  return S;
}

// Places a reduced-alphabet tensor back into the 4-letter alphabet.
inline FreeTensor embed_subset(const FreeTensor& reduced, LetterSet letters) {
  const auto lv = detail::letters_of(letters & all_letters(kLeadLagDim), kLeadLagDim);
  if (static_cast<int>(lv.size()) != reduced.dimension()) throw InputError("letter subset does not match tensor");
  return embed_letters(reduced, kLeadLagDim, lv);
}

inline TruncatedSignature leadlag_signature(const AugmentedPath& path, int order,
                                            LetterSet letters = all_letters(kLeadLagDim)) {
  const std::size_t n = path.size();
  std::vector<double> t(n), x(n);
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = path.time(k);
    x[k] = path.price(k);
  }
  FreeTensor reduced = leadlag_signature_reduced(t, x, order, letters);
  FreeTensor full = (letters & all_letters(kLeadLagDim)) == all_letters(kLeadLagDim)
                        ? std::move(reduced)
                        : embed_subset(reduced, letters);
  return {std::move(full), t.front(), t.back()};
}

inline double realized_qv(const DiscretePath& path) {
  if (path.dim() != 1) throw InputError("realized_qv expects a one-dimensional path");
  double qv = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double dx = path.value(k) - path.value(k - 1);
    qv += dx * dx;
  }
  return qv;
}

}  // namespace sighedge
