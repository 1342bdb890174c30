#pragma once

// Test-side reference implementations, written independently of the library
// kernels: recursive shuffles, sparse word maps, naive iterated integrals.

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "sighedge/tensor.hpp"

namespace oracle {

using WordMap = std::map<std::vector<int>, double>;

// Textbook recursion: ua ⧢ vb = (u ⧢ vb)a + (ua ⧢ v)b.
inline WordMap shuffle_words(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.empty()) return {{b, 1.0}};
  if (b.empty()) return {{a, 1.0}};
  WordMap out;
  const std::vector<int> u(a.begin(), a.end() - 1), v(b.begin(), b.end() - 1);
  for (const auto& [w, c] : shuffle_words(u, b)) {
    auto x = w;
    x.push_back(a.back());
    out[x] += c;
  }
  for (const auto& [w, c] : shuffle_words(a, v)) {
    auto x = w;
    x.push_back(b.back());
    out[x] += c;
  }
  return out;
}

inline WordMap to_map(const sighedge::FreeTensor& t) {
  WordMap m;
  for (int k = 0; k <= t.order(); ++k) {
    const auto lv = t.level(k);
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (lv[i] != 0.0) m[sighedge::word_at(t.dimension(), k, i).letters()] += lv[i];
  }
  return m;
}

inline WordMap shuffle(const WordMap& a, const WordMap& b, int order) {
  WordMap out;
  for (const auto& [u, cu] : a)
    for (const auto& [v, cv] : b) {
      if (static_cast<int>(u.size() + v.size()) > order) continue;
      for (const auto& [w, c] : shuffle_words(u, v)) out[w] += cu * cv * c;
    }
  return out;
}

inline double value(const sighedge::FreeTensor& t, const std::vector<int>& w) {
  return t[sighedge::Word(w)];
}

inline sighedge::FreeTensor random_tensor(std::mt19937_64& rng, int d, int order, double density = 1.0) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u;
  sighedge::FreeTensor t(d, order);
  for (auto& c : t.coefficients())
    if (u(rng) < density) c = n(rng);
  return t;
}

// Iterated integrals of a piecewise-linear path by direct recursion on
// segments: S_w(path) built from Chen's identity on naive maps, no Horner.
inline WordMap segment_exp(const std::vector<double>& h, int order) {
  WordMap out{{{}, 1.0}};
  std::vector<std::pair<std::vector<int>, double>> frontier{{{}, 1.0}};
  for (int k = 1; k <= order; ++k) {
    std::vector<std::pair<std::vector<int>, double>> next;
    for (const auto& [w, c] : frontier)
      for (std::size_t i = 0; i < h.size(); ++i) {
        auto w2 = w;
        w2.push_back(static_cast<int>(i) + 1);
        next.push_back({w2, c * h[i] / k});
      }
    for (const auto& [w, c] : next) out[w] += c;
    frontier = std::move(next);
  }
  return out;
}

inline WordMap concat_product(const WordMap& a, const WordMap& b, int order) {
  WordMap out;
  for (const auto& [u, cu] : a)
    for (const auto& [v, cv] : b) {
      if (static_cast<int>(u.size() + v.size()) > order) continue;
      auto w = u;
      w.insert(w.end(), v.begin(), v.end());
      out[w] += cu * cv;
    }
  return out;
}

inline WordMap knot_signature(const std::vector<std::vector<double>>& knots, int order) {
  WordMap s{{{}, 1.0}};
  for (std::size_t k = 1; k < knots.size(); ++k) {
    std::vector<double> h(knots[k].size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = knots[k][i] - knots[k - 1][i];
    s = concat_product(s, segment_exp(h, order), order);
  }
  return s;
}

inline double get(const WordMap& m, const std::vector<int>& w) {
  const auto it = m.find(w);
  return it == m.end() ? 0.0 : it->second;
}

inline double rel_close(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace oracle
