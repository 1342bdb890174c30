#pragma once

// Free tensor algebra over words: dense graded storage, shuffle product,
// concatenation and the dual pairing between functionals and tensors.
//
// Letters are 1-based (1..d) in the public API. Within a level, words are
// ordered in base-d with the first letter most significant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sighedge/errors.hpp"

namespace sighedge {

inline std::size_t level_size(int dimension, int level) {
  std::size_t n = 1;
  for (int k = 0; k < level; ++k) n *= static_cast<std::size_t>(dimension);
  return n;
}

// Offset of the first coefficient of `level` in the flat storage.
inline std::size_t level_offset(int dimension, int level) {
  std::size_t off = 0;
  std::size_t width = 1;
  for (int k = 0; k < level; ++k) {
    off += width;
    width *= static_cast<std::size_t>(dimension);
  }
  return off;
}

inline std::size_t tensor_size(int dimension, int order) {
  return level_offset(dimension, order + 1);
}

class Word {
 public:
  Word() = default;
  Word(std::initializer_list<int> letters) : letters_(letters) {}
  explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}

  std::size_t size() const noexcept { return letters_.size(); }
  bool empty() const noexcept { return letters_.empty(); }
  int operator[](std::size_t i) const { return letters_[i]; }
  const std::vector<int>& letters() const noexcept { return letters_; }

  Word concat(int letter) const {
    Word out = *this;
    out.letters_.push_back(letter);
    return out;
  }
  Word concat(const Word& tail) const {
    Word out = *this;
    out.letters_.insert(out.letters_.end(), tail.letters_.begin(), tail.letters_.end());
    return out;
  }

  std::string str() const {
    if (letters_.empty()) return "()";
    std::string s;
    const bool compact = std::all_of(letters_.begin(), letters_.end(), [](int l) { return l < 10; });
    for (std::size_t i = 0; i < letters_.size(); ++i) {
      if (!compact && i > 0) s += ',';
      s += std::to_string(letters_[i]);
    }
    return s;
  }

  friend bool operator==(const Word&, const Word&) = default;

 private:
  std::vector<int> letters_;
};

struct WordPosition {
  int level = 0;
  std::size_t index = 0;
  friend bool operator==(const WordPosition&, const WordPosition&) = default;
};

inline WordPosition word_index(const Word& w, int dimension) {
  std::size_t idx = 0;
  for (int letter : w.letters()) {
    if (letter < 1 || letter > dimension)
      throw InputError("letter " + std::to_string(letter) + " outside alphabet of size " +
                       std::to_string(dimension));
    idx = idx * static_cast<std::size_t>(dimension) + static_cast<std::size_t>(letter - 1);
  }
  return {static_cast<int>(w.size()), idx};
}

inline Word word_at(int dimension, int level, std::size_t index) {
  std::vector<int> letters(static_cast<std::size_t>(level));
  for (int p = level - 1; p >= 0; --p) {
    letters[static_cast<std::size_t>(p)] = static_cast<int>(index % static_cast<std::size_t>(dimension)) + 1;
    index /= static_cast<std::size_t>(dimension);
  }
  return Word(std::move(letters));
}

// Bit (letter - 1) set when the letter is available.
using LetterSet = std::uint32_t;

inline LetterSet all_letters(int dimension) {
  return dimension >= 32 ? ~LetterSet{0} : (LetterSet{1} << dimension) - 1;
}

class FreeTensor {
 public:
  FreeTensor() = default;
  FreeTensor(int dimension, int order) : dim_(dimension), order_(order) {
    if (dimension < 1) throw InputError("tensor dimension must be >= 1");
    if (order < 0) throw InputError("tensor order must be >= 0");
    coeffs_.assign(tensor_size(dimension, order), 0.0);
  }

  static FreeTensor unit(int dimension, int order) {
    FreeTensor t(dimension, order);
    t.coeffs_[0] = 1.0;
    return t;
  }

  // Sparse word listing; repeated words accumulate.
  static FreeTensor from_terms(int dimension, int order,
                               std::initializer_list<std::pair<Word, double>> terms) {
    return from_terms(dimension, order, std::vector<std::pair<Word, double>>(terms));
  }
  static FreeTensor from_terms(int dimension, int order,
                               const std::vector<std::pair<Word, double>>& terms) {
    FreeTensor t(dimension, order);
    for (const auto& [w, c] : terms) {
      if (static_cast<int>(w.size()) > order)
        throw CapacityError("word " + w.str() + " longer than tensor order " + std::to_string(order));
      t[w] += c;
    }
    return t;
  }

  static FreeTensor from_levels(int dimension, const std::vector<std::vector<double>>& levels) {
    if (levels.empty()) throw InputError("tensor needs at least level 0");
    FreeTensor t(dimension, static_cast<int>(levels.size()) - 1);
    for (std::size_t k = 0; k < levels.size(); ++k) {
      if (levels[k].size() != level_size(dimension, static_cast<int>(k)))
        throw InputError("level " + std::to_string(k) + " has " + std::to_string(levels[k].size()) +
                         " coefficients, expected " +
                         std::to_string(level_size(dimension, static_cast<int>(k))));
      std::copy(levels[k].begin(), levels[k].end(), t.level(static_cast<int>(k)).begin());
    }
    return t;
  }

  int dimension() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  std::size_t size() const noexcept { return coeffs_.size(); }

  std::span<double> coefficients() noexcept { return coeffs_; }
  std::span<const double> coefficients() const noexcept { return coeffs_; }

  std::span<double> level(int k) {
    check_level(k);
    return {coeffs_.data() + level_offset(dim_, k), level_size(dim_, k)};
  }
  std::span<const double> level(int k) const {
    check_level(k);
    return {coeffs_.data() + level_offset(dim_, k), level_size(dim_, k)};
  }

  double operator[](const Word& w) const {
    const auto pos = word_index(w, dim_);
    if (pos.level > order_) return 0.0;
    return coeffs_[level_offset(dim_, pos.level) + pos.index];
  }
  double& operator[](const Word& w) {
    const auto pos = word_index(w, dim_);
    if (pos.level > order_)
      throw CapacityError("word " + w.str() + " beyond tensor order " + std::to_string(order_));
    return coeffs_[level_offset(dim_, pos.level) + pos.index];
  }

  // Highest level carrying a nonzero coefficient; -1 for the zero tensor.
  int degree() const {
    for (int k = order_; k >= 0; --k) {
      const auto lv = level(k);
      if (std::any_of(lv.begin(), lv.end(), [](double c) { return c != 0.0; })) return k;
    }
    return -1;
  }

  // Letters appearing in some word with a nonzero coefficient.
  LetterSet letters_used() const {
    LetterSet used = 0;
    for (int k = 1; k <= order_; ++k) {
      const auto lv = level(k);
      for (std::size_t i = 0; i < lv.size(); ++i) {
        if (lv[i] == 0.0) continue;
        std::size_t idx = i;
        for (int p = 0; p < k; ++p) {
          used |= LetterSet{1} << (idx % static_cast<std::size_t>(dim_));
          idx /= static_cast<std::size_t>(dim_);
        }
      }
    }
    return used;
  }

  // Truncates or zero-extends to a new order.
  FreeTensor with_order(int order) const {
    FreeTensor out(dim_, order);
    const std::size_t n = std::min(out.coeffs_.size(), coeffs_.size());
    std::copy_n(coeffs_.begin(), n, out.coeffs_.begin());
    return out;
  }

  FreeTensor& operator+=(const FreeTensor& o) { return axpy(1.0, o); }
  FreeTensor& operator-=(const FreeTensor& o) { return axpy(-1.0, o); }
  FreeTensor& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }

  // this += s * o, growing the order if `o` is deeper.
  FreeTensor& axpy(double s, const FreeTensor& o) {
    if (o.dim_ != dim_)
      throw InputError("dimension mismatch: " + std::to_string(dim_) + " vs " + std::to_string(o.dim_));
    if (o.order_ > order_) *this = with_order(o.order_);
    for (std::size_t i = 0; i < o.coeffs_.size(); ++i) coeffs_[i] += s * o.coeffs_[i];
    return *this;
  }

  friend FreeTensor operator+(FreeTensor a, const FreeTensor& b) { return a += b; }
  friend FreeTensor operator-(FreeTensor a, const FreeTensor& b) { return a -= b; }
  friend FreeTensor operator*(double s, FreeTensor a) { return a *= s; }
  friend FreeTensor operator*(FreeTensor a, double s) { return a *= s; }
  friend bool operator==(const FreeTensor&, const FreeTensor&) = default;

 private:
  void check_level(int k) const {
    if (k < 0 || k > order_)
      throw CapacityError("level " + std::to_string(k) + " outside tensor of order " + std::to_string(order_));
  }

  int dim_ = 0;
  int order_ = 0;
  std::vector<double> coeffs_;
};

namespace detail {

// Nonzero coefficients of one level together with their base-d digits.
struct LevelTerms {
  int length = 0;
  std::vector<std::size_t> index;
  std::vector<double> coef;
  std::vector<int> digits;  // length digits per term, most significant first
  bool empty() const { return coef.empty(); }
};

inline LevelTerms level_terms(const FreeTensor& t, int k) {
  LevelTerms out;
  out.length = k;
  const auto lv = t.level(k);
  const auto d = static_cast<std::size_t>(t.dimension());
  for (std::size_t i = 0; i < lv.size(); ++i) {
    if (lv[i] == 0.0) continue;
    out.index.push_back(i);
    out.coef.push_back(lv[i]);
    std::size_t idx = i;
    const std::size_t base = out.digits.size();
    out.digits.resize(base + static_cast<std::size_t>(k));
    for (int p = k - 1; p >= 0; --p) {
      out.digits[base + static_cast<std::size_t>(p)] = static_cast<int>(idx % d);
      idx /= d;
    }
  }
  return out;
}

inline std::vector<LevelTerms> all_level_terms(const FreeTensor& t) {
  std::vector<LevelTerms> out;
  out.reserve(static_cast<std::size_t>(t.order()) + 1);
  for (int k = 0; k <= t.order(); ++k) out.push_back(level_terms(t, k));
  return out;
}

// Visits every k-subset of {0..n-1} as a bitmask (Gosper's hack).
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k == 0) {
    fn(std::uint64_t{0});
    return;
  }
  std::uint64_t m = (std::uint64_t{1} << k) - 1;
  const std::uint64_t limit = std::uint64_t{1} << n;
  while (m < limit) {
    fn(m);
    const std::uint64_t c = m & (~m + 1);
    const std::uint64_t r = m + c;
    m = (((r ^ m) >> 2) / c) | r;
  }
}

// Shuffles one block of nonzero words: for every interleaving pattern the
// result index splits as U(u) + V(v), so each pattern costs one pass over the
// pairs. sink(index within level i+j, coefficient).
template <class Sink>
void shuffle_block(const LevelTerms& a, const LevelTerms& b, int dimension, Sink&& sink) {
  const int i = a.length;
  const int j = b.length;
  const int n = i + j;
  std::vector<std::size_t> weight(static_cast<std::size_t>(n));
  {
    std::size_t w = 1;
    for (int p = n - 1; p >= 0; --p) {
      weight[static_cast<std::size_t>(p)] = w;
      w *= static_cast<std::size_t>(dimension);
    }
  }
  const std::size_t na = a.coef.size();
  const std::size_t nb = b.coef.size();
  std::vector<std::size_t> ua(na), vb(nb), wu(static_cast<std::size_t>(i)), wv(static_cast<std::size_t>(j));
  for_each_subset(n, j, [&](std::uint64_t mask) {
    std::size_t ru = 0, rv = 0;
    for (int p = 0; p < n; ++p) {
      if (mask >> p & 1U)
        wv[rv++] = weight[static_cast<std::size_t>(p)];
      else
        wu[ru++] = weight[static_cast<std::size_t>(p)];
    }
    for (std::size_t t = 0; t < na; ++t) {
      std::size_t s = 0;
      const int* dg = a.digits.data() + t * static_cast<std::size_t>(i);
      for (int r = 0; r < i; ++r) s += static_cast<std::size_t>(dg[r]) * wu[static_cast<std::size_t>(r)];
      ua[t] = s;
    }
    for (std::size_t t = 0; t < nb; ++t) {
      std::size_t s = 0;
      const int* dg = b.digits.data() + t * static_cast<std::size_t>(j);
      for (int r = 0; r < j; ++r) s += static_cast<std::size_t>(dg[r]) * wv[static_cast<std::size_t>(r)];
      vb[t] = s;
    }
    for (std::size_t ta = 0; ta < na; ++ta) {
      const double ca = a.coef[ta];
      const std::size_t base = ua[ta];
      for (std::size_t tb = 0; tb < nb; ++tb) sink(base + vb[tb], ca * b.coef[tb]);
    }
  });
}

inline void require_same_dimension(const FreeTensor& a, const FreeTensor& b, const char* op) {
  if (a.dimension() != b.dimension())
    throw InputError(std::string(op) + ": dimension mismatch (" + std::to_string(a.dimension()) + " vs " +
                     std::to_string(b.dimension()) + ")");
}

}  // namespace detail

// Bilinear shuffle product truncated at `order`.
inline FreeTensor shuffle(const FreeTensor& a, const FreeTensor& b, int order) {
  detail::require_same_dimension(a, b, "shuffle");
  FreeTensor out(a.dimension(), order);
  const auto ta = detail::all_level_terms(a);
  const auto tb = detail::all_level_terms(b);
  for (int i = 0; i <= a.order(); ++i) {
    if (ta[static_cast<std::size_t>(i)].empty()) continue;
    for (int j = 0; j <= b.order() && i + j <= order; ++j) {
      if (tb[static_cast<std::size_t>(j)].empty()) continue;
      auto lv = out.level(i + j);
      detail::shuffle_block(ta[static_cast<std::size_t>(i)], tb[static_cast<std::size_t>(j)], a.dimension(),
                            [&](std::size_t idx, double c) { lv[idx] += c; });
    }
  }
  return out;
}

// <functional, tensor>. Mass of the functional above the tensor order is a
// capacity error.
inline double pair(const FreeTensor& functional, const FreeTensor& tensor) {
  detail::require_same_dimension(functional, tensor, "pair");
  if (functional.degree() > tensor.order())
    throw CapacityError("functional of degree " + std::to_string(functional.degree()) +
                        " paired with tensor of order " + std::to_string(tensor.order()));
  const std::size_t n = std::min(functional.size(), tensor.size());
  const auto f = functional.coefficients();
  const auto s = tensor.coefficients();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += f[i] * s[i];
  return acc;
}

// <a ⧢ b, tensor> without materialising the shuffle. When `truncate` is set,
// word pairs reaching beyond the tensor order are dropped; otherwise they are
// a capacity error.
inline double pair_shuffle(const FreeTensor& a, const FreeTensor& b, const FreeTensor& tensor,
                           bool truncate = false) {
  detail::require_same_dimension(a, b, "pair_shuffle");
  detail::require_same_dimension(a, tensor, "pair_shuffle");
  const int da = a.degree();
  const int db = b.degree();
  if (da < 0 || db < 0) return 0.0;
  if (!truncate && da + db > tensor.order())
    throw CapacityError("shuffle of degrees " + std::to_string(da) + "+" + std::to_string(db) +
                        " exceeds tensor order " + std::to_string(tensor.order()));
  const auto s = tensor.coefficients();
  double acc = 0.0;
  for (int i = 0; i <= da; ++i) {
    const auto ta = detail::level_terms(a, i);
    if (ta.empty()) continue;
    for (int j = 0; j <= db && i + j <= tensor.order(); ++j) {
      const auto tb = detail::level_terms(b, j);
      if (tb.empty()) continue;
      const double* lv = s.data() + level_offset(tensor.dimension(), i + j);
      detail::shuffle_block(ta, tb, a.dimension(), [&](std::size_t idx, double c) { acc += c * lv[idx]; });
    }
  }
  return acc;
}

// a_0 ∅ + a_1 ℓ + a_2 ℓ⧢ℓ + ... with shuffle powers truncated at `order`.
inline FreeTensor poly_shuffle_lift(std::span<const double> poly, const FreeTensor& ell, int order,
                                    bool allow_truncation = false) {
  const int q = static_cast<int>(poly.size()) - 1;
  FreeTensor out(ell.dimension(), order);
  if (q < 0) return out;
  const int deg = ell.degree();
  if (!allow_truncation && deg > 0 && q * deg > order)
    throw CapacityError("shuffle power of degree " + std::to_string(q) + " needs order " +
                        std::to_string(q * deg) + " > " + std::to_string(order));
  FreeTensor power = FreeTensor::unit(ell.dimension(), order);
  out.axpy(poly[0], power);
  for (int k = 1; k <= q; ++k) {
    power = shuffle(power, ell, order);
    out.axpy(poly[static_cast<std::size_t>(k)], power);
  }
  return out;
}

inline FreeTensor poly_shuffle_lift(std::initializer_list<double> poly, const FreeTensor& ell, int order,
                                    bool allow_truncation = false) {
  return poly_shuffle_lift(std::span<const double>(poly.begin(), poly.size()), ell, order, allow_truncation);
}

// ℓ·w: every word u maps to u followed by `tail`.
inline FreeTensor concat(const FreeTensor& ell, const Word& tail, int target_order) {
  const int d = ell.dimension();
  const auto tail_pos = word_index(tail, d);
  const int shift = tail_pos.level;
  const int deg = ell.degree();
  if (deg + shift > target_order)
    throw CapacityError("concatenation reaches level " + std::to_string(deg + shift) + " > target order " +
                        std::to_string(target_order));
  FreeTensor out(d, target_order);
  const std::size_t tail_width = level_size(d, shift);
  for (int k = 0; k <= deg; ++k) {
    const auto src = ell.level(k);
    auto dst = out.level(k + shift);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i * tail_width + tail_pos.index] += src[i];
  }
  return out;
}

inline FreeTensor concat_letter(const FreeTensor& ell, int letter, int target_order) {
  return concat(ell, Word{letter}, target_order);
}

inline FreeTensor concat_letter(const FreeTensor& ell, int letter) {
  return concat_letter(ell, letter, ell.order() + 1);
}

// Relabels letters through `map` (map[l-1] = new letter) into a wider alphabet.
inline FreeTensor embed_letters(const FreeTensor& ell, int target_dimension, std::span<const int> map) {
  const int d = ell.dimension();
  if (static_cast<int>(map.size()) != d) throw InputError("letter map size must equal source dimension");
  for (int l : map)
    if (l < 1 || l > target_dimension) throw InputError("letter map target outside alphabet");
  FreeTensor out(target_dimension, ell.order());
  for (int k = 0; k <= ell.order(); ++k) {
    const auto src = ell.level(k);
    auto dst = out.level(k);
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] == 0.0) continue;
      std::size_t idx = i;
      std::size_t mapped = 0;
      std::size_t weight = 1;
      for (int p = 0; p < k; ++p) {
        const int letter = map[idx % static_cast<std::size_t>(d)];
        idx /= static_cast<std::size_t>(d);
        mapped += static_cast<std::size_t>(letter - 1) * weight;
        weight *= static_cast<std::size_t>(target_dimension);
      }
      dst[mapped] += src[i];
    }
  }
  return out;
}

// Strategy functionals over (time, price) act on the lag copy {1, 2} of the
// four-letter lead-lag alphabet.
inline FreeTensor embed_lag(const FreeTensor& ell) {
  if (ell.dimension() != 2) throw InputError("embed_lag expects a functional over 2 letters");
  static constexpr int kMap[] = {1, 2};
  return embed_letters(ell, 4, kMap);
}

// Truncated tensor product.
inline FreeTensor tensor_product(const FreeTensor& a, const FreeTensor& b, int order) {
  detail::require_same_dimension(a, b, "tensor_product");
  const int d = a.dimension();
  FreeTensor out(d, order);
  for (int n = 0; n <= order; ++n) {
    auto dst = out.level(n);
    for (int i = 0; i <= std::min(n, a.order()); ++i) {
      const int j = n - i;
      if (j > b.order()) continue;
      const auto la = a.level(i);
      const auto lb = b.level(j);
      for (std::size_t u = 0; u < la.size(); ++u) {
        const double cu = la[u];
        if (cu == 0.0) continue;
        double* row = dst.data() + u * lb.size();
        for (std::size_t v = 0; v < lb.size(); ++v) row[v] += cu * lb[v];
      }
    }
  }
  return out;
}

}  // namespace sighedge
