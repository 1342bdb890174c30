#pragma once

// Truncated signatures of piecewise-linear paths.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sighedge/errors.hpp"
#include "sighedge/tensor.hpp"

namespace sighedge {

class DiscretePath {
 public:
  DiscretePath() = default;

  // `values` is row-major: sample k occupies values[k*dim .. k*dim+dim).
  DiscretePath(std::vector<double> times, std::vector<double> values, int dim)
      : times_(std::move(times)), values_(std::move(values)), dim_(dim) {
    if (dim_ < 1) throw InputError("path dimension must be >= 1");
    if (times_.size() < 2) throw InputError("path needs at least 2 samples");
    if (values_.size() != times_.size() * static_cast<std::size_t>(dim_))
      throw InputError("path values do not match times x dimension");
    for (std::size_t k = 0; k < times_.size(); ++k) {
      if (!std::isfinite(times_[k])) throw InputError("non-finite path time");
      if (k > 0 && !(times_[k] > times_[k - 1])) throw InputError("path times must be strictly increasing");
    }
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("non-finite path value");
  }

  static DiscretePath scalar(std::vector<double> times, std::vector<double> values) {
    return DiscretePath(std::move(times), std::move(values), 1);
  }

  std::size_t size() const noexcept { return times_.size(); }
  int dim() const noexcept { return dim_; }
  double time(std::size_t k) const { return times_[k]; }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> point(std::size_t k) const {
    return {values_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  double value(std::size_t k, int coord = 0) const {
    return values_[k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(coord)];
  }

  // Same values, times reversed in order so the path runs backwards.
  DiscretePath reversed() const {
    std::vector<double> vals(values_.size());
    const std::size_t n = size();
    const auto d = static_cast<std::size_t>(dim_);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t c = 0; c < d; ++c) vals[k * d + c] = values_[(n - 1 - k) * d + c];
    return DiscretePath(times_, std::move(vals), dim_);
  }

 private:
  std::vector<double> times_;
  std::vector<double> values_;
  int dim_ = 1;
};

struct TruncatedSignature {
  FreeTensor tensor;
  double start = 0.0;
  double end = 0.0;
};

namespace detail {

// Scratch buffers for in-place multiplication by a segment exponential.
class HornerWorkspace {
 public:
  void reserve(int dimension, int order) {
    const std::size_t n = level_size(dimension, order);
    if (a_.size() < n) {
      a_.resize(n);
      b_.resize(n);
    }
  }
  double* a() { return a_.data(); }
  double* b() { return b_.data(); }

 private:
  std::vector<double> a_, b_;
};

// dst[u*D + c] = (src[u] + acc[u]) * h[c] * s over u < n.
template <int D>
inline void horner_step_fixed(const double* src, const double* acc, double* dst, std::size_t n, const double* h,
                              double s) {
  double hs[D];
  for (int c = 0; c < D; ++c) hs[c] = h[c] * s;
  for (std::size_t u = 0; u < n; ++u) {
    const double v = src[u] + (acc ? acc[u] : 0.0);
    double* row = dst + u * D;
    for (int c = 0; c < D; ++c) row[c] = v * hs[c];
  }
}

inline void horner_step(int d, const double* src, const double* acc, double* dst, std::size_t n, const double* h,
                        double s) {
  switch (d) {
    case 1: return horner_step_fixed<1>(src, acc, dst, n, h, s);
    case 2: return horner_step_fixed<2>(src, acc, dst, n, h, s);
    case 3: return horner_step_fixed<3>(src, acc, dst, n, h, s);
    case 4: return horner_step_fixed<4>(src, acc, dst, n, h, s);
    default: break;
  }
  for (std::size_t u = 0; u < n; ++u) {
    const double v = src[u] + (acc ? acc[u] : 0.0);
    double* row = dst + u * static_cast<std::size_t>(d);
    for (int c = 0; c < d; ++c) row[c] = v * h[c] * s;
  }
}

// S <- S ⊗ exp(c·e_a). Same Horner recursion as the general case, but the
// running term t_j = tc ⊗ e_a is stored through its prefix tc only.
inline void mul_exp_single_letter(std::span<double> coeffs, int d, int order, int a, double c,
                                  HornerWorkspace& ws) {
  ws.reserve(d, order);
  const auto D = static_cast<std::size_t>(d);
  const auto A = static_cast<std::size_t>(a);
  for (int k = order; k >= 1; --k) {
    double* tc = ws.a();
    double* nx = ws.b();
    tc[0] = coeffs[0] * c / k;
    std::size_t width = 1;
    for (int j = 1; j < k; ++j) {
      const double s = c / (k - j);
      const double* sj = coeffs.data() + level_offset(d, j);
      const std::size_t wj = width * D;
      for (std::size_t w = 0; w < wj; ++w) nx[w] = sj[w] * s;
      for (std::size_t u = 0; u < width; ++u) nx[u * D + A] += tc[u] * s;
      std::swap(tc, nx);
      width = wj;
    }
    double* sk = coeffs.data() + level_offset(d, k);
    for (std::size_t u = 0; u < width; ++u) sk[u * D + A] += tc[u];
  }
}

// S <- S ⊗ exp(h), processing levels top-down so lower levels are still the
// old values when read.
inline void mul_exp_inplace(FreeTensor& S, std::span<const double> h, HornerWorkspace& ws) {
  const int d = S.dimension();
  const int N = S.order();
  if (h.size() != static_cast<std::size_t>(d)) throw InputError("increment size does not match the tensor dimension");
  int nnz = 0;
  int last = -1;
  for (int c = 0; c < d; ++c)
    if (h[static_cast<std::size_t>(c)] != 0.0) {
      ++nnz;
      last = c;
    }
  if (nnz == 0 || N == 0) return;
  auto coeffs = S.coefficients();
  if (nnz == 1) {
    mul_exp_single_letter(coeffs, d, N, last, h[static_cast<std::size_t>(last)], ws);
    return;
  }
  ws.reserve(d, N);
  const double s0 = coeffs[0];
  for (int k = N; k >= 1; --k) {
    // t = S_0 h / k, then t = (S_j + t) h / (k-j) for j = 1..k-1, S_k += t.
    double* t = ws.a();
    double* next = ws.b();
    for (int c = 0; c < d; ++c) t[c] = s0 * h[static_cast<std::size_t>(c)] / k;
    for (int j = 1; j < k; ++j) {
      const double* sj = coeffs.data() + level_offset(d, j);
      horner_step(d, sj, t, next, level_size(d, j), h.data(), 1.0 / (k - j));
      std::swap(t, next);
    }
    double* sk = coeffs.data() + level_offset(d, k);
    const std::size_t n = level_size(d, k);
    for (std::size_t i = 0; i < n; ++i) sk[i] += t[i];
  }
}

}  // namespace detail

inline TruncatedSignature segment_signature(std::span<const double> increment, int order, double start = 0.0,
                                            double end = 1.0) {
  const int d = static_cast<int>(increment.size());
  FreeTensor S = FreeTensor::unit(d, order);
  detail::HornerWorkspace ws;
  detail::mul_exp_inplace(S, increment, ws);
  return {std::move(S), start, end};
}

inline TruncatedSignature chen_concat(const TruncatedSignature& s1, const TruncatedSignature& s2) {
  if (s1.tensor.dimension() != s2.tensor.dimension() || s1.tensor.order() != s2.tensor.order())
    throw InputError("chen_concat: signatures differ in dimension or order");
  const double tol = 1e-12 * std::max({1.0, std::abs(s1.end), std::abs(s2.start)});
  if (std::abs(s1.end - s2.start) > tol)
    throw InputError("chen_concat: intervals do not meet (" + std::to_string(s1.end) + " vs " +
                     std::to_string(s2.start) + ")");
  return {tensor_product(s1.tensor, s2.tensor, s1.tensor.order()), s1.start, s2.end};
}

// Folds every segment of `path` into S in place.
inline void accumulate_path(FreeTensor& S, const DiscretePath& path, detail::HornerWorkspace& ws) {
  const auto d = static_cast<std::size_t>(path.dim());
  std::vector<double> inc(d);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto a = path.point(k - 1);
    const auto b = path.point(k);
    for (std::size_t c = 0; c < d; ++c) inc[c] = b[c] - a[c];
    detail::mul_exp_inplace(S, inc, ws);
  }
}

inline TruncatedSignature path_signature(const DiscretePath& path, int order) {
  if (path.size() < 2) throw InputError("path needs at least 2 samples");
  FreeTensor S = FreeTensor::unit(path.dim(), order);
  detail::HornerWorkspace ws;
  accumulate_path(S, path, ws);
  return {std::move(S), path.time(0), path.time(path.size() - 1)};
}

// S_{0,t_k} for every sample index k; element 0 is the identity.
inline std::vector<TruncatedSignature> prefix_signatures(const DiscretePath& path, int order) {
  std::vector<TruncatedSignature> out;
  out.reserve(path.size());
  FreeTensor S = FreeTensor::unit(path.dim(), order);
  detail::HornerWorkspace ws;
  const auto d = static_cast<std::size_t>(path.dim());
  std::vector<double> inc(d);
  out.push_back({S, path.time(0), path.time(0)});
  for (std::size_t k = 1; k < path.size(); ++k) {
    const auto a = path.point(k - 1);
    const auto b = path.point(k);
    for (std::size_t c = 0; c < d; ++c) inc[c] = b[c] - a[c];
    detail::mul_exp_inplace(S, inc, ws);
    out.push_back({S, path.time(0), path.time(k)});
  }
  return out;
}

}  // namespace sighedge
