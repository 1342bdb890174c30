#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sighedge/leadlag.hpp"

using namespace sighedge;
using Catch::Approx;

namespace {

AugmentedPath random_augmented(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<double> t(n), x(n);
  double s = 0.0, v = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    t[k] = s;
    x[k] = v;
    s += 0.05 + 0.1 * std::abs(z(rng));
    v += 0.2 * z(rng);
  }
  return augment(DiscretePath::scalar(t, x));
}

// Lead steps first, then lag catches up; both end at the final sample.
std::vector<std::vector<double>> independent_knots(const AugmentedPath& p) {
  std::vector<std::vector<double>> out;
  const std::size_t n = p.size();
  std::size_t lag = 0, lead = 0;
  out.push_back({p.time(0), p.price(0), p.time(0), p.price(0)});
  while (lag + 1 < n) {
    if (lead == lag) ++lead;
    else ++lag;
    out.push_back({p.time(lag), p.price(lag), p.time(lead), p.price(lead)});
  }
  return out;
}

}  // namespace

TEST_CASE("augment") {
  const auto a = augment(DiscretePath::scalar({0.0, 1.0}, {2.0, 4.0}), true);
  CHECK(a.normalized);
  CHECK(a.time(0) == 0.0);
  CHECK(a.price(0) == 1.0);
  CHECK(a.time(1) == 1.0);
  CHECK(a.price(1) == 2.0);
  const auto b = augment(DiscretePath::scalar({0.0, 0.4, 0.9}, {1.0, 1.0, 1.0}));
  CHECK(b.time(1) == 0.4);
  CHECK(b.time(2) == 0.9);
  CHECK(path_signature(b.path, 2).tensor[Word{1}] == Approx(0.9));
  CHECK_THROWS_AS(augment(DiscretePath::scalar({0.0, 1.0}, {0.0, 1.0}), true), InputError);
  CHECK_THROWS_AS(augment(b.path), InputError);
}

TEST_CASE("hoff_transform knot sequence") {
  std::mt19937_64 rng(1);
  const auto p = random_augmented(rng, 3);
  const auto ll = hoff_transform(p);
  REQUIRE(ll.knots.size() == 5);
  CHECK(ll.knots.front() == std::array<double, 4>{p.time(0), p.price(0), p.time(0), p.price(0)});
  CHECK(ll.knots[1] == std::array<double, 4>{p.time(0), p.price(0), p.time(1), p.price(1)});
  CHECK(ll.knots.back() == std::array<double, 4>{p.time(2), p.price(2), p.time(2), p.price(2)});
  // Before the closing step the lead sits on the final sample, the lag one behind.
  CHECK(ll.knots[3][3] == p.price(2));
  CHECK(ll.knots[3][1] == p.price(1));

  for (std::size_t n = 3; n <= 6; ++n) {
    const auto q = random_augmented(rng, n);
    const auto got = hoff_transform(q).knots;
    const auto want = independent_knots(q);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k)
      for (int c = 0; c < 4; ++c) CHECK(got[k][static_cast<std::size_t>(c)] == want[k][static_cast<std::size_t>(c)]);
  }
  CHECK_THROWS_AS(hoff_transform(augment(DiscretePath::scalar({0.0, 1.0}, {1.0, 2.0}))), InputError);
}

TEST_CASE("leadlag_signature matches the signature of the knot path") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = random_augmented(rng, 5 + static_cast<std::size_t>(trial));
    const auto S = leadlag_signature(p, 4).tensor;
    const auto want = oracle::knot_signature(independent_knots(p), 4);
    for (const auto& [w, c] : want) CHECK(oracle::value(S, w) == Approx(c).margin(1e-12));
  }
}

TEST_CASE("leadlag_signature basic coordinates") {
  std::mt19937_64 rng(3);
  const auto p = random_augmented(rng, 10);
  const auto S = leadlag_signature(p, 3).tensor;
  const double dx = p.price(9) - p.price(0);
  CHECK(S[Word{}] == 1.0);
  CHECK(S[Word{2}] == Approx(dx).margin(1e-14));
  CHECK(S[Word{4}] == Approx(dx).margin(1e-14));
  CHECK(S[Word{1}] == Approx(p.time(9)).margin(1e-14));
  CHECK(S[Word{3}] == Approx(p.time(9)).margin(1e-14));
}

TEST_CASE("antisymmetric lead-lag area equals realized quadratic variation") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_augmented(rng, 10);
    const auto S = leadlag_signature(p, 2).tensor;
    double qv = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) qv += std::pow(p.price(k + 1) - p.price(k), 2);
    std::vector<double> x;
    for (std::size_t k = 0; k < p.size(); ++k) x.push_back(p.price(k));
    const auto plain = DiscretePath::scalar(std::vector<double>(p.path.times().begin(), p.path.times().end()), x);
    CHECK(S[Word{4, 2}] - S[Word{2, 4}] == Approx(qv).margin(1e-12));
    CHECK(realized_qv(plain) == Approx(qv).margin(1e-14));
  }
  CHECK(realized_qv(DiscretePath::scalar({0, 1, 2}, {0, 1, 0})) == 2.0);
  CHECK(realized_qv(DiscretePath::scalar({0, 1, 2}, {3, 3, 3})) == 0.0);
}

TEST_CASE("lag projection reproduces the augmented-path signature") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_augmented(rng, 5);
    const auto S = leadlag_signature(p, 4).tensor;
    const auto plain = path_signature(p.path, 4).tensor;
    const auto ell = oracle::random_tensor(rng, 2, 4);
    CHECK(pair(embed_lag(ell), S) == Approx(pair(ell, plain)).margin(1e-12));
  }
}

TEST_CASE("lead-lag pairing of l4 is the left-point sum") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_augmented(rng, 20);
    const auto S = leadlag_signature(p, 4).tensor;
    const auto pre = prefix_signatures(p.path, 3);
    const auto ell = oracle::random_tensor(rng, 2, 3);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) sum += pair(ell, pre[k].tensor) * (p.price(k + 1) - p.price(k));
    const double got = pair(concat_letter(embed_lag(ell), 4), S);
    CHECK(std::abs(got - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
  }
}

TEST_CASE("reduced-alphabet signatures embed back exactly") {
  std::mt19937_64 rng(7);
  const auto p = random_augmented(rng, 12);
  const auto full = leadlag_signature(p, 4).tensor;
  for (LetterSet set : {LetterSet{0b1011}, LetterSet{0b1010}, LetterSet{0b0011}, LetterSet{0b1000}}) {
    const auto sub = leadlag_signature(p, 4, set).tensor;
    CHECK(sub.dimension() == 4);
    for (std::size_t i = 0; i < full.size(); ++i) {
      int level = 0;
      std::size_t rem = i;
      while (rem >= level_size(4, level)) rem -= level_size(4, level++);
      const Word w = word_at(4, level, rem);
      bool inside = true;
      for (int l : w.letters()) inside = inside && (set >> (l - 1) & 1U);
      const double want = inside ? full.coefficients()[i] : 0.0;
      CHECK(sub.coefficients()[i] == Approx(want).margin(1e-13));
    }
  }
  CHECK_THROWS_AS(leadlag_signature_reduced(p.path.times(), std::vector<double>(12, 1.0), 3, 0), InputError);
}
