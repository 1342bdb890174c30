#pragma once

// Sparse multivariate polynomials with analytic derivatives.

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <map>
#include <vector>

#include "sighedge/errors.hpp"

namespace sighedge {

class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }

  // Adds coef * prod(x[v] for v in vars); repeated indices are powers.
  void add(std::vector<int> vars, double coef) {
    for (int v : vars)
      if (v < 0 || v >= nvars_) throw InputError("polynomial variable index out of range");
    std::sort(vars.begin(), vars.end());
    terms_[std::move(vars)] += coef;
  }

  double coefficient(std::vector<int> vars) const {
    std::sort(vars.begin(), vars.end());
    const auto it = terms_.find(vars);
    return it == terms_.end() ? 0.0 : it->second;
  }

  int degree() const {
    int d = -1;
    for (const auto& [m, c] : terms_)
      if (c != 0.0) d = std::max(d, static_cast<int>(m.size()));
    return d;
  }

  const std::map<std::vector<int>, double>& terms() const { return terms_; }

  double value(const Eigen::VectorXd& x) const {
    check(x);
    double acc = 0.0;
    for (const auto& [m, c] : terms_) {
      double t = c;
      for (int v : m) t *= x(v);
      acc += t;
    }
    return acc;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    check(x);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(nvars_);
    for (const auto& [m, c] : terms_) {
      for (std::size_t p = 0; p < m.size(); ++p) {
        double t = c;
        for (std::size_t q = 0; q < m.size(); ++q)
          if (q != p) t *= x(m[q]);
        g(m[p]) += t;
      }
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const {
    check(x);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nvars_, nvars_);
    for (const auto& [m, c] : terms_) {
      for (std::size_t p = 0; p < m.size(); ++p)
        for (std::size_t q = 0; q < m.size(); ++q) {
          if (p == q) continue;
          double t = c;
          for (std::size_t r = 0; r < m.size(); ++r)
            if (r != p && r != q) t *= x(m[r]);
          H(m[p], m[q]) += t;
        }
    }
    return H;
  }

  // f(x) = c + g·x + ½ x·H·x; requires degree <= 2.
  struct Quadratic {
    double c = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
  };

  Quadratic quadratic() const {
    if (degree() > 2) throw InputError("polynomial is not quadratic");
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(nvars_);
    Quadratic q;
    q.c = value(zero);
    q.g = gradient(zero);
    q.H = hessian(zero);
    return q;
  }

 private:
  void check(const Eigen::VectorXd& x) const {
    if (x.size() != nvars_) throw InputError("polynomial evaluated at a point of the wrong size");
  }

  int nvars_ = 0;
  std::map<std::vector<int>, double> terms_;
};

}  // namespace sighedge
