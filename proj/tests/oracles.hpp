#pragma once

// Independent reference implementations shared by the unit tests and the
// acceptance suite. Plain loops only; nothing here calls library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semgest/nd/rng.hpp"

namespace semgest::oracles {

using Dense = std::vector<std::vector<double>>;

inline Dense multiply(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Dense transpose(const Dense& a) {
  Dense t = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) t[i][j] = a[j][i];
  return t;
}

inline Dense cholesky(const Dense& a) {
  const std::size_t n = a.size();
  Dense l(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      l[i][j] = i == j ? std::sqrt(s) : s / l[j][j];
    }
  }
  return l;
}

// Cyclic Jacobi rotations; returns the eigenvalues of a symmetric matrix.
inline std::vector<double> jacobi_eigenvalues(Dense a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i][i];
  return out;
}

// Fréchet distance with tr((S_a S_b)^1/2) taken from the eigenvalues of
// L^T S_b L, where S_a = L L^T.
inline double frechet_oracle(const Dense& cov_a, const Dense& cov_b, const std::vector<double>& ma,
                             const std::vector<double>& mb) {
  const std::size_t n = ma.size();
  const Dense l = cholesky(cov_a);
  double result = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result += (ma[i] - mb[i]) * (ma[i] - mb[i]) + cov_a[i][i] + cov_b[i][i];
  }
  for (double lambda : jacobi_eigenvalues(multiply(transpose(l), multiply(cov_b, l)))) {
    result -= 2.0 * std::sqrt(std::max(lambda, 0.0));
  }
  return result;
}

inline Dense random_spd(std::size_t n, nd::Rng& rng) {
  Dense g(n, std::vector<double>(n));
  for (auto& r : g)
    for (double& x : r) x = rng.normal();
  Dense s = multiply(g, transpose(g));
  for (std::size_t i = 0; i < n; ++i) s[i][i] += 0.1;
  return s;
}

inline std::vector<double> flatten(const Dense& m) {
  std::vector<double> out;
  for (const auto& r : m) out.insert(out.end(), r.begin(), r.end());
  return out;
}

// Margin contrastive loss as a scalar double loop over the written-out formula.
inline double contrastive_oracle(const std::vector<double>& p, const std::vector<double>& d,
                                 std::size_t b, double m) {
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      const double pij = p[i * b + j], dij = d[i * b + j];
      total += 0.5 * (pij * dij) * (pij * dij);
      if (pij == 0.0) {
        const double h = std::max(0.0, m - dij);
        total += 0.5 * h * h;
      }
    }
  }
  return total / static_cast<double>(b);
}

// Diversity by the triple loop: ordered pairs a < b, L1 over coordinates,
// normalized by N * ceil(N / 2).
inline double diversity_oracle(const std::vector<std::vector<double>>& mu) {
  const std::size_t n = mu.size();
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t k = 0; k < mu[a].size(); ++k) total += std::abs(mu[a][k] - mu[b][k]);
  return total / (static_cast<double>(n) * static_cast<double>((n + 1) / 2));
}

using LabeledPoint = std::pair<std::string, std::vector<double>>;

// Gaussian blobs with unit spread whose centers sit `separation` apart.
inline std::vector<LabeledPoint> blobs(std::size_t count, std::size_t per, std::size_t dim,
                                       double separation, std::uint64_t seed,
                                       std::vector<std::size_t>* labels = nullptr) {
  nd::Rng rng(seed);
  std::vector<LabeledPoint> out;
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < per; ++i) {
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d) x[d] = rng.normal();
      x[b % dim] += separation * static_cast<double>(1 + b / dim);
      out.emplace_back("b" + std::to_string(b) + "_" + std::to_string(i), x);
      if (labels) labels->push_back(b);
    }
  }
  return out;
}

}  // namespace semgest::oracles
