#pragma once

// Brute-force reference computations for the tests. Nothing here calls into
// the grover_ev implementation: operators are built as explicit N x N
// matrices and expectation values are obtained by enumerating sets.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace oracles {

using Complex = std::complex<double>;
using Vector = std::vector<Complex>;
using Matrix = std::vector<std::vector<Complex>>;

inline Matrix identity(std::size_t n) {
  Matrix m(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
  return m;
}

/// D = (2/N) J - I.
inline Matrix diffusion_matrix(std::size_t n) {
  Matrix m(n, std::vector<Complex>(n, Complex{2.0 / static_cast<double>(n)}));
  for (std::size_t i = 0; i < n; ++i) m[i][i] -= 1.0;
  return m;
}

/// diag((-1)^{f(x)}).
inline Matrix oracle_matrix(std::size_t n, const std::vector<std::uint64_t>& marked) {
  Matrix m = identity(n);
  for (auto x : marked) m[x][x] = -1.0;
  return m;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<Complex>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Vector matrix_apply(const Matrix& m, const Vector& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

inline Vector uniform(std::size_t n) { return Vector(n, Complex{1.0 / std::sqrt(static_cast<double>(n))}); }

/// (D U_f)^m applied to the uniform vector by dense matrix products.
inline Vector grover_by_matrix(std::size_t n, const std::vector<std::uint64_t>& marked, std::size_t m) {
  const Matrix g = multiply(diffusion_matrix(n), oracle_matrix(n, marked));
  Vector v = uniform(n);
  for (std::size_t i = 0; i < m; ++i) v = matrix_apply(g, v);
  return v;
}

inline unsigned bit(std::uint64_t x, std::size_t k) { return static_cast<unsigned>((x >> (k - 1)) & 1U); }

/// <sigma_z(k)> from a probability vector.
inline double ev_from_probabilities(const std::vector<double>& p, std::size_t k) {
  double ev = 0.0;
  for (std::uint64_t x = 0; x < p.size(); ++x) ev += bit(x, k) ? -p[x] : p[x];
  return ev;
}

inline double ev_of_vector(const Vector& v, std::size_t k) {
  std::vector<double> p(v.size());
  for (std::size_t x = 0; x < v.size(); ++x) p[x] = std::norm(v[x]);
  return ev_from_probabilities(p, k);
}

/// (1/M) sum over S' of (-1)^{x_target}, where S' keeps the members of S
/// whose qubits 1..prefix.size() equal prefix.
inline double filtered_ev_by_enumeration(const std::vector<std::uint64_t>& marked,
                                         const std::vector<unsigned>& prefix, std::size_t target) {
  double sum = 0.0;
  for (auto x : marked) {
    bool keep = true;
    for (std::size_t i = 0; i < prefix.size(); ++i) keep = keep && bit(x, i + 1) == prefix[i];
    if (keep) sum += bit(x, target) ? -1.0 : 1.0;
  }
  return sum / static_cast<double>(marked.size());
}

/// P[X <= k] for X ~ Binomial(n, p), summed in log space.
inline double binomial_cdf(std::uint64_t k, std::uint64_t n, double p) {
  double total = 0.0;
  for (std::uint64_t i = 0; i <= k && i <= n; ++i) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1) - std::lgamma(static_cast<double>(i) + 1) -
                            std::lgamma(static_cast<double>(n - i) + 1) + static_cast<double>(i) * std::log(p) +
                            static_cast<double>(n - i) * std::log1p(-p);
    total += std::exp(log_term);
  }
  return total;
}

/// Probability that an n-shot empirical EV of a qubit with true EV `ev` > 0
/// fails to exceed `threshold`: P[(n - 2 ones)/n <= threshold].
inline double sign_miss_probability(double ev, std::uint64_t n, double threshold) {
  const double p_one = (1.0 - ev) / 2.0;
  // ones >= n (1 - threshold) / 2 makes the empirical EV <= threshold.
  const double cutoff = std::ceil(static_cast<double>(n) * (1.0 - threshold) / 2.0);
  if (cutoff <= 0) return 1.0;
  return std::max(0.0, 1.0 - binomial_cdf(static_cast<std::uint64_t>(cutoff) - 1, n, p_one));
}

}  // namespace oracles
