#pragma once

// The linear voting operator A and its structural predicates.
//
// Three realizations share one evaluation order, so that accumulating votes
// label by label (accumulate_votes) reproduces apply(op, mask_of(psi, m))
// bit for bit:
//   circular  (f * g)(n)                        on a torus
//   star      (f * g)(n) / (chi * g)(n)         zero-padded, boundary-normalized
//   dense     sum_j a(n, j) f(j)                arbitrary N x N matrix

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "activemask/domain.hpp"
#include "activemask/error.hpp"
#include "activemask/spectral.hpp"

namespace activemask {

/// Largest domain for which a dense N x N matrix is built (128 MiB of doubles).
inline constexpr std::size_t kMaxDenseSize = 4096;
/// Largest N for which PSD is decided by a symmetric eigensolve.
inline constexpr std::size_t kMaxEigenSize = 1024;

enum class OperatorKind { CircularConv, NoncircularStar, DenseMatrix };

inline const char* to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::CircularConv: return "circular";
    case OperatorKind::NoncircularStar: return "star";
    case OperatorKind::DenseMatrix: return "dense";
  }
  return "?";
}

namespace detail {

// Tap offsets resolved to pixel-index contributions, per axis.
// contrib[d][t * N_d + c] is the stride-scaled index of (c - offset_t) along
// axis d, or -1 when that falls outside a zero-padded domain.
struct Stencil {
  std::vector<double> weights;
  std::vector<std::vector<long>> contrib;

  std::size_t taps() const noexcept { return weights.size(); }
};

inline Stencil make_stencil(const DomainSpec& dom, const std::vector<std::vector<long>>& offsets,
                            std::vector<double> weights) {
  Stencil s;
  s.weights = std::move(weights);
  s.contrib.resize(dom.rank());
  for (std::size_t d = 0; d < dom.rank(); ++d) {
    const long len = static_cast<long>(dom.dim(d));
    const long stride = static_cast<long>(dom.strides()[d]);
    auto& table = s.contrib[d];
    table.resize(s.taps() * static_cast<std::size_t>(len));
    for (std::size_t t = 0; t < s.taps(); ++t) {
      for (long c = 0; c < len; ++c) {
        long j = c - offsets[t][d];
        if (dom.is_circular())
          j = ((j % len) + len) % len;
        else if (j < 0 || j >= len)
          j = -1;
        table[t * static_cast<std::size_t>(len) + static_cast<std::size_t>(c)] = j < 0 ? -1 : j * stride;
      }
    }
  }
  return s;
}

// Calls fn(weight, j) for every tap landing on pixel j, in tap order.
template <class Fn>
inline void for_each_tap(const Stencil& s, const DomainSpec& dom, std::span<const std::size_t> coords, Fn&& fn) {
  const std::size_t rank = dom.rank();
  for (std::size_t t = 0; t < s.taps(); ++t) {
    long j = 0;
    bool inside = true;
    for (std::size_t d = 0; d < rank; ++d) {
      const long c = s.contrib[d][t * dom.dim(d) + coords[d]];
      if (c < 0) {
        inside = false;
        break;
      }
      j += c;
    }
    if (inside) fn(s.weights[t], static_cast<std::size_t>(j));
  }
}

// Row-major coordinate odometer.
inline void advance(std::vector<std::size_t>& coords, const DomainSpec& dom) {
  for (std::size_t d = dom.rank(); d-- > 0;) {
    if (++coords[d] < dom.dim(d)) return;
    coords[d] = 0;
  }
}

}  // namespace detail

struct CircularConv {
  Filter filter;
};

struct NoncircularStar {
  Kernel kernel;
};

struct DenseMatrix {
  std::vector<double> entries;  // row-major N x N
};

class VotingOperator {
 public:
  static VotingOperator circular(Filter g) {
    detail::require_circular(g.domain(), "circular convolution operator");
    VotingOperator op;
    op.domain_ = g.domain();
    std::vector<std::vector<long>> offsets;
    std::vector<double> weights;
    for (std::size_t k = 0; k < g.taps.size(); ++k) {
      if (g[k] == 0.0) continue;
      const auto c = op.domain_.coords(k);
      offsets.emplace_back(c.begin(), c.end());
      weights.push_back(g[k]);
    }
    op.stencil_ = detail::make_stencil(op.domain_, offsets, std::move(weights));
    op.impl_ = CircularConv{std::move(g)};
    return op;
  }

  /// Normalized noncircular convolution. Rejects kernels outside the class
  /// where (chi_Omega * g)(n) > 0 on every pixel.
  static VotingOperator star(const DomainSpec& domain, Kernel kernel) {
    if (domain.is_circular()) throw Unsupported("star operator requires a zero-padded domain");
    if (kernel.rank() != domain.rank()) throw DomainMismatch("kernel rank does not match domain rank");
    VotingOperator op;
    op.domain_ = domain;
    std::vector<std::vector<long>> offsets;
    std::vector<double> weights;
    for (std::size_t i = 0; i < kernel.box_size(); ++i) {
      if (kernel.weights[i] == 0.0) continue;
      offsets.push_back(kernel.offset(i));
      weights.push_back(kernel.weights[i]);
    }
    op.stencil_ = detail::make_stencil(domain, offsets, std::move(weights));
    op.denominator_ = RealField::zeros(domain);
    std::vector<std::size_t> c(domain.rank(), 0);
    for (std::size_t n = 0; n < domain.size(); ++n, detail::advance(c, domain)) {
      double acc = 0.0;
      detail::for_each_tap(op.stencil_, domain, c, [&](double w, std::size_t) { acc += w; });
      if (!(acc > 0.0))
        throw InvalidArgument("kernel is not admissible: (chi * g)(" + std::to_string(n) + ") = " + std::to_string(acc) +
                              " is not positive");
      op.denominator_[n] = acc;
    }
    op.impl_ = NoncircularStar{std::move(kernel)};
    return op;
  }

  static VotingOperator dense(const DomainSpec& domain, std::vector<double> entries) {
    if (domain.size() > kMaxDenseSize)
      throw InvalidArgument("dense operator limited to " + std::to_string(kMaxDenseSize) + " pixels");
    if (entries.size() != domain.size() * domain.size())
      throw InvalidArgument("dense operator needs N*N entries");
    VotingOperator op;
    op.domain_ = domain;
    op.impl_ = DenseMatrix{std::move(entries)};
    return op;
  }

  OperatorKind kind() const noexcept { return static_cast<OperatorKind>(impl_.index()); }
  const DomainSpec& domain() const noexcept { return domain_; }

  const Filter* filter() const {
    const auto* p = std::get_if<CircularConv>(&impl_);
    return p ? &p->filter : nullptr;
  }
  const Kernel* kernel() const {
    const auto* p = std::get_if<NoncircularStar>(&impl_);
    return p ? &p->kernel : nullptr;
  }
  const std::vector<double>* matrix() const {
    const auto* p = std::get_if<DenseMatrix>(&impl_);
    return p ? &p->entries : nullptr;
  }
  /// (chi_Omega * g) for the star operator; empty otherwise.
  const RealField& denominator() const noexcept { return denominator_; }

  /// Calls fn(weight, j) for every nonzero contribution a(n, j), in the
  /// fixed summation order used by apply. Star weights are unnormalized.
  template <class Fn>
  void for_each_weight(std::size_t n, std::span<const std::size_t> coords, Fn&& fn) const {
    if (const auto* m = matrix()) {
      const std::size_t N = domain_.size();
      const double* row = m->data() + n * N;
      for (std::size_t j = 0; j < N; ++j) fn(row[j], j);
    } else {
      detail::for_each_tap(stencil_, domain_, coords, fn);
    }
  }

  bool normalizes() const noexcept { return kind() == OperatorKind::NoncircularStar; }

 private:
  VotingOperator() = default;

  DomainSpec domain_;
  std::variant<CircularConv, NoncircularStar, DenseMatrix> impl_;
  detail::Stencil stencil_;
  RealField denominator_;
};

inline RealField apply(const VotingOperator& op, const RealField& f) {
  if (!(f.domain == op.domain())) throw DomainMismatch("field domain does not match operator domain");
  const DomainSpec& dom = op.domain();
  RealField out = RealField::zeros(dom);
  std::vector<std::size_t> c(dom.rank(), 0);
  for (std::size_t n = 0; n < dom.size(); ++n, detail::advance(c, dom)) {
    double acc = 0.0;
    op.for_each_weight(n, c, [&](double w, std::size_t j) { acc += w * f[j]; });
    out[n] = op.normalizes() ? acc / op.denominator()[n] : acc;
  }
  return out;
}

/// votes[m] = (A mu_m)(n) for m = 1..M at pixel n; votes[0] is unused.
/// Equal, bit for bit, to apply(op, mask_of(psi, m))[n].
inline void accumulate_votes(const VotingOperator& op, const LabelField& psi, std::size_t n,
                             std::span<const std::size_t> coords, std::span<double> votes) {
  std::fill(votes.begin(), votes.end(), 0.0);
  const auto& labels = psi.labels();
  op.for_each_weight(n, coords, [&](double w, std::size_t j) { votes[labels[j]] += w; });
  if (op.normalizes()) {
    const double denom = op.denominator()[n];
    for (double& v : votes) v /= denom;
  }
}

inline double quadratic_form(const VotingOperator& op, const RealField& f) { return inner(apply(op, f), f); }

/// Dense realization in the fixed pixel order.
inline std::vector<double> to_dense(const VotingOperator& op) {
  const DomainSpec& dom = op.domain();
  const std::size_t N = dom.size();
  if (N > kMaxDenseSize) throw InvalidArgument("dense realization limited to " + std::to_string(kMaxDenseSize) + " pixels");
  if (const auto* m = op.matrix()) return *m;
  std::vector<double> a(N * N, 0.0);
  std::vector<std::size_t> c(dom.rank(), 0);
  for (std::size_t n = 0; n < N; ++n, detail::advance(c, dom)) {
    const double scale = op.normalizes() ? op.denominator()[n] : 1.0;
    op.for_each_weight(n, c, [&](double w, std::size_t j) { a[n * N + j] += w / scale; });
  }
  return a;
}

/// Plain zero-padded convolution f * g restricted to the domain (no normalization).
inline RealField zero_padded_convolve(const DomainSpec& domain, const Kernel& kernel, const RealField& f) {
  if (domain.is_circular()) throw Unsupported("zero-padded convolution requires a zero-padded domain");
  if (!(f.domain == domain)) throw DomainMismatch("field domain does not match");
  std::vector<std::vector<long>> offsets;
  std::vector<double> weights;
  for (std::size_t i = 0; i < kernel.box_size(); ++i) {
    if (kernel.weights[i] == 0.0) continue;
    offsets.push_back(kernel.offset(i));
    weights.push_back(kernel.weights[i]);
  }
  const auto stencil = detail::make_stencil(domain, offsets, std::move(weights));
  RealField out = RealField::zeros(domain);
  std::vector<std::size_t> c(domain.rank(), 0);
  for (std::size_t n = 0; n < domain.size(); ++n, detail::advance(c, domain)) {
    double acc = 0.0;
    detail::for_each_tap(stencil, domain, c, [&](double w, std::size_t j) { acc += w * f[j]; });
    out[n] = acc;
  }
  return out;
}

inline bool is_symmetric(const std::vector<double>& a, std::size_t N, double tol) {
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if (std::abs(a[i * N + j] - a[j * N + i]) > tol) return false;
  return true;
}

/// Answers literally for the operator A itself (a star operator is usually
/// not self-adjoint even when g is even; see quasi_factorize).
inline bool is_self_adjoint(const VotingOperator& op, double tol = kDefaultTol) {
  const DomainSpec& dom = op.domain();
  if (const Filter* g = op.filter()) {
    for (std::size_t i = 0; i < dom.size(); ++i)
      if (std::abs((*g)[i] - (*g)[dom.negated(i)]) > tol) return false;
    return true;
  }
  if (const auto* m = op.matrix()) return is_symmetric(*m, dom.size(), tol);
  // Star: a(n, j) = g(n - j) / den(n). Compare against a(j, n) over the support.
  const Kernel& k = *op.kernel();
  const RealField& den = op.denominator();
  std::vector<std::size_t> c(dom.rank(), 0);
  for (std::size_t n = 0; n < dom.size(); ++n, detail::advance(c, dom)) {
    for (std::size_t i = 0; i < k.box_size(); ++i) {
      const auto off = k.offset(i);
      long j = 0;
      bool inside = true;
      for (std::size_t d = 0; d < dom.rank(); ++d) {
        const long cj = static_cast<long>(c[d]) - off[d];
        if (cj < 0 || cj >= static_cast<long>(dom.dim(d))) {
          inside = false;
          break;
        }
        j += cj * static_cast<long>(dom.strides()[d]);
      }
      if (!inside) continue;
      const double a_nj = k.weights[i] / den[n];
      const double a_jn = k.weights[k.mirrored(i)] / den[static_cast<std::size_t>(j)];
      if (std::abs(a_nj - a_jn) > tol) return false;
    }
  }
  return true;
}

struct PsdResult {
  bool psd = false;
  double bound = 0.0;  // min eigenvalue, Gershgorin lower bound or min of Fourier series
  std::string method;  // "gershgorin", "eigen", "fourier-series", "undetermined"
};

/// Gershgorin lower bound on the spectrum of a symmetric matrix.
inline double gershgorin_lower_bound(const std::vector<double>& a, std::size_t N) {
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < N; ++j)
      if (j != i) off += std::abs(a[i * N + j]);
    lo = std::min(lo, a[i * N + i] - off);
  }
  return N == 0 ? 0.0 : lo;
}

inline double min_eigenvalue(const std::vector<double>& a, std::size_t N) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.5 * (a[i * N + j] + a[j * N + i]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// PSD test for a symmetric matrix: Gershgorin first, eigenvalues for N up
/// to kMaxEigenSize.
inline PsdResult psd_check(const std::vector<double>& a, std::size_t N, double tol = kDefaultTol) {
  const double g = gershgorin_lower_bound(a, N);
  if (g >= 0.0) return {true, g, "gershgorin"};
  if (N <= kMaxEigenSize) {
    const double e = min_eigenvalue(a, N);
    return {e >= -tol, e, "eigen"};
  }
  return {false, g, "undetermined"};
}

struct QuasiFactorization {
  std::vector<double> lambda;  // positive per-pixel scaling D
  bool b_matrix_is_self_adjoint = false;
  bool b_matrix_is_psd = false;
  double min_eigen_or_min_spectrum = 0.0;
  std::string psd_method;
};

namespace detail {

// Finds lambda > 0 with a(i, j) / lambda_i symmetric, by propagating the
// ratios lambda_j / lambda_i = a(j, i) / a(i, j) over each connected component.
inline std::optional<std::vector<double>> symmetrizing_scaling(const std::vector<double>& a, std::size_t N, double tol) {
  std::vector<double> lambda(N, 0.0);
  for (std::size_t root = 0; root < N; ++root) {
    if (lambda[root] != 0.0) continue;
    lambda[root] = 1.0;
    std::queue<std::size_t> q;
    q.push(root);
    while (!q.empty()) {
      const std::size_t i = q.front();
      q.pop();
      for (std::size_t j = 0; j < N; ++j) {
        if (j == i) continue;
        const double aij = a[i * N + j], aji = a[j * N + i];
        const bool zi = std::abs(aij) <= tol, zj = std::abs(aji) <= tol;
        if (zi && zj) continue;
        if (zi != zj) return std::nullopt;
        const double ratio = aji / aij;
        if (!(ratio > 0.0)) return std::nullopt;
        const double want = lambda[i] * ratio;
        if (lambda[j] == 0.0) {
          lambda[j] = want;
          q.push(j);
        } else if (std::abs(lambda[j] - want) > tol * std::max(1.0, std::abs(want))) {
          return std::nullopt;
        }
      }
    }
  }
  return lambda;
}

}  // namespace detail

/// Writes A = D B with D positive-multiplicative and reports whether B is
/// self-adjoint and PSD. Returns nullopt when no such split exists.
inline std::optional<QuasiFactorization> quasi_factorize(const VotingOperator& op, double tol = kDefaultTol) {
  const DomainSpec& dom = op.domain();
  const std::size_t N = dom.size();
  QuasiFactorization q;

  if (const Filter* g = op.filter()) {
    q.lambda.assign(N, 1.0);
    const SpectrumReport r = analyze_filter(*g, tol);
    q.b_matrix_is_self_adjoint = is_self_adjoint(op, tol);
    q.b_matrix_is_psd = q.b_matrix_is_self_adjoint && r.is_nonnegative;
    q.min_eigen_or_min_spectrum = r.min_spectrum;
    q.psd_method = "spectrum";
    return q;
  }

  if (const Kernel* k = op.kernel()) {
    q.lambda.resize(N);
    for (std::size_t n = 0; n < N; ++n) q.lambda[n] = 1.0 / op.denominator()[n];
    q.b_matrix_is_self_adjoint = k->is_even();
    if (!q.b_matrix_is_self_adjoint) {
      q.psd_method = "not-self-adjoint";
      return q;
    }
    if (N <= kMaxEigenSize) {
      // B f = f * g on the zero-padded domain.
      std::vector<double> b(N * N, 0.0);
      for (std::size_t j = 0; j < N; ++j) {
        const RealField col = zero_padded_convolve(dom, *k, RealField::delta(dom, j));
        for (std::size_t n = 0; n < N; ++n) b[n * N + j] = col[n];
      }
      const PsdResult p = psd_check(b, N, tol);
      q.b_matrix_is_psd = p.psd;
      q.min_eigen_or_min_spectrum = p.bound;
      q.psd_method = p.method;
    } else {
      // Every finite section of B is bounded below by the Fourier series of g.
      double total = 0.0;
      for (double w : k->weights) total += std::abs(w);
      const double m = fourier_series_min(*k);
      q.b_matrix_is_psd = m >= -tol * total;
      q.min_eigen_or_min_spectrum = m;
      q.psd_method = "fourier-series";
    }
    return q;
  }

  const std::vector<double>& a = *op.matrix();
  const auto lambda = detail::symmetrizing_scaling(a, N, tol);
  if (!lambda) return std::nullopt;
  std::vector<double> b(N * N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) b[i * N + j] = a[i * N + j] / (*lambda)[i];
  q.lambda = *lambda;
  q.b_matrix_is_self_adjoint = is_symmetric(b, N, tol);
  if (!q.b_matrix_is_self_adjoint) return std::nullopt;
  if (N <= kMaxEigenSize) {
    const PsdResult p = psd_check(b, N, tol);
    q.b_matrix_is_psd = p.psd;
    q.min_eigen_or_min_spectrum = p.bound;
    q.psd_method = p.method;
  } else {
    q.psd_method = "undetermined";
  }
  return q;
}

}  // namespace activemask
