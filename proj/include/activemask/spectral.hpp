#pragma once

// Voting filters, their discrete Fourier spectra, and Gaussian windows.
//
// A Filter lives on a circular domain (one weight per pixel of the torus).
// A Kernel is a finitely supported weight box centred at the origin of Z^D,
// used for noncircular convolution and as the raw material of filters.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "activemask/domain.hpp"
#include "activemask/error.hpp"

namespace activemask {

inline constexpr double kDefaultTol = 1e-9;

struct ComplexField {
  DomainSpec domain;
  std::vector<std::complex<double>> values;

  std::size_t size() const noexcept { return values.size(); }
  const std::complex<double>& operator[](std::size_t i) const { return values[i]; }
};

namespace detail {

// In-place 1-D transform of every line along every axis. sign=-1 forward.
inline void dft_lines(ComplexField& f, int sign) {
  const DomainSpec& dom = f.domain;
  std::vector<std::complex<double>> line, out;
  for (std::size_t d = 0; d < dom.rank(); ++d) {
    const std::size_t len = dom.dim(d);
    if (len == 1) continue;
    const std::size_t stride = dom.strides()[d];
    std::vector<std::complex<double>> twiddle(len);
    for (std::size_t k = 0; k < len; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      twiddle[k] = {std::cos(angle), sign * std::sin(angle)};
    }
    line.resize(len);
    out.resize(len);
    for (std::size_t start = 0; start < dom.size(); ++start) {
      if ((start / stride) % len != 0) continue;
      for (std::size_t k = 0; k < len; ++k) line[k] = f.values[start + k * stride];
      for (std::size_t n = 0; n < len; ++n) {
        std::complex<double> acc = 0.0;
        for (std::size_t k = 0; k < len; ++k) acc += line[k] * twiddle[(n * k) % len];
        out[n] = acc;
      }
      for (std::size_t n = 0; n < len; ++n) f.values[start + n * stride] = out[n];
    }
  }
}

inline void require_circular(const DomainSpec& dom, const char* what) {
  if (!dom.is_circular()) throw Unsupported(std::string(what) + " requires a circular domain");
}

}  // namespace detail

/// Non-normalized DFT: (F f)(n) = sum_k f(k) exp(-2 pi i <n,k/N>).
inline ComplexField dft(const RealField& f) {
  detail::require_circular(f.domain, "dft");
  ComplexField out{f.domain, std::vector<std::complex<double>>(f.values.begin(), f.values.end())};
  detail::dft_lines(out, -1);
  return out;
}

inline ComplexField dft(ComplexField f) {
  detail::require_circular(f.domain, "dft");
  detail::dft_lines(f, -1);
  return f;
}

inline ComplexField inverse_dft(ComplexField f) {
  detail::require_circular(f.domain, "inverse_dft");
  detail::dft_lines(f, +1);
  const double scale = 1.0 / static_cast<double>(f.domain.size());
  for (auto& v : f.values) v *= scale;
  return f;
}

/// Finitely supported weights on Z^D. Axis d spans offsets [-radii[d], radii[d]];
/// weights are stored row-major over that box.
struct Kernel {
  std::vector<std::size_t> radii;
  std::vector<double> weights;

  Kernel() = default;
  Kernel(std::vector<std::size_t> r, std::vector<double> w) : radii(std::move(r)), weights(std::move(w)) {
    if (radii.empty()) throw InvalidArgument("kernel needs at least one axis");
    if (weights.size() != box_size()) throw InvalidArgument("kernel weight count does not match its support box");
  }

  std::size_t rank() const noexcept { return radii.size(); }
  std::size_t width(std::size_t d) const { return 2 * radii[d] + 1; }
  std::size_t box_size() const {
    std::size_t n = 1;
    for (std::size_t d = 0; d < radii.size(); ++d) n *= width(d);
    return n;
  }

  /// Signed offset of the i-th stored weight.
  std::vector<long> offset(std::size_t i) const {
    std::vector<long> off(rank());
    for (std::size_t d = rank(); d-- > 0;) {
      off[d] = static_cast<long>(i % width(d)) - static_cast<long>(radii[d]);
      i /= width(d);
    }
    return off;
  }

  /// Storage index of -offset(i).
  std::size_t mirrored(std::size_t i) const { return box_size() - 1 - i; }

  bool is_even() const {
    for (std::size_t i = 0; i < weights.size(); ++i)
      if (weights[i] != weights[mirrored(i)]) return false;
    return true;
  }
};

inline Kernel dirac_kernel(std::size_t rank) {
  return Kernel(std::vector<std::size_t>(rank, 0), {1.0});
}

/// 3^D box of ones (3-tap box, Moore neighbourhood, ...).
inline Kernel box_kernel(std::size_t rank) {
  std::size_t n = 1;
  for (std::size_t d = 0; d < rank; ++d) n *= 3;
  return Kernel(std::vector<std::size_t>(rank, 1), std::vector<double>(n, 1.0));
}

/// Centre plus the 2D axis neighbours (von Neumann neighbourhood).
inline Kernel plus_kernel(std::size_t rank) {
  Kernel k = box_kernel(rank);
  std::fill(k.weights.begin(), k.weights.end(), 0.0);
  for (std::size_t i = 0; i < k.box_size(); ++i) {
    std::size_t nonzero = 0;
    for (long o : k.offset(i)) nonzero += o != 0;
    if (nonzero <= 1) k.weights[i] = 1.0;
  }
  return k;
}

struct Filter {
  RealField taps;

  Filter() = default;
  explicit Filter(RealField t) : taps(std::move(t)) {}

  const DomainSpec& domain() const noexcept { return taps.domain; }
  double operator[](std::size_t i) const { return taps[i]; }
};

/// Wraps a kernel onto a circular domain: g(n) = sum of k-weights with k = n mod N.
inline Filter filter_from_kernel(const DomainSpec& domain, const Kernel& kernel) {
  detail::require_circular(domain, "filter_from_kernel");
  if (kernel.rank() != domain.rank()) throw DomainMismatch("kernel rank does not match domain rank");
  RealField taps = RealField::zeros(domain);
  std::vector<std::size_t> c(domain.rank());
  for (std::size_t i = 0; i < kernel.box_size(); ++i) {
    if (kernel.weights[i] == 0.0) continue;
    const auto off = kernel.offset(i);
    for (std::size_t d = 0; d < domain.rank(); ++d) {
      const long n = static_cast<long>(domain.dim(d));
      c[d] = static_cast<std::size_t>(((off[d] % n) + n) % n);
    }
    taps[domain.index(c)] += kernel.weights[i];
  }
  return Filter(std::move(taps));
}

inline Filter dirac_filter(const DomainSpec& domain) { return filter_from_kernel(domain, dirac_kernel(domain.rank())); }
inline Filter box_filter(const DomainSpec& domain) { return filter_from_kernel(domain, box_kernel(domain.rank())); }
inline Filter plus_filter(const DomainSpec& domain) { return filter_from_kernel(domain, plus_kernel(domain.rank())); }

/// Scales the taps to unit sum.
inline Filter normalized(Filter g) {
  double s = 0.0;
  for (double v : g.taps.values) s += v;
  if (s == 0.0) throw InvalidArgument("cannot normalize a filter with zero tap sum");
  for (double& v : g.taps.values) v /= s;
  return g;
}

/// g(n) == g(-n) exactly, for every n.
inline bool is_even(const Filter& g) {
  const DomainSpec& dom = g.domain();
  for (std::size_t i = 0; i < dom.size(); ++i)
    if (g[i] != g[dom.negated(i)]) return false;
  return true;
}

/// g(0) >= sum_{n != 0} |g(n)|.
inline bool is_diag_dominant(const Filter& g) {
  double off = 0.0;
  for (std::size_t i = 1; i < g.taps.size(); ++i) off += std::abs(g[i]);
  return g[0] >= off;
}

inline bool is_strictly_diag_dominant(const Filter& g) {
  double off = 0.0;
  for (std::size_t i = 1; i < g.taps.size(); ++i) off += std::abs(g[i]);
  return g[0] > off;
}

enum class GuaranteeTier {
  AlwaysConverges,  // even with nonnegative spectrum
  OneOrTwoCycle,    // even only
  NoGuarantee,
};

inline const char* to_string(GuaranteeTier t) {
  switch (t) {
    case GuaranteeTier::AlwaysConverges: return "always-converges";
    case GuaranteeTier::OneOrTwoCycle: return "1-or-2-cycle";
    case GuaranteeTier::NoGuarantee: return "no-guarantee";
  }
  return "?";
}

struct SpectrumReport {
  std::vector<double> spectrum;  // real parts, one per frequency
  double max_imag = 0.0;
  bool is_even = false;
  double min_spectrum = 0.0;
  bool is_nonnegative = false;
  bool is_diag_dominant = false;
  double tol = kDefaultTol;
  GuaranteeTier tier = GuaranteeTier::NoGuarantee;
};

inline SpectrumReport analyze_filter(const Filter& g, double tol = kDefaultTol) {
  const ComplexField spec = dft(g.taps);
  SpectrumReport r;
  r.tol = tol;
  r.spectrum.reserve(spec.size());
  r.min_spectrum = spec[0].real();
  for (const auto& v : spec.values) {
    r.spectrum.push_back(v.real());
    r.max_imag = std::max(r.max_imag, std::abs(v.imag()));
    r.min_spectrum = std::min(r.min_spectrum, v.real());
  }
  r.is_even = is_even(g);
  r.is_nonnegative = r.min_spectrum >= -tol;
  r.is_diag_dominant = is_diag_dominant(g);
  if (r.is_even && r.is_nonnegative)
    r.tier = GuaranteeTier::AlwaysConverges;
  else if (r.is_even)
    r.tier = GuaranteeTier::OneOrTwoCycle;
  else
    r.tier = GuaranteeTier::NoGuarantee;
  return r;
}

struct GaussianSpec {
  double scale = 1.0;                 // standard deviation, pixels
  std::size_t truncation_radius = 6;  // taps kept per axis on each side

  GaussianSpec() = default;
  GaussianSpec(double s, std::size_t radius) : scale(s), truncation_radius(radius) {
    if (!(scale > 0.0)) throw InvalidArgument("gaussian scale must be positive");
    if (truncation_radius < 1) throw InvalidArgument("gaussian truncation radius must be at least 1");
  }

  /// Radius defaults to ceil(6 * scale): tail below 1e-7 of the peak.
  static GaussianSpec with_scale(double s) {
    if (!(s > 0.0)) throw InvalidArgument("gaussian scale must be positive");
    return GaussianSpec(s, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(6.0 * s))));
  }
};

namespace detail {

inline std::vector<double> gaussian_samples_1d(const GaussianSpec& spec) {
  const std::size_t r = spec.truncation_radius;
  std::vector<double> h(2 * r + 1);
  for (std::size_t i = 0; i <= r; ++i) {
    const double k = static_cast<double>(i);
    const double v = std::exp(-k * k / (2.0 * spec.scale * spec.scale));
    h[r + i] = v;
    h[r - i] = v;
  }
  return h;
}

template <class PerAxis>
std::vector<double> separable_product(const std::vector<std::size_t>& widths, PerAxis&& axis_value) {
  std::size_t total = 1;
  for (std::size_t w : widths) total *= w;
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    double v = 1.0;
    std::vector<std::size_t> c(widths.size());
    for (std::size_t d = widths.size(); d-- > 0;) {
      c[d] = rem % widths[d];
      rem /= widths[d];
    }
    for (std::size_t d = 0; d < widths.size(); ++d) v *= axis_value(d, c[d]);
    out[i] = v;
  }
  return out;
}

}  // namespace detail

/// Unnormalized integer samples exp(-k^2 / (2 scale^2)), |k_d| <= radius,
/// separable product over `rank` axes.
inline Kernel sampled_gaussian(const GaussianSpec& spec, std::size_t rank = 1) {
  const auto h = detail::gaussian_samples_1d(spec);
  std::vector<std::size_t> radii(rank, spec.truncation_radius);
  std::vector<std::size_t> widths(rank, h.size());
  return Kernel(radii, detail::separable_product(widths, [&](std::size_t, std::size_t c) { return h[c]; }));
}

/// N-periodization of the sampled Gaussian, built axis by axis. Each axis is
/// mirrored after summation so the result is even bit for bit.
inline Filter periodized_gaussian(const DomainSpec& domain, const GaussianSpec& spec) {
  detail::require_circular(domain, "periodized_gaussian");
  const auto h = detail::gaussian_samples_1d(spec);
  const long r = static_cast<long>(spec.truncation_radius);
  std::vector<std::vector<double>> axes;
  for (std::size_t d = 0; d < domain.rank(); ++d) {
    const long n = static_cast<long>(domain.dim(d));
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    // Sum the residue classes 0..n/2 in order of increasing |k|.
    for (long c = 0; c <= n / 2; ++c) {
      std::vector<long> ks;
      for (long k = -r; k <= r; ++k)
        if (((k - c) % n + n) % n == 0) ks.push_back(k);
      std::stable_sort(ks.begin(), ks.end(), [](long a, long b) { return std::labs(a) < std::labs(b); });
      double s = 0.0;
      for (long k : ks) s += h[static_cast<std::size_t>(k + r)];
      g[static_cast<std::size_t>(c)] = s;
      g[static_cast<std::size_t>((n - c) % n)] = s;
    }
    axes.push_back(std::move(g));
  }
  auto values = detail::separable_product(domain.dims(), [&](std::size_t d, std::size_t c) { return axes[d][c]; });
  return Filter(RealField(domain, std::move(values)));
}

/// Circular convolution computed directly in the spatial domain.
inline RealField circular_convolve(const RealField& f, const Filter& g) {
  if (!(f.domain == g.domain())) throw DomainMismatch("convolution over different domains");
  const DomainSpec& dom = f.domain;
  RealField out = RealField::zeros(dom);
  for (std::size_t n = 0; n < dom.size(); ++n) {
    const auto cn = dom.coords(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < dom.size(); ++k) {
      const auto ck = dom.coords(k);
      std::size_t idx = 0;
      for (std::size_t d = 0; d < dom.rank(); ++d)
        idx += ((cn[d] + dom.dim(d) - ck[d]) % dom.dim(d)) * dom.strides()[d];
      acc += g[k] * f[idx];
    }
    out[n] = acc;
  }
  return out;
}

/// <f*g, f> evaluated as (1/N) sum_n (F g)(n) |(F f)(n)|^2.
inline double quadratic_form_spectral(const Filter& g, const RealField& f) {
  if (!(f.domain == g.domain())) throw DomainMismatch("quadratic form over different domains");
  const ComplexField fg = dft(g.taps);
  const ComplexField ff = dft(f);
  double s = 0.0;
  for (std::size_t n = 0; n < ff.size(); ++n) s += (fg[n] * std::norm(ff[n])).real();
  return s / static_cast<double>(f.domain.size());
}

/// Minimum of the Fourier series sum_k w(k) cos(2 pi <k,x>) of an even kernel,
/// sampled on a grid of at least `min_samples` points per axis (the samples are
/// exact values of the series, taken through a non-aliasing DFT).
inline double fourier_series_min(const Kernel& kernel, std::size_t min_samples = 64) {
  std::vector<std::size_t> dims;
  for (std::size_t d = 0; d < kernel.rank(); ++d) dims.push_back(std::max(min_samples, 2 * kernel.width(d)));
  const Filter wrapped = filter_from_kernel(DomainSpec::circular(dims), kernel);
  const ComplexField spec = dft(wrapped.taps);
  double m = spec[0].real();
  for (const auto& v : spec.values) m = std::min(m, v.real());
  return m;
}

}  // namespace activemask
