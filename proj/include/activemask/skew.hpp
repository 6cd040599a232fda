#pragma once

// Image-derived skew stacks.

#include <array>
#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include "activemask/automaton.hpp"
#include "activemask/domain.hpp"
#include "activemask/operators.hpp"
#include "activemask/spectral.hpp"

namespace activemask {

/// Intensities normalized to [0, 1].
struct ImageField {
  RealField intensity;

  ImageField() = default;
  explicit ImageField(RealField f) : intensity(std::move(f)) {
    for (double v : intensity.values)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("image intensity outside [0, 1]");
  }

  const DomainSpec& domain() const noexcept { return intensity.domain; }
};

/// Local-average window: a Gaussian scale, an explicit circular filter, or an
/// explicit kernel for zero-padded images.
using Window = std::variant<GaussianSpec, Filter, Kernel>;

struct SoftThresholdSpec {
  Window window = GaussianSpec::with_scale(4.0);
  double threshold = 0.5;   // theta, in normalized intensity
  double sharpness = 0.05;  // s
  double amplitude = 1.0;   // a
};

/// Unit-mass local average of the image. Circular domains use a normalized
/// circular filter; zero-padded domains use the boundary-normalized star
/// operator, so edge pixels average only over in-image neighbours.
inline RealField local_average(const ImageField& img, const Window& window) {
  const DomainSpec& dom = img.domain();
  if (dom.is_circular()) {
    Filter g;
    if (const auto* gs = std::get_if<GaussianSpec>(&window))
      g = periodized_gaussian(dom, *gs);
    else if (const auto* f = std::get_if<Filter>(&window))
      g = *f;
    else
      g = filter_from_kernel(dom, std::get<Kernel>(window));
    return apply(VotingOperator::circular(normalized(std::move(g))), img.intensity);
  }
  Kernel k;
  if (const auto* gs = std::get_if<GaussianSpec>(&window))
    k = sampled_gaussian(*gs, dom.rank());
  else if (const auto* kk = std::get_if<Kernel>(&window))
    k = *kk;
  else
    throw Unsupported("a circular filter cannot window a zero-padded image");
  return apply(VotingOperator::star(dom, std::move(k)), img.intensity);
}

/// a / (1 + exp((x - theta) / s)); decreasing in x, equal to a/2 at theta.
inline double soft_threshold(double x, double theta, double sharpness, double amplitude) {
  return amplitude / (1.0 + std::exp((x - theta) / sharpness));
}

/// R_1 = soft-thresholded local brightness (large on dark background),
/// R_2..R_M = 0.
inline SkewStack background_skew(const ImageField& img, const SoftThresholdSpec& spec, std::size_t num_labels) {
  if (num_labels < 2) throw InvalidArgument("background skew needs at least two labels");
  if (!(spec.sharpness > 0.0)) throw InvalidArgument("soft-threshold sharpness must be positive");
  if (!(spec.amplitude > 0.0)) throw InvalidArgument("soft-threshold amplitude must be positive");
  const RealField avg = local_average(img, spec.window);
  RealField r1 = RealField::zeros(img.domain());
  for (std::size_t n = 0; n < r1.size(); ++n)
    r1[n] = soft_threshold(avg[n], spec.threshold, spec.sharpness, spec.amplitude);
  std::vector<RealField> fields(num_labels, RealField::zeros(img.domain()));
  fields[0] = std::move(r1);
  return SkewStack(img.domain(), std::move(fields));
}

inline SkewStack zero_skew(const DomainSpec& domain, std::size_t num_labels) { return SkewStack::zeros(domain, num_labels); }

/// Otsu's two-class threshold on a 256-bin intensity histogram, in [0, 1].
inline double otsu_threshold(const ImageField& img) {
  constexpr std::size_t kBins = 256;
  std::array<double, kBins> hist{};
  for (double v : img.intensity.values) {
    const auto b = std::min<std::size_t>(kBins - 1, static_cast<std::size_t>(v * kBins));
    hist[b] += 1.0;
  }
  const double total = static_cast<double>(img.intensity.size());
  double sum_all = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * hist[b];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  std::size_t best_bin = kBins / 2 - 1, last_bin = best_bin;
  for (std::size_t b = 0; b + 1 < kBins; ++b) {
    w0 += hist[b];
    sum0 += static_cast<double>(b) * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_bin = last_bin = b;
    } else if (between == best) {
      last_bin = b;
    }
  }
  // Empty bins between two clusters tie; split the plateau in the middle.
  return (0.5 * static_cast<double>(best_bin + last_bin) + 1.0) / kBins;
}

}  // namespace activemask
