#pragma once

// Pixel domains, real-valued fields and label fields.
//
// Pixels are addressed row-major: axis 0 varies slowest, the last axis
// fastest. Every dense matrix, CSV file and state encoding in the library
// uses this ordering.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "activemask/error.hpp"

namespace activemask {

enum class Boundary {
  Circular,    // torus: product of Z_{N_d}
  ZeroPadded,  // box [0, N_d) inside Z^D, zero outside
};

inline const char* to_string(Boundary b) {
  return b == Boundary::Circular ? "circular" : "padded";
}

class DomainSpec {
 public:
  DomainSpec() : DomainSpec({1}, Boundary::Circular) {}

  DomainSpec(std::vector<std::size_t> dims, Boundary boundary)
      : dims_(std::move(dims)), boundary_(boundary) {
    if (dims_.empty()) throw InvalidArgument("domain needs at least one axis");
    size_ = 1;
    for (std::size_t n : dims_) {
      if (n == 0) throw InvalidArgument("domain axis length must be positive");
      size_ *= n;
    }
    strides_.assign(dims_.size(), 1);
    for (std::size_t d = dims_.size() - 1; d > 0; --d) strides_[d - 1] = strides_[d] * dims_[d];
  }

  static DomainSpec circular(std::vector<std::size_t> dims) {
    return DomainSpec(std::move(dims), Boundary::Circular);
  }
  static DomainSpec padded(std::vector<std::size_t> dims) {
    return DomainSpec(std::move(dims), Boundary::ZeroPadded);
  }

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return size_; }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }
  Boundary boundary() const noexcept { return boundary_; }
  bool is_circular() const noexcept { return boundary_ == Boundary::Circular; }

  std::size_t index(std::span<const std::size_t> coords) const {
    std::size_t idx = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d) idx += coords[d] * strides_[d];
    return idx;
  }

  std::vector<std::size_t> coords(std::size_t index) const {
    std::vector<std::size_t> c(dims_.size());
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      c[d] = index / strides_[d];
      index %= strides_[d];
    }
    return c;
  }

  /// Index of -n (componentwise negation modulo N_d).
  std::size_t negated(std::size_t index) const {
    std::size_t out = 0;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      const std::size_t c = index / strides_[d];
      index %= strides_[d];
      out += ((dims_[d] - c) % dims_[d]) * strides_[d];
    }
    return out;
  }

  /// Same dims, different boundary treatment.
  DomainSpec with_boundary(Boundary b) const { return DomainSpec(dims_, b); }

  std::string shape_string() const {
    std::string s;
    for (std::size_t d = 0; d < dims_.size(); ++d) {
      if (d) s += 'x';
      s += std::to_string(dims_[d]);
    }
    return s;
  }

  friend bool operator==(const DomainSpec& a, const DomainSpec& b) {
    return a.dims_ == b.dims_ && a.boundary_ == b.boundary_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 1;
  Boundary boundary_ = Boundary::Circular;
};

struct RealField {
  DomainSpec domain;
  std::vector<double> values;

  RealField() = default;
  RealField(DomainSpec dom, std::vector<double> vals) : domain(std::move(dom)), values(std::move(vals)) {
    if (values.size() != domain.size())
      throw InvalidArgument("field has " + std::to_string(values.size()) + " values, domain has " +
                            std::to_string(domain.size()) + " pixels");
  }

  static RealField constant(const DomainSpec& dom, double v) {
    return RealField(dom, std::vector<double>(dom.size(), v));
  }
  static RealField zeros(const DomainSpec& dom) { return constant(dom, 0.0); }
  static RealField ones(const DomainSpec& dom) { return constant(dom, 1.0); }
  static RealField delta(const DomainSpec& dom, std::size_t at) {
    RealField f = zeros(dom);
    f.values.at(at) = 1.0;
    return f;
  }

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  friend bool operator==(const RealField&, const RealField&) = default;
};

inline double inner(const RealField& a, const RealField& b) {
  if (!(a.domain == b.domain)) throw DomainMismatch("inner product of fields over different domains");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

using Label = std::uint16_t;
inline constexpr std::size_t kMaxLabels = 65535;

/// A segmentation: one label in 1..num_labels per pixel.
class LabelField {
 public:
  LabelField() = default;

  LabelField(DomainSpec domain, std::size_t num_labels, std::vector<Label> labels)
      : domain_(std::move(domain)), num_labels_(num_labels), labels_(std::move(labels)) {
    if (num_labels_ < 1 || num_labels_ > kMaxLabels)
      throw InvalidArgument("label count must lie in [1, 65535]");
    if (labels_.size() != domain_.size()) throw InvalidArgument("label field size does not match domain");
    for (Label l : labels_)
      if (l < 1 || l > num_labels_)
        throw InvalidLabel("label " + std::to_string(l) + " outside [1, " + std::to_string(num_labels_) + "]");
  }

  static LabelField constant(const DomainSpec& domain, std::size_t num_labels, Label label) {
    return LabelField(domain, num_labels, std::vector<Label>(domain.size(), label));
  }

  const DomainSpec& domain() const noexcept { return domain_; }
  std::size_t num_labels() const noexcept { return num_labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  Label operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  friend bool operator==(const LabelField&, const LabelField&) = default;

 private:
  DomainSpec domain_;
  std::size_t num_labels_ = 1;
  std::vector<Label> labels_;
};

/// Indicator field of label m (1-based).
inline RealField mask_of(const LabelField& psi, std::size_t m) {
  if (m < 1 || m > psi.num_labels())
    throw InvalidLabel("mask index " + std::to_string(m) + " outside [1, " + std::to_string(psi.num_labels()) + "]");
  RealField out = RealField::zeros(psi.domain());
  for (std::size_t i = 0; i < psi.size(); ++i)
    if (psi[i] == m) out[i] = 1.0;
  return out;
}

/// Calls fn(a, b) once per unordered axis-neighbour pair. An axis of length 1
/// contributes nothing; a circular axis of length 2 contributes each pair once.
template <class Fn>
void for_each_adjacent_pair(const DomainSpec& domain, Fn&& fn) {
  const auto& dims = domain.dims();
  const auto& strides = domain.strides();
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const std::size_t len = dims[d];
    if (len < 2) continue;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      const std::size_t c = (i / strides[d]) % len;
      if (c + 1 < len) {
        fn(i, i + strides[d]);
      } else if (domain.is_circular() && len > 2) {
        fn(i, i - c * strides[d]);
      }
    }
  }
}

inline std::vector<std::pair<std::size_t, std::size_t>> adjacent_pairs(const DomainSpec& domain) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for_each_adjacent_pair(domain, [&](std::size_t a, std::size_t b) { out.emplace_back(a, b); });
  return out;
}

inline std::size_t boundary_crossings(const LabelField& psi) {
  std::size_t count = 0;
  const auto& l = psi.labels();
  for_each_adjacent_pair(psi.domain(), [&](std::size_t a, std::size_t b) { count += l[a] != l[b]; });
  return count;
}

inline std::size_t nonempty_masks(const LabelField& psi) {
  std::vector<bool> seen(psi.num_labels() + 1, false);
  std::size_t count = 0;
  for (Label l : psi.labels())
    if (!seen[l]) {
      seen[l] = true;
      ++count;
    }
  return count;
}

inline std::size_t pixels_changed(const LabelField& a, const LabelField& b) {
  if (!(a.domain() == b.domain())) throw DomainMismatch("comparing label fields over different domains");
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
  return count;
}

}  // namespace activemask
