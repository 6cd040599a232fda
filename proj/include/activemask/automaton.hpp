#pragma once

// Synchronous Active-Mask dynamics:
//
//   psi_i(n) = min argmax_m [ (A mu_m)(n) + R_m(n) ],  mu_m = [psi_{i-1} == m]
//
// Votes are compared exactly (no epsilon); ties go to the smallest label.

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "activemask/detail/hash.hpp"
#include "activemask/domain.hpp"
#include "activemask/error.hpp"
#include "activemask/operators.hpp"

namespace activemask {

/// Additive per-label vote offsets R_1..R_M.
class SkewStack {
 public:
  SkewStack() = default;
  SkewStack(DomainSpec domain, std::vector<RealField> fields) : domain_(std::move(domain)), fields_(std::move(fields)) {
    if (fields_.empty()) throw InvalidArgument("skew stack needs at least one field");
    if (fields_.size() > kMaxLabels) throw InvalidArgument("too many skew fields");
    for (const auto& f : fields_)
      if (!(f.domain == domain_)) throw DomainMismatch("skew field domain differs from stack domain");
  }

  static SkewStack zeros(const DomainSpec& domain, std::size_t num_labels) {
    if (num_labels < 1) throw InvalidArgument("label count must be at least 1");
    return SkewStack(domain, std::vector<RealField>(num_labels, RealField::zeros(domain)));
  }

  const DomainSpec& domain() const noexcept { return domain_; }
  std::size_t num_labels() const noexcept { return fields_.size(); }
  /// R_m, 1-based.
  const RealField& operator[](std::size_t m) const { return fields_.at(m - 1); }
  const std::vector<RealField>& fields() const noexcept { return fields_; }

 private:
  DomainSpec domain_;
  std::vector<RealField> fields_;
};

enum class DetectMode {
  LastTwo,      // compares with the previous two states; sound for (quasi-)self-adjoint A
  FullHistory,  // hashes every state; finds the true (transient, period) for any A
};

struct AmConfig {
  VotingOperator op;
  SkewStack skews;
  std::size_t max_iterations;
  DetectMode detect_mode;

  AmConfig(VotingOperator o, SkewStack s, std::size_t max_iter = 0, DetectMode mode = DetectMode::FullHistory)
      : op(std::move(o)), skews(std::move(s)), max_iterations(max_iter), detect_mode(mode) {
    if (!(op.domain() == skews.domain())) throw DomainMismatch("operator and skew stack live on different domains");
    if (max_iterations == 0) max_iterations = default_max_iterations(op.domain(), skews.num_labels());
  }

  const DomainSpec& domain() const noexcept { return op.domain(); }
  std::size_t num_labels() const noexcept { return skews.num_labels(); }

  static std::size_t default_max_iterations(const DomainSpec& d, std::size_t m) { return 10 * d.size() * m; }
};

namespace detail {

inline void check_state(const LabelField& psi, const AmConfig& config) {
  if (!(psi.domain() == config.domain())) throw DomainMismatch("label field domain differs from configuration");
  if (psi.num_labels() != config.num_labels())
    throw DomainMismatch("label field has M=" + std::to_string(psi.num_labels()) + ", configuration has M=" +
                         std::to_string(config.num_labels()));
}

// votes has M + 1 entries.
inline Label decide(const LabelField& psi, const AmConfig& config, std::size_t n, std::span<const std::size_t> coords,
                    std::span<double> votes) {
  accumulate_votes(config.op, psi, n, coords, votes);
  const auto& fields = config.skews.fields();
  Label best = 1;
  double best_value = votes[1] + fields[0][n];
  for (std::size_t m = 2; m < votes.size(); ++m) {
    const double v = votes[m] + fields[m - 1][n];
    if (v > best_value) {
      best_value = v;
      best = static_cast<Label>(m);
    }
  }
  return best;
}

}  // namespace detail

/// New label of a single pixel, computed from `psi` alone.
inline Label step_at(const LabelField& psi, const AmConfig& config, std::size_t n) {
  detail::check_state(psi, config);
  std::vector<double> votes(config.num_labels() + 1);
  const auto coords = psi.domain().coords(n);
  return detail::decide(psi, config, n, coords, votes);
}

/// One fully synchronous update of every pixel.
inline LabelField step(const LabelField& psi, const AmConfig& config) {
  detail::check_state(psi, config);
  const DomainSpec& dom = psi.domain();
  std::vector<double> votes(config.num_labels() + 1);
  std::vector<Label> next(dom.size());
  std::vector<std::size_t> c(dom.rank(), 0);
  for (std::size_t n = 0; n < dom.size(); ++n, detail::advance(c, dom)) next[n] = detail::decide(psi, config, n, c, votes);
  return LabelField(dom, psi.num_labels(), std::move(next));
}

struct IterationMetrics {
  std::size_t iteration = 0;
  std::size_t boundary_crossings = 0;
  std::size_t pixels_changed = 0;  // against the previous iteration; 0 at iteration 0
  std::size_t nonempty_masks = 0;
};

struct CycleReport {
  std::size_t transient = 0;     // i0
  std::size_t cycle_length = 0;  // K; 0 when max_iterations ran out first
  std::vector<LabelField> cycle_states;
  bool converged = false;
  std::size_t iterations_run = 0;
  std::vector<IterationMetrics> metrics;  // iterations 0..iterations_run

  std::vector<std::size_t> trace() const {
    std::vector<std::size_t> t;
    t.reserve(metrics.size());
    for (const auto& m : metrics) t.push_back(m.boundary_crossings);
    return t;
  }
  const LabelField& final_state() const { return cycle_states.at(0); }
};

/// Called with (iteration, state) for every state of the trajectory, starting at 0.
using StateObserver = std::function<void(std::size_t, const LabelField&)>;

inline CycleReport run(const LabelField& psi0, const AmConfig& config, const StateObserver& observer = {}) {
  detail::check_state(psi0, config);
  CycleReport report;
  auto record = [&](std::size_t i, const LabelField& cur, const LabelField* prev) {
    report.metrics.push_back({i, boundary_crossings(cur), prev ? pixels_changed(*prev, cur) : 0, nonempty_masks(cur)});
    if (observer) observer(i, cur);
  };
  record(0, psi0, nullptr);

  auto finish = [&](std::size_t i, std::size_t i0, std::vector<LabelField> cycle) {
    report.iterations_run = i;
    report.transient = i0;
    report.cycle_length = cycle.size();
    report.cycle_states = std::move(cycle);
    report.converged = report.cycle_length == 1;
  };

  if (config.detect_mode == DetectMode::LastTwo) {
    std::deque<LabelField> recent{psi0};  // at most the last three states
    for (std::size_t i = 1; i <= config.max_iterations; ++i) {
      LabelField next = step(recent.back(), config);
      record(i, next, &recent.back());
      if (next == recent.back()) {
        finish(i, i - 1, {std::move(next)});
        return report;
      }
      if (recent.size() >= 2 && next == recent[recent.size() - 2]) {
        finish(i, i - 2, {recent[recent.size() - 2], recent.back()});
        return report;
      }
      recent.push_back(std::move(next));
      if (recent.size() > 2) recent.pop_front();
    }
    report.iterations_run = config.max_iterations;
    report.cycle_states = {recent.back()};
    return report;
  }

  // Full history: every state is kept; a hash hit is confirmed by comparison.
  std::vector<LabelField> states{psi0};
  std::unordered_multimap<detail::Hash128, std::size_t, detail::Hash128Hasher> seen;
  seen.emplace(detail::hash128(std::span<const Label>(psi0.labels())), 0);
  for (std::size_t i = 1; i <= config.max_iterations; ++i) {
    LabelField next = step(states.back(), config);
    record(i, next, &states.back());
    const auto h = detail::hash128(std::span<const Label>(next.labels()));
    const auto [lo, hi] = seen.equal_range(h);
    for (auto it = lo; it != hi; ++it) {
      if (states[it->second] == next) {
        const std::size_t i0 = it->second;
        finish(i, i0, std::vector<LabelField>(states.begin() + static_cast<long>(i0), states.end()));
        return report;
      }
    }
    seen.emplace(h, i);
    states.push_back(std::move(next));
  }
  report.iterations_run = config.max_iterations;
  report.cycle_states = {states.back()};
  return report;
}

/// Plain iterative voting: run with every skew identically zero.
inline CycleReport iterate_voting(const LabelField& psi0, const VotingOperator& op, std::size_t max_iterations = 0,
                                  DetectMode mode = DetectMode::FullHistory) {
  AmConfig config(op, SkewStack::zeros(op.domain(), psi0.num_labels()), max_iterations, mode);
  return run(psi0, config);
}

/// Two-label dynamics as a threshold automaton: label 2 iff (A mu_2)(n) + b(n) > 0.
struct TcaParams {
  VotingOperator op;
  RealField b;
};

/// b = (R_2 - R_1 - A 1) / 2.
inline TcaParams to_tca(const AmConfig& config) {
  if (config.num_labels() != 2)
    throw Unsupported("threshold form exists only for M = 2 (got M=" + std::to_string(config.num_labels()) + ")");
  const RealField a1 = apply(config.op, RealField::ones(config.domain()));
  const RealField& r1 = config.skews[1];
  const RealField& r2 = config.skews[2];
  RealField b = RealField::zeros(config.domain());
  for (std::size_t n = 0; n < b.size(); ++n) b[n] = 0.5 * (r2[n] - r1[n] - a1[n]);
  return {config.op, std::move(b)};
}

inline LabelField tca_step(const LabelField& psi, const TcaParams& params) {
  if (psi.num_labels() != 2) throw Unsupported("threshold step needs a two-label field");
  if (!(psi.domain() == params.op.domain()) || !(params.b.domain == psi.domain()))
    throw DomainMismatch("threshold parameters and label field live on different domains");
  const RealField v = apply(params.op, mask_of(psi, 2));
  std::vector<Label> next(psi.size());
  for (std::size_t n = 0; n < psi.size(); ++n) next[n] = v[n] + params.b[n] > 0.0 ? 2 : 1;
  return LabelField(psi.domain(), 2, std::move(next));
}

}  // namespace activemask
