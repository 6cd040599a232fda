#pragma once

// Brute-force oracles for the convergence theorems on tiny domains:
// exhaustive trajectory enumeration, exhaustive {0, +-1} quadratic forms,
// submatrix sums, and a fixed battery tying them together.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "activemask/automaton.hpp"
#include "activemask/detail/random.hpp"
#include "activemask/domain.hpp"
#include "activemask/operators.hpp"
#include "activemask/skew.hpp"
#include "activemask/spectral.hpp"

namespace activemask {

inline constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kDefaultQuadformBudget = 43046721;  // 3^16

/// base^exp, or 0 if it exceeds `cap`.
inline std::uint64_t bounded_power(std::uint64_t base, std::size_t exp, std::uint64_t cap) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && v > cap / base) return 0;
    v *= base;
  }
  return v <= cap ? v : 0;
}

// Initial states are numbered as a mixed-radix counter in pixel order:
// pixel 0 is the most significant digit, label 1 is digit 0.
inline std::uint64_t state_index(const LabelField& psi) {
  std::uint64_t idx = 0;
  for (Label l : psi.labels()) idx = idx * psi.num_labels() + (l - 1);
  return idx;
}

inline LabelField state_from_index(const DomainSpec& domain, std::size_t num_labels, std::uint64_t idx) {
  std::vector<Label> labels(domain.size());
  for (std::size_t n = domain.size(); n-- > 0;) {
    labels[n] = static_cast<Label>(idx % num_labels + 1);
    idx /= num_labels;
  }
  return LabelField(domain, num_labels, std::move(labels));
}

struct EnumerationReport {
  std::size_t domain_size = 0;
  std::size_t num_labels = 0;
  std::uint64_t states_enumerated = 0;
  std::map<std::size_t, std::uint64_t> cycle_length_histogram;  // K -> initial states
  std::size_t max_transient = 0;
  std::map<std::size_t, LabelField> witnesses;  // first initial state per K >= 2

  bool only_fixed_points() const {
    return cycle_length_histogram.size() == 1 && cycle_length_histogram.begin()->first == 1;
  }
  std::size_t max_cycle_length() const {
    return cycle_length_histogram.empty() ? 0 : cycle_length_histogram.rbegin()->first;
  }
};

/// Runs the dynamics from every one of the M^N initial states. The step map is
/// evaluated once per state (in parallel) and the resulting functional graph
/// is walked to find each state's transient and cycle length.
inline EnumerationReport enumerate_all(const AmConfig& config, std::uint64_t budget = kDefaultEnumerationBudget,
                                       unsigned threads = 0) {
  const DomainSpec& dom = config.domain();
  const std::size_t M = config.num_labels();
  const std::uint64_t total = bounded_power(M, dom.size(), budget);
  if (total == 0) {
    std::ostringstream msg;
    msg << "enumeration needs " << M << "^" << dom.size() << " states, budget is " << budget;
    throw BudgetExceeded(msg.str());
  }

  std::vector<std::uint64_t> succ(total);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(1, total / 256)));
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t s = begin; s < end; ++s) succ[s] = state_index(step(state_from_index(dom, M, s), config));
  };
  if (threads <= 1) {
    work(0, total);
  } else {
    std::vector<std::jthread> pool;
    const std::uint64_t chunk = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::uint64_t b = std::min(total, t * chunk), e = std::min(total, b + chunk);
      pool.emplace_back(work, b, e);
    }
  }

  constexpr std::uint32_t kUnseen = 0, kOnPath = 1, kDone = 2;
  std::vector<std::uint8_t> color(total, kUnseen);
  std::vector<std::uint32_t> dist(total, 0);
  std::vector<std::uint32_t> period(total, 0);
  std::vector<std::uint64_t> path;
  for (std::uint64_t s0 = 0; s0 < total; ++s0) {
    if (color[s0] == kDone) continue;
    path.clear();
    std::uint64_t s = s0;
    while (color[s] == kUnseen) {
      color[s] = kOnPath;
      path.push_back(s);
      s = succ[s];
    }
    std::size_t stop = path.size();
    if (color[s] == kOnPath) {
      // s closes a new cycle within the current path.
      const auto at = static_cast<std::size_t>(std::find(path.begin(), path.end(), s) - path.begin());
      const auto K = static_cast<std::uint32_t>(path.size() - at);
      for (std::size_t i = at; i < path.size(); ++i) {
        color[path[i]] = kDone;
        dist[path[i]] = 0;
        period[path[i]] = K;
      }
      stop = at;
    }
    for (std::size_t i = stop; i-- > 0;) {
      const std::uint64_t v = path[i], next = succ[v];
      color[v] = kDone;
      dist[v] = dist[next] + 1;
      period[v] = period[next];
    }
  }

  EnumerationReport r;
  r.domain_size = dom.size();
  r.num_labels = M;
  r.states_enumerated = total;
  for (std::uint64_t s = 0; s < total; ++s) {
    ++r.cycle_length_histogram[period[s]];
    r.max_transient = std::max<std::size_t>(r.max_transient, dist[s]);
    if (period[s] >= 2 && !r.witnesses.count(period[s])) r.witnesses.emplace(period[s], state_from_index(dom, M, s));
  }
  return r;
}

struct QuadFormReport {
  std::uint64_t functions_tested = 0;  // 3^N
  double min_value = 0.0;
  RealField argmin_f;                  // first minimizer found
  std::vector<RealField> argmins;      // all minimizers (up to kMaxArgmins)
  bool all_nonnegative = false;
  double tol = kDefaultTol;

  static constexpr std::size_t kMaxArgmins = 64;
};

/// min of <A f, f> over every f: Omega -> {0, +-1}. Walks the 3^N functions in
/// reflected Gray order so each step updates A f by a single column.
inline QuadFormReport exhaustive_quadform(const VotingOperator& op, double tol = kDefaultTol,
                                          std::uint64_t budget = kDefaultQuadformBudget) {
  const DomainSpec& dom = op.domain();
  const std::size_t N = dom.size();
  const std::uint64_t total = bounded_power(3, N, budget);
  if (total == 0) {
    std::ostringstream msg;
    msg << "quadratic-form search needs 3^" << N << " functions, budget is " << budget;
    throw BudgetExceeded(msg.str());
  }
  const std::vector<double> a = to_dense(op);

  std::vector<int> digit(N, 0), dir(N, 1);  // f = digit - 1
  std::vector<double> f(N, -1.0), u(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) u[i] -= a[i * N + j];

  double scale = 0.0;
  for (double v : a) scale += std::abs(v);
  const double tie = 1e-12 * std::max(1.0, scale);

  QuadFormReport r;
  r.tol = tol;
  r.functions_tested = total;
  r.min_value = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> minimizers;
  for (std::uint64_t visited = 0;; ++visited) {
    double q = 0.0;
    for (std::size_t i = 0; i < N; ++i) q += u[i] * f[i];
    if (q < r.min_value - tie) {
      r.min_value = q;
      minimizers.assign(1, f);
    } else if (q <= r.min_value + tie) {
      r.min_value = std::min(r.min_value, q);
      if (minimizers.size() < QuadFormReport::kMaxArgmins) minimizers.push_back(f);
    }
    std::size_t j = 0;
    while (j < N && (digit[j] + dir[j] < 0 || digit[j] + dir[j] > 2)) {
      dir[j] = -dir[j];
      ++j;
    }
    if (j == N) break;
    digit[j] += dir[j];
    const double delta = dir[j];
    f[j] += delta;
    for (std::size_t i = 0; i < N; ++i) u[i] += delta * a[i * N + j];
  }

  // Re-evaluate the minimizers exactly; the running A f accumulates roundoff.
  r.min_value = std::numeric_limits<double>::infinity();
  for (const auto& m : minimizers) {
    RealField mf(dom, m);
    r.min_value = std::min(r.min_value, quadratic_form(op, mf));
    r.argmins.push_back(std::move(mf));
  }
  r.argmin_f = r.argmins.front();
  r.all_nonnegative = r.min_value >= -tol;
  return r;
}

/// ssum(A_11) + ssum(A_22) - ssum(A_12) - ssum(A_21), where ssum(A_ij) sums
/// rows in I_i and columns in I_j. Equals <A f, f> for f = chi_I1 - chi_I2.
inline double submatrix_sum_form(const VotingOperator& op, const std::vector<std::size_t>& i1,
                                 const std::vector<std::size_t>& i2) {
  const std::size_t N = op.domain().size();
  for (std::size_t p : i1)
    if (p >= N) throw InvalidArgument("subset index out of range");
  for (std::size_t p : i2)
    if (p >= N) throw InvalidArgument("subset index out of range");
  const std::vector<double> a = to_dense(op);
  auto ssum = [&](const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    double s = 0.0;
    for (std::size_t r : rows)
      for (std::size_t c : cols) s += a[r * N + c];
    return s;
  };
  return ssum(i1, i1) + ssum(i2, i2) - ssum(i1, i2) - ssum(i2, i1);
}

/// chi_I1 - chi_I2 as a field.
inline RealField indicator_difference(const DomainSpec& dom, const std::vector<std::size_t>& i1,
                                      const std::vector<std::size_t>& i2) {
  RealField f = RealField::zeros(dom);
  for (std::size_t p : i1) f[p] += 1.0;
  for (std::size_t p : i2) f[p] -= 1.0;
  return f;
}

// Random corpora. Integer taps keep every vote exact in double precision.

/// Integer taps in [lo, hi], made even by g <- g + reversal(g).
inline Filter random_even_integer_filter(const DomainSpec& dom, detail::Rng& rng, long lo = -3, long hi = 3) {
  RealField raw = RealField::zeros(dom);
  for (double& v : raw.values) v = static_cast<double>(detail::uniform_int(rng, lo, hi));
  RealField g = RealField::zeros(dom);
  for (std::size_t n = 0; n < dom.size(); ++n) g[n] = raw[n] + raw[dom.negated(n)];
  return Filter(std::move(g));
}

inline Filter random_integer_filter(const DomainSpec& dom, detail::Rng& rng, long lo = -3, long hi = 3) {
  RealField g = RealField::zeros(dom);
  for (double& v : g.values) v = static_cast<double>(detail::uniform_int(rng, lo, hi));
  return Filter(std::move(g));
}

/// Integer taps with g(0) = 1 + sum_{n != 0} |g(n)|.
inline Filter random_strictly_dominant_filter(const DomainSpec& dom, detail::Rng& rng, bool even) {
  Filter g = even ? random_even_integer_filter(dom, rng) : random_integer_filter(dom, rng);
  double off = 0.0;
  for (std::size_t n = 1; n < dom.size(); ++n) off += std::abs(g[n]);
  g.taps[0] = off + 1.0;
  return g;
}

/// Skews on the grid 1/8 Z inside [-2, 2]; sums stay exact.
inline SkewStack random_dyadic_skews(const DomainSpec& dom, std::size_t num_labels, detail::Rng& rng) {
  std::vector<RealField> fields;
  for (std::size_t m = 0; m < num_labels; ++m) {
    RealField r = RealField::zeros(dom);
    for (double& v : r.values) v = static_cast<double>(detail::uniform_int(rng, -16, 16)) / 8.0;
    fields.push_back(std::move(r));
  }
  return SkewStack(dom, std::move(fields));
}

inline SkewStack random_real_skews(const DomainSpec& dom, std::size_t num_labels, detail::Rng& rng,
                                   double amplitude = 1.0) {
  std::vector<RealField> fields;
  for (std::size_t m = 0; m < num_labels; ++m) {
    RealField r = RealField::zeros(dom);
    for (double& v : r.values) v = detail::uniform_real(rng, -amplitude, amplitude);
    fields.push_back(std::move(r));
  }
  return SkewStack(dom, std::move(fields));
}

inline std::string labels_string(const LabelField& psi) {
  std::string s;
  for (std::size_t n = 0; n < psi.size(); ++n) {
    if (n) s += ',';
    s += std::to_string(psi[n]);
  }
  return s;
}

inline std::string taps_string(const RealField& f) {
  std::ostringstream s;
  s.precision(17);
  for (std::size_t n = 0; n < f.size(); ++n) s << (n ? "," : "") << f[n];
  return s.str();
}

struct BatteryResult {
  std::string name;
  bool asserted = true;  // exploratory batteries never fail the suite
  bool passed = true;
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::map<std::size_t, std::uint64_t> histogram;  // merged cycle-length counts
  std::vector<std::string> witnesses;
};

struct SuiteOptions {
  std::uint64_t seed = 20100901;
  std::uint64_t budget = 1u << 12;  // states per enumeration
  std::size_t filters = 40;         // random filters per battery
  std::size_t skews_per_filter = 3;
};

struct SuiteReport {
  std::vector<BatteryResult> batteries;
  SuiteOptions options;

  bool passed() const {
    return std::all_of(batteries.begin(), batteries.end(), [](const auto& b) { return !b.asserted || b.passed; });
  }

  /// Line-oriented key=value summary:
  ///   suite.seed, suite.budget, suite.passed
  ///   battery.<name>.{asserted,passed,cases,violations}
  ///   battery.<name>.histogram.<K>=<count>
  ///   battery.<name>.witness.<i>=<description>
  std::string to_key_value() const {
    std::ostringstream out;
    out << "suite.seed=" << options.seed << "\n";
    out << "suite.budget=" << options.budget << "\n";
    for (const auto& b : batteries) {
      const std::string p = "battery." + b.name + ".";
      out << p << "asserted=" << (b.asserted ? "true" : "false") << "\n";
      out << p << "passed=" << (b.passed ? "true" : "false") << "\n";
      out << p << "cases=" << b.cases << "\n";
      out << p << "violations=" << b.violations << "\n";
      for (const auto& [k, c] : b.histogram) out << p << "histogram." << k << "=" << c << "\n";
      for (std::size_t i = 0; i < b.witnesses.size(); ++i) out << p << "witness." << i << "=" << b.witnesses[i] << "\n";
    }
    out << "suite.passed=" << (passed() ? "true" : "false") << "\n";
    return out.str();
  }
};

namespace detail {

inline void merge(BatteryResult& b, const EnumerationReport& e) {
  for (const auto& [k, c] : e.cycle_length_histogram) b.histogram[k] += c;
}

// Small domains, in both boundary modes' shapes.
inline std::vector<std::vector<std::size_t>> battery_shapes() {
  return {{3}, {4}, {5}, {6}, {2, 2}, {2, 3}};
}

}  // namespace detail

/// The fixed battery:
///   (a) even filters            -> cycle lengths in {1, 2}
///   (b) even, PSD filters        -> fixed points only
///   (c) star Gaussians (PSD B)   -> fixed points only
///   (d) non-even filters         -> search for K >= 3 (reported, not asserted)
inline SuiteReport theorem_suite(const SuiteOptions& opts = {}) {
  SuiteReport report;
  report.options = opts;
  detail::Rng rng(opts.seed);
  const auto shapes = detail::battery_shapes();
  auto fits = [&](std::size_t M, std::size_t N) { return bounded_power(M, N, opts.budget) != 0; };

  {
    BatteryResult b;
    b.name = "even-filters-cycle-at-most-2";
    std::vector<AmConfig> configs;
    const DomainSpec z4 = DomainSpec::circular({4});
    configs.emplace_back(VotingOperator::circular(box_filter(z4)), zero_skew(z4, 2));
    for (std::size_t i = 0; i < opts.filters; ++i) {
      const DomainSpec dom = DomainSpec::circular(shapes[i % shapes.size()]);
      const std::size_t M = (i % 2 == 0 || !fits(3, dom.size())) ? 2 : 3;
      const SkewStack skews = i % 3 == 0 ? zero_skew(dom, M) : random_dyadic_skews(dom, M, rng);
      configs.emplace_back(VotingOperator::circular(random_even_integer_filter(dom, rng)), skews);
    }
    for (const auto& c : configs) {
      if (!fits(c.num_labels(), c.domain().size())) continue;
      const auto e = enumerate_all(c, opts.budget);
      ++b.cases;
      detail::merge(b, e);
      if (e.max_cycle_length() > 2) {
        ++b.violations;
        b.witnesses.push_back("filter=" + taps_string(c.op.filter()->taps) + ";psi0=" +
                              labels_string(e.witnesses.rbegin()->second));
      }
    }
    b.passed = b.violations == 0;
    report.batteries.push_back(std::move(b));
  }

  {
    BatteryResult b;
    b.name = "psd-filters-converge";
    std::vector<Filter> filters;
    for (const auto& shape : shapes) {
      const DomainSpec dom = DomainSpec::circular(shape);
      filters.push_back(dirac_filter(dom));
      for (double scale : {0.5, 1.0, 2.0}) filters.push_back(periodized_gaussian(dom, GaussianSpec::with_scale(scale)));
    }
    for (std::size_t i = 0; i < opts.filters / 2; ++i)
      filters.push_back(random_strictly_dominant_filter(DomainSpec::circular(shapes[i % shapes.size()]), rng, true));
    for (const auto& g : filters) {
      if (analyze_filter(g).tier != GuaranteeTier::AlwaysConverges) {
        ++b.violations;
        b.witnesses.push_back("not-psd filter=" + taps_string(g.taps));
        continue;
      }
      const auto op = VotingOperator::circular(g);
      for (std::size_t s = 0; s < opts.skews_per_filter; ++s) {
        const std::size_t M = s % 2 == 0 || !fits(3, g.domain().size()) ? 2 : 3;
        const auto e = enumerate_all(AmConfig(op, random_real_skews(g.domain(), M, rng)), opts.budget);
        ++b.cases;
        detail::merge(b, e);
        if (!e.only_fixed_points()) {
          ++b.violations;
          b.witnesses.push_back("filter=" + taps_string(g.taps) + ";psi0=" + labels_string(e.witnesses.begin()->second));
        }
      }
    }
    b.passed = b.violations == 0;
    report.batteries.push_back(std::move(b));
  }

  {
    BatteryResult b;
    b.name = "star-gaussians-converge";
    for (const auto& shape : shapes) {
      const DomainSpec dom = DomainSpec::padded(shape);
      for (double scale : {0.5, 1.0, 2.0}) {
        const auto op = VotingOperator::star(dom, sampled_gaussian(GaussianSpec::with_scale(scale), dom.rank()));
        const auto q = quasi_factorize(op);
        if (!q || !q->b_matrix_is_self_adjoint || !q->b_matrix_is_psd) {
          ++b.violations;
          b.witnesses.push_back("B not symmetric PSD: shape=" + dom.shape_string() + " scale=" + std::to_string(scale));
          continue;
        }
        for (std::size_t s = 0; s < opts.skews_per_filter; ++s) {
          const std::size_t M = s % 2 == 0 || !fits(3, dom.size()) ? 2 : 3;
          const auto e = enumerate_all(AmConfig(op, random_real_skews(dom, M, rng, 0.5)), opts.budget);
          ++b.cases;
          detail::merge(b, e);
          if (!e.only_fixed_points()) {
            ++b.violations;
            b.witnesses.push_back("shape=" + dom.shape_string() + ";psi0=" + labels_string(e.witnesses.begin()->second));
          }
        }
      }
    }
    b.passed = b.violations == 0;
    report.batteries.push_back(std::move(b));
  }

  {
    BatteryResult b;
    b.name = "non-even-long-cycle-search";
    b.asserted = false;
    for (std::size_t i = 0; i < opts.filters; ++i) {
      const DomainSpec dom = DomainSpec::circular(shapes[i % shapes.size()]);
      Filter g = random_integer_filter(dom, rng);
      if (is_even(g)) continue;
      const std::size_t M = i % 2 == 0 || !fits(3, dom.size()) ? 2 : 3;
      const auto e = enumerate_all(AmConfig(VotingOperator::circular(g), zero_skew(dom, M)), opts.budget);
      ++b.cases;
      detail::merge(b, e);
      for (const auto& [k, psi] : e.witnesses)
        if (k >= 3)
          b.witnesses.push_back("K=" + std::to_string(k) + ";shape=" + dom.shape_string() + ";filter=" +
                                taps_string(g.taps) + ";psi0=" + labels_string(psi));
    }
    report.batteries.push_back(std::move(b));
  }
  return report;
}

}  // namespace activemask
