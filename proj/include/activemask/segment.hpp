#pragma once

// End-to-end runs driven by a RunConfig: filter and operator specs, the
// segmentation pipeline, checkpoints and trajectory logs.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "activemask/automaton.hpp"
#include "activemask/domain.hpp"
#include "activemask/error.hpp"
#include "activemask/io.hpp"
#include "activemask/operators.hpp"
#include "activemask/skew.hpp"
#include "activemask/spectral.hpp"

namespace activemask {

/// "4", "4x4", "2x3x5".
inline std::vector<std::size_t> parse_shape(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, 'x')) dims.push_back(detail::parse_number<std::size_t>("domain", part));
  if (dims.empty()) throw InvalidArgument("empty domain shape");
  for (auto d : dims)
    if (d == 0) throw InvalidArgument("domain extents must be positive: '" + text + "'");
  return dims;
}

/// Filter spec: dirac | box | box3 | box3x3 | plus | gaussian[:scale] | taps:<path>.
/// `scale` is the Gaussian scale used when the spec has none.
struct FilterSpec {
  std::string kind;
  double scale = 4.0;
  std::filesystem::path taps;
};

inline FilterSpec parse_filter_spec(const std::string& text, double default_scale = 4.0) {
  FilterSpec f;
  f.scale = default_scale;
  if (text.rfind("taps:", 0) == 0) {
    f.kind = "taps";
    f.taps = text.substr(5);
    return f;
  }
  if (text.rfind("gaussian", 0) == 0) {
    f.kind = "gaussian";
    if (text.size() > 8) {
      if (text[8] != ':') throw InvalidArgument("unknown filter '" + text + "'");
      f.scale = detail::parse_real("gaussian scale", text.substr(9));
    }
    if (!(f.scale > 0.0)) throw InvalidArgument("gaussian scale must be positive");
    return f;
  }
  if (text == "box3" || text == "box3x3" || text == "box3x3x3") {
    f.kind = "box";
    return f;
  }
  if (text == "dirac" || text == "box" || text == "plus") {
    f.kind = text;
    return f;
  }
  throw InvalidArgument("unknown filter '" + text + "'");
}

/// Unnormalized kernel for a spec; Gaussians get unit peak.
inline Kernel kernel_for(const FilterSpec& spec, std::size_t rank) {
  if (spec.kind == "dirac") return dirac_kernel(rank);
  if (spec.kind == "box") return box_kernel(rank);
  if (spec.kind == "plus") return plus_kernel(rank);
  if (spec.kind == "gaussian") return sampled_gaussian(GaussianSpec::with_scale(spec.scale), rank);
  if (spec.kind == "taps") {
    Kernel k = parse_taps(read_file(spec.taps));
    if (k.radii.size() != rank)
      throw DomainMismatch("taps file is " + std::to_string(k.radii.size()) + "-D, domain is " + std::to_string(rank) +
                           "-D");
    return k;
  }
  throw InvalidArgument("unknown filter kind '" + spec.kind + "'");
}

/// Circular filter on `domain`. Gaussians are periodized and scaled to unit sum.
inline Filter filter_for(const FilterSpec& spec, const DomainSpec& domain) {
  if (spec.kind == "gaussian") return normalized(periodized_gaussian(domain, GaussianSpec::with_scale(spec.scale)));
  return filter_from_kernel(domain, kernel_for(spec, domain.rank()));
}

/// Circular filter operator, or the boundary-normalized star on padded domains.
inline VotingOperator operator_for(const FilterSpec& spec, const DomainSpec& domain) {
  if (domain.is_circular()) return VotingOperator::circular(filter_for(spec, domain));
  return VotingOperator::star(domain, kernel_for(spec, domain.rank()));
}

inline ImageField load_image(const RunConfig& cfg) {
  if (!cfg.fixture.empty()) {
    if (cfg.fixture != "blobs64") throw InvalidArgument("unknown fixture '" + cfg.fixture + "'");
    return to_image(make_blob_fixture().pgm, cfg.boundary);
  }
  return read_image(cfg.image, cfg.boundary);
}

struct Pipeline {
  ImageField image;
  double theta = 0.5;  // soft-threshold centre actually used
  AmConfig config;
};

inline Pipeline build_pipeline(const RunConfig& cfg) {
  cfg.validate();
  ImageField img = load_image(cfg);
  const FilterSpec fspec = parse_filter_spec(cfg.filter, cfg.scale);
  VotingOperator op = operator_for(fspec, img.domain());
  double theta = cfg.theta.value_or(0.5);
  SkewStack skews;
  if (cfg.skew == "zero") {
    skews = zero_skew(img.domain(), cfg.labels);
  } else {
    if (!cfg.theta) theta = otsu_threshold(img);
    SoftThresholdSpec st;
    st.window = GaussianSpec::with_scale(cfg.scale);
    st.threshold = theta;
    st.sharpness = cfg.sharpness;
    st.amplitude = cfg.amplitude;
    skews = background_skew(img, st, cfg.labels);
  }
  AmConfig am(std::move(op), std::move(skews), cfg.max_iters, cfg.detect);
  return {std::move(img), theta, std::move(am)};
}

/// Default output directory: $ACTIVEMASK_OUTPUT_DIR, else ./activemask-out.
inline std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("ACTIVEMASK_OUTPUT_DIR"); env && *env) return env;
  return "activemask-out";
}

inline std::filesystem::path output_dir(const RunConfig& cfg) {
  return cfg.output.empty() ? default_output_dir() : std::filesystem::path(cfg.output);
}

struct TrajectoryLog {
  std::vector<IterationMetrics> records;
  std::size_t transient = 0;
  std::size_t cycle_length = 0;
  bool converged = false;
  std::size_t iterations_run = 0;

  static TrajectoryLog from(const CycleReport& r) {
    return {r.metrics, r.transient, r.cycle_length, r.converged, r.iterations_run};
  }

  std::string csv() const {
    std::string out = "iteration,boundary_crossings,pixels_changed,nonempty_masks\n";
    for (const auto& m : records)
      out += std::to_string(m.iteration) + "," + std::to_string(m.boundary_crossings) + "," +
             std::to_string(m.pixels_changed) + "," + std::to_string(m.nonempty_masks) + "\n";
    return out;
  }

  std::string summary() const {
    return "iterations_run=" + std::to_string(iterations_run) + "\ntransient=" + std::to_string(transient) +
           "\ncycle_length=" + std::to_string(cycle_length) + "\nconverged=" + (converged ? "true" : "false") + "\n";
  }
};

inline std::string checkpoint_name(std::size_t i) {
  std::string s = std::to_string(i);
  return "labels_iter" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s + ".pgm";
}

struct SegmentResult {
  CycleReport report;
  double theta = 0.0;
};

/// One seeded run. With `out` set, writes checkpoint label maps, the final map,
/// trajectory.csv and summary.txt into it.
inline SegmentResult segment(const Pipeline& p, std::uint64_t seed, const std::optional<std::filesystem::path>& out,
                             const std::vector<std::size_t>& checkpoints) {
  const LabelField psi0 = random_init(p.image.domain(), p.config.num_labels(), seed);
  if (out) std::filesystem::create_directories(*out);
  StateObserver obs;
  if (out)
    obs = [&](std::size_t i, const LabelField& psi) {
      for (auto c : checkpoints)
        if (c == i) write_labels(psi, *out / checkpoint_name(i));
    };
  SegmentResult res{run(psi0, p.config, obs), p.theta};
  if (out) {
    write_labels(res.report.final_state(), *out / "labels_final.pgm");
    const TrajectoryLog log = TrajectoryLog::from(res.report);
    write_file(*out / "trajectory.csv", log.csv());
    write_file(*out / "summary.txt", log.summary());
  }
  return res;
}

/// Seed of the r-th bench run.
inline std::uint64_t bench_seed(std::uint64_t base, std::size_t r) { return base + r; }

}  // namespace activemask
