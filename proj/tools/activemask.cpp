// activemask: command-line front end.
//
//   activemask segment <config> [--seed S] [--max-iters N] [--scale s] [--labels M] [--boundary circular|padded]
//   activemask bench <config> --runs R [same overrides]
//   activemask analyze-filter <filter> --domain 4x4 [--scale s]
//   activemask enumerate <filter> --domain 4x4 --labels M [--boundary ...] [--budget B]
//   activemask verify [--seed S] [--budget B] [--filters F]
//   activemask fixture <out.pgm>
//
// Exit codes: 0 success; analyze-filter returns 0/1/2 for the guarantee tiers
// always-converges / 1-or-2-cycle / no-guarantee; verify returns 1 when an
// asserted battery fails; 64 for usage and configuration errors.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "activemask/activemask.hpp"

namespace am = activemask;
namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 64;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_iters;
  std::optional<double> scale;
  std::optional<std::size_t> labels;
  std::optional<std::string> boundary;
  std::optional<std::string> output;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Seed for the initial labels");
    cmd->add_option("--max-iters", max_iters, "Iteration cap (0: 10 N M)");
    cmd->add_option("--scale", scale, "Gaussian scale for filter and local average");
    cmd->add_option("--labels", labels, "Number of labels M");
    cmd->add_option("--boundary", boundary, "circular or padded")->check(CLI::IsMember({"circular", "padded"}));
    cmd->add_option("--output", output, "Output directory (default $ACTIVEMASK_OUTPUT_DIR or ./activemask-out)");
  }

  void apply(am::RunConfig& cfg) const {
    if (seed) cfg.seed = *seed;
    if (max_iters) cfg.max_iters = *max_iters;
    if (scale) cfg.scale = *scale;
    if (labels) cfg.labels = *labels;
    if (boundary) cfg.boundary = am::parse_boundary(*boundary);
    if (output) cfg.output = *output;
  }
};

am::RunConfig load_config(const std::string& path, const Overrides& o) {
  am::RunConfig cfg = am::read_run_config(path);
  o.apply(cfg);
  cfg.validate();
  return cfg;
}

void print_report(const am::CycleReport& r) {
  std::printf("iterations_run=%zu transient=%zu cycle_length=%zu converged=%s\n", r.iterations_run, r.transient,
              r.cycle_length, r.converged ? "true" : "false");
}

int cmd_segment(const std::string& config, const Overrides& o) {
  const am::RunConfig cfg = load_config(config, o);
  const am::Pipeline p = am::build_pipeline(cfg);
  const fs::path out = am::output_dir(cfg);
  const auto res = am::segment(p, cfg.seed, out, cfg.checkpoints);
  std::printf("image=%s theta=%.6f labels=%zu\n", p.image.domain().shape_string().c_str(), p.theta, cfg.labels);
  print_report(res.report);
  std::printf("output=%s\n", out.string().c_str());
  return 0;
}

int cmd_bench(const std::string& config, const Overrides& o, std::optional<std::size_t> runs) {
  am::RunConfig cfg = load_config(config, o);
  if (runs) cfg.runs = *runs;
  if (cfg.runs < 1) throw am::InvalidArgument("--runs must be at least 1");
  const am::Pipeline p = am::build_pipeline(cfg);
  const fs::path out = am::output_dir(cfg);
  fs::create_directories(out);
  std::string table = "run,seed,iterations_run,transient,cycle_length,converged,final_boundary_crossings\n";
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = am::bench_seed(cfg.seed, r);
    const auto res = am::segment(p, seed, std::nullopt, {});
    const fs::path dir = out / ("run_" + std::to_string(r));
    fs::create_directories(dir);
    const auto log = am::TrajectoryLog::from(res.report);
    am::write_file(dir / "trajectory.csv", log.csv());
    am::write_file(dir / "summary.txt", log.summary());
    table += std::to_string(r) + "," + std::to_string(seed) + "," + std::to_string(log.iterations_run) + "," +
             std::to_string(log.transient) + "," + std::to_string(log.cycle_length) + "," +
             (log.converged ? "true" : "false") + "," + std::to_string(log.records.back().boundary_crossings) + "\n";
    std::printf("run %zu seed=%llu ", r, static_cast<unsigned long long>(seed));
    print_report(res.report);
  }
  am::write_file(out / "bench_summary.csv", table);
  std::printf("output=%s\n", out.string().c_str());
  return 0;
}

int cmd_analyze(const std::string& spec, const std::string& domain, double scale) {
  const am::DomainSpec dom = am::DomainSpec::circular(am::parse_shape(domain));
  const am::Filter g = am::filter_for(am::parse_filter_spec(spec, scale), dom);
  const am::SpectrumReport r = am::analyze_filter(g);
  std::printf("domain=%s\n", dom.shape_string().c_str());
  std::printf("taps=%s\n", am::taps_string(g.taps).c_str());
  std::printf("spectrum=");
  for (std::size_t i = 0; i < r.spectrum.size(); ++i) std::printf("%s%.12g", i ? "," : "", r.spectrum[i]);
  std::printf("\nmax_imag=%.3g\nis_even=%s\nmin_spectrum=%.12g\nis_nonnegative=%s\nis_diag_dominant=%s\ntol=%g\n",
              r.max_imag, r.is_even ? "true" : "false", r.min_spectrum, r.is_nonnegative ? "true" : "false",
              r.is_diag_dominant ? "true" : "false", r.tol);
  std::printf("tier=%s\n", am::to_string(r.tier));
  switch (r.tier) {
    case am::GuaranteeTier::AlwaysConverges: return 0;
    case am::GuaranteeTier::OneOrTwoCycle: return 1;
    case am::GuaranteeTier::NoGuarantee: return 2;
  }
  return 2;
}

int cmd_enumerate(const std::string& spec, const std::string& domain, std::size_t labels, const std::string& boundary,
                  double scale, std::uint64_t budget) {
  const am::DomainSpec dom(am::parse_shape(domain), am::parse_boundary(boundary));
  const am::VotingOperator op = am::operator_for(am::parse_filter_spec(spec, scale), dom);
  const am::AmConfig cfg(op, am::zero_skew(dom, labels));
  const auto r = am::enumerate_all(cfg, budget);
  std::printf("domain=%s boundary=%s labels=%zu states=%llu max_transient=%zu\n", dom.shape_string().c_str(),
              am::to_string(dom.boundary()), labels, static_cast<unsigned long long>(r.states_enumerated),
              r.max_transient);
  for (const auto& [k, c] : r.cycle_length_histogram) std::printf("K=%zu: %llu\n", k, static_cast<unsigned long long>(c));
  for (const auto& [k, w] : r.witnesses) std::printf("witness K=%zu: %s\n", k, am::labels_string(w).c_str());
  return 0;
}

int cmd_verify(const am::SuiteOptions& opts) {
  const auto r = am::theorem_suite(opts);
  std::fputs(r.to_key_value().c_str(), stdout);
  return r.passed() ? 0 : 1;
}

int cmd_fixture(const std::string& path, std::uint64_t seed) {
  const auto fx = am::make_blob_fixture(64, 64, seed);
  am::write_file(path, am::encode_pgm(fx.pgm));
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-Mask segmentation and convergence analysis"};
  app.require_subcommand(1);

  Overrides seg_o, bench_o;
  std::string seg_cfg, bench_cfg;
  std::optional<std::size_t> runs;
  auto* seg = app.add_subcommand("segment", "Segment an image described by a key=value config");
  seg->add_option("config", seg_cfg, "Run configuration file")->required();
  seg_o.add_to(seg);

  auto* bench = app.add_subcommand("bench", "Independently seeded runs, one trajectory log each");
  bench->add_option("config", bench_cfg, "Run configuration file")->required();
  bench->add_option("--runs", runs, "Number of runs (seeds seed, seed+1, ...)");
  bench_o.add_to(bench);

  std::string filter, domain = "8", boundary = "circular";
  double scale = 1.0;
  std::size_t labels = 2;
  std::uint64_t budget = am::kDefaultEnumerationBudget;
  auto* analyze = app.add_subcommand("analyze-filter", "Spectrum and convergence guarantee of a circular filter");
  analyze->add_option("filter", filter, "dirac | box | box3 | box3x3 | plus | gaussian[:scale] | taps:<file>")->required();
  analyze->add_option("--domain", domain, "Domain shape, e.g. 4 or 4x4");
  analyze->add_option("--scale", scale, "Gaussian scale");

  std::string enum_filter, enum_domain = "4";
  auto* enumerate = app.add_subcommand("enumerate", "Run the dynamics from every initial state");
  enumerate->add_option("filter", enum_filter, "Filter spec, as for analyze-filter")->required();
  enumerate->add_option("--domain", enum_domain, "Domain shape, e.g. 4x4");
  enumerate->add_option("--labels", labels, "Number of labels M");
  enumerate->add_option("--boundary", boundary, "circular or padded")->check(CLI::IsMember({"circular", "padded"}));
  enumerate->add_option("--scale", scale, "Gaussian scale");
  enumerate->add_option("--budget", budget, "Largest M^N allowed");

  am::SuiteOptions suite;
  auto* verify = app.add_subcommand("verify", "Run the theorem batteries; nonzero exit on failure");
  verify->add_option("--seed", suite.seed, "Corpus seed");
  verify->add_option("--budget", suite.budget, "States per enumeration");
  verify->add_option("--filters", suite.filters, "Random filters per battery");
  verify->add_option("--skews", suite.skews_per_filter, "Skew stacks per filter");

  std::string fixture_path;
  std::uint64_t fixture_seed = 7;
  auto* fixture = app.add_subcommand("fixture", "Write the synthetic 64x64 blob image");
  fixture->add_option("output", fixture_path, "Output PGM path")->required();
  fixture->add_option("--seed", fixture_seed, "Fixture seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*seg) return cmd_segment(seg_cfg, seg_o);
    if (*bench) return cmd_bench(bench_cfg, bench_o, runs);
    if (*analyze) return cmd_analyze(filter, domain, scale);
    if (*enumerate) return cmd_enumerate(enum_filter, enum_domain, labels, boundary, scale, budget);
    if (*verify) return cmd_verify(suite);
    if (*fixture) return cmd_fixture(fixture_path, fixture_seed);
  } catch (const am::InvalidArgument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageError;
  } catch (const am::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsageError;
  } catch (const am::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 70;
  }
  return kUsageError;
}
