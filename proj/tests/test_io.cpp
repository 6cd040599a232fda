#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "activemask/io.hpp"

using namespace activemask;
using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "activemask-test-io";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t parse_error_offset(const std::string& bytes) {
  try {
    parse_pgm(bytes);
  } catch (const ParseError& e) {
    return e.offset();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Pgm, AsciiTwoByTwo) {
  const auto img = to_image(parse_pgm("P2\n2 2\n255\n0 255\n255 0\n"));
  EXPECT_EQ(img.intensity.values, (std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(img.domain(), DomainSpec::padded({2, 2}));
}

TEST(Pgm, SixteenBitBinary) {
  std::string bytes = "P5 1 1 65535\n";
  bytes += static_cast<char>(0xff);
  bytes += static_cast<char>(0xff);
  EXPECT_EQ(to_image(parse_pgm(bytes)).intensity[0], 1.0);
  std::string mid = "P5\n2 1\n1000\n";
  mid += static_cast<char>(0x01);
  mid += static_cast<char>(0xf4);  // 500, big-endian
  mid += '\0';
  mid += '\0';
  EXPECT_EQ(to_image(parse_pgm(mid)).intensity.values, (std::vector<double>{0.5, 0.0}));
}

TEST(Pgm, CommentsAnywhereInHeader) {
  const auto p = parse_pgm("P2 # magic\n# size next\n3 # w\n1\n# labels 7\n9\n1 2 3");
  EXPECT_EQ(p.width, 3u);
  EXPECT_EQ(p.height, 1u);
  EXPECT_EQ(p.maxval, 9u);
  EXPECT_EQ(p.labels, std::optional<std::size_t>(7));
  EXPECT_EQ(p.samples, (std::vector<std::uint16_t>{1, 2, 3}));
}

TEST(Pgm, TruncatedBinaryPayload) {
  std::string bytes = "P5\n3 2\n255\n";
  bytes += "abcd";
  try {
    parse_pgm(bytes);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 6 bytes, got 4"), std::string::npos) << msg;
    EXPECT_EQ(e.offset(), 11u);
  }
}

TEST(Pgm, MalformedInputsReportOffsets) {
  EXPECT_EQ(parse_error_offset("P6\n1 1\n255\n"), 0u);
  EXPECT_EQ(parse_error_offset(""), 0u);
  EXPECT_EQ(parse_error_offset("P2\nx 1\n255\n"), 3u);
  EXPECT_EQ(parse_error_offset("P2\n1 1\n70000\n0"), 7u);
  EXPECT_EQ(parse_error_offset("P2\n0 1\n255\n"), 3u);
  EXPECT_EQ(parse_error_offset("P2\n2 1\n255\n1 9999"), 13u);
  EXPECT_EQ(parse_error_offset("P2\n2 1\n255\n1"), 12u);
  EXPECT_EQ(parse_error_offset("P2\n2 1"), 6u);
}

TEST(Pgm, EncodeParseRoundTrip) {
  std::mt19937_64 rng(1);
  for (unsigned maxval : {1u, 255u, 256u, 65535u}) {
    PgmImage img;
    img.width = 5;
    img.height = 3;
    img.maxval = maxval;
    for (int i = 0; i < 15; ++i) img.samples.push_back(static_cast<std::uint16_t>(rng() % (maxval + 1)));
    const auto back = parse_pgm(encode_pgm(img));
    EXPECT_EQ(back.samples, img.samples);
    EXPECT_EQ(back.maxval, maxval);
  }
}

TEST(WriteLabels, ConstantFieldAndCsv) {
  const auto path = scratch("const.pgm");
  write_labels(LabelField::constant(DomainSpec::padded({2, 2}), 3, 1), path);
  const auto p = read_pgm(path);
  EXPECT_EQ(p.maxval, 65535u);
  EXPECT_EQ(p.samples, (std::vector<std::uint16_t>{1, 1, 1, 1}));
  EXPECT_EQ(p.labels, std::optional<std::size_t>(3));
  EXPECT_EQ(read_file(csv_sidecar(path)), "row,col,label\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n");
  // Exact byte layout: header then big-endian 16-bit samples.
  const std::string bytes = read_file(path);
  EXPECT_EQ(bytes.substr(0, 28), "P5\n# labels 3\n2 2\n65535\n\0\1\0\1"s.substr(0, 28));
}

TEST(WriteLabels, RoundTripsThroughPgmAndCsv) {
  std::mt19937_64 rng(2);
  for (std::size_t M : {2u, 256u, 65535u}) {
    const auto d = DomainSpec::padded({7, 9});
    const auto psi = random_init(d, M, rng());
    const auto path = scratch("rt" + std::to_string(M) + ".pgm");
    write_labels(psi, path);
    EXPECT_EQ(read_labels_pgm(path), psi);
    EXPECT_EQ(parse_labels_csv(read_file(csv_sidecar(path)), M), psi);
  }
  const auto line = random_init(DomainSpec::padded({6}), 4, 3);
  const auto path = scratch("line.pgm");
  write_labels(line, path);
  EXPECT_EQ(parse_labels_csv(read_file(csv_sidecar(path)), 4), line);
  EXPECT_THROW(write_labels(LabelField::constant(DomainSpec::padded({2, 2, 2}), 2, 1), scratch("cube.pgm")), Unsupported);
}

TEST(WriteLabels, ByteDeterministic) {
  const auto psi = random_init(DomainSpec::padded({16, 16}), 64, 9);
  write_labels(psi, scratch("a.pgm"));
  write_labels(psi, scratch("b.pgm"));
  EXPECT_EQ(read_file(scratch("a.pgm")), read_file(scratch("b.pgm")));
  EXPECT_EQ(read_file(scratch("a.csv")), read_file(scratch("b.csv")));
}

TEST(LabelsCsv, RejectsMalformed) {
  EXPECT_THROW(parse_labels_csv("r,c,l\n", 2), ParseError);
  EXPECT_THROW(parse_labels_csv("row,col,label\n0,0\n", 2), ParseError);
  EXPECT_THROW(parse_labels_csv("row,col,label\n0,0,1\n1,1,1\n", 2), ParseError);
  EXPECT_THROW(parse_labels_csv("row,col,label\n0,0,3\n", 2), InvalidLabel);
}

TEST(RandomInit, Deterministic) {
  const auto d = DomainSpec::padded({8, 8});
  EXPECT_EQ(random_init(d, 5, 42), random_init(d, 5, 42));
  EXPECT_NE(random_init(d, 5, 42), random_init(d, 5, 43));
  EXPECT_EQ(random_init(d, 1, 7), LabelField::constant(d, 1, 1));
  EXPECT_THROW(random_init(d, 0, 1), InvalidArgument);
}

// Label counts on 64x64 with M = 4 stay within 4 binomial standard deviations.
TEST(RandomInit, UniformFrequencies) {
  const auto d = DomainSpec::padded({64, 64});
  const double n = 4096, p = 0.25, sigma = std::sqrt(n * p * (1 - p));
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto psi = random_init(d, 4, seed);
    std::vector<double> count(5, 0.0);
    for (Label l : psi.labels()) count[l] += 1;
    for (std::size_t m = 1; m <= 4; ++m) EXPECT_LE(std::abs(count[m] - n * p), 4 * sigma) << seed << " " << m;
  }
}

TEST(Fixture, BlobsAreReproducibleAndBimodal) {
  const auto a = make_blob_fixture();
  const auto b = make_blob_fixture();
  EXPECT_EQ(a.pgm.samples, b.pgm.samples);
  std::size_t fg = 0;
  for (std::size_t i = 0; i < a.foreground.size(); ++i) {
    if (a.foreground[i]) {
      ++fg;
      EXPECT_GE(a.pgm.samples[i], 180);
    } else {
      EXPECT_LE(a.pgm.samples[i], 60);
    }
  }
  EXPECT_GT(fg, 64u * 64u / 10u);
  EXPECT_LT(fg, 64u * 64u / 2u);
}

TEST(RunConfig, ParsesKeysAndComments) {
  const auto cfg = parse_run_config(
      "# demo\nfixture = blobs64\nlabels=32\nfilter=gaussian\nscale=2.5\nboundary=circular\n"
      "skew=background\ntheta=0.4\nsharpness=0.1\namplitude=2\nseed=99\nmax_iters=50\n"
      "checkpoints=0, 3,9\nruns=4\ndetect=last-two\noutput=out\n");
  EXPECT_EQ(cfg.fixture, "blobs64");
  EXPECT_EQ(cfg.labels, 32u);
  EXPECT_EQ(cfg.scale, 2.5);
  EXPECT_EQ(cfg.boundary, Boundary::Circular);
  EXPECT_EQ(cfg.theta, std::optional<double>(0.4));
  EXPECT_EQ(cfg.sharpness, 0.1);
  EXPECT_EQ(cfg.amplitude, 2.0);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.max_iters, 50u);
  EXPECT_EQ(cfg.checkpoints, (std::vector<std::size_t>{0, 3, 9}));
  EXPECT_EQ(cfg.runs, 4u);
  EXPECT_EQ(cfg.detect, DetectMode::LastTwo);
  EXPECT_EQ(cfg.output, "out");
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, Rejections) {
  EXPECT_THROW(parse_run_config("colour=blue\n"), InvalidArgument);
  EXPECT_THROW(parse_run_config("labels\n"), ParseError);
  EXPECT_THROW(parse_run_config("labels=abc\n"), InvalidArgument);
  EXPECT_THROW(parse_run_config("boundary=mirror\n"), InvalidArgument);
  EXPECT_THROW(parse_run_config("fixture=blobs64\nlabels=70000\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_run_config("labels=4\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_run_config("image=/no/such/file.pgm\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_run_config("fixture=blobs64\nfilter=taps:/no/such\n").validate(), InvalidArgument);
  EXPECT_THROW(parse_run_config("fixture=blobs64\nlabels=1\n").validate(), InvalidArgument);
}

TEST(RunConfig, RelativePathsResolveAgainstConfigDir) {
  const auto cfg = parse_run_config("image=img.pgm\nfilter=taps:k.txt\n", "/data/run");
  EXPECT_EQ(cfg.image, "/data/run/img.pgm");
  EXPECT_EQ(cfg.filter, "taps:/data/run/k.txt");
}

TEST(Taps, ParsesCentredKernels) {
  const auto k1 = parse_taps("1 2 1\n");
  EXPECT_EQ(k1.radii, (std::vector<std::size_t>{1}));
  EXPECT_EQ(k1.weights, (std::vector<double>{1, 2, 1}));
  const auto k2 = parse_taps("# plus\n0 1 0\n1 1 1\n0 1 0\n");
  EXPECT_EQ(k2.radii, (std::vector<std::size_t>{1, 1}));
  EXPECT_THROW(parse_taps("1 2\n"), ParseError);
  EXPECT_THROW(parse_taps("1 2 3\n1 2\n1 2 3\n"), ParseError);
  EXPECT_THROW(parse_taps(""), ParseError);
}
