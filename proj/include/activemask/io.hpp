#pragma once

// File formats and run configuration.
//
// PGM: P2 (ASCII) and P5 (binary) are read, 8- or 16-bit; 16-bit samples are
// big-endian. Label maps are written as P5 with maxval 65535 (always two bytes
// per sample) and a "# labels M" header comment, plus a sidecar CSV:
//
//   row,col,label
//   0,0,1
//   ...
//
// rows in pixel order, labels 1-based. A 1-D label field is written as one row.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "activemask/automaton.hpp"
#include "activemask/detail/random.hpp"
#include "activemask/domain.hpp"
#include "activemask/error.hpp"
#include "activemask/skew.hpp"
#include "activemask/spectral.hpp"

namespace activemask {

struct PgmImage {
  std::size_t width = 0;
  std::size_t height = 0;
  unsigned maxval = 255;
  std::vector<std::uint16_t> samples;  // row-major
  std::optional<std::size_t> labels;   // from a "# labels M" comment
};

namespace detail {

class PgmCursor {
 public:
  explicit PgmCursor(std::string_view bytes) : b_(bytes) {}

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return b_.size() - pos_; }
  std::string_view rest() const { return b_.substr(pos_); }
  void skip(std::size_t n) { pos_ += n; }
  /// Offset where the most recent number() began.
  std::size_t last() const noexcept { return last_; }

  // Skips whitespace and comments, capturing "# labels M".
  void skip_space(std::optional<std::size_t>* labels = nullptr) {
    while (pos_ < b_.size()) {
      const char c = b_[pos_];
      if (c == '#') {
        const std::size_t end = b_.find('\n', pos_);
        const std::string_view line = b_.substr(pos_ + 1, (end == std::string_view::npos ? b_.size() : end) - pos_ - 1);
        if (labels) capture_labels(line, *labels);
        pos_ = end == std::string_view::npos ? b_.size() : end + 1;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::uint64_t number(const char* what, std::optional<std::size_t>* labels = nullptr) {
    skip_space(labels);
    const std::size_t start = pos_;
    last_ = start;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(b_.data() + pos_, b_.data() + b_.size(), v);
    if (ec != std::errc() || p == b_.data() + pos_) {
      if (pos_ >= b_.size()) throw ParseError(std::string("unexpected end of file reading ") + what, start);
      throw ParseError(std::string("expected ") + what, start);
    }
    pos_ = static_cast<std::size_t>(p - b_.data());
    return v;
  }

 private:
  static void capture_labels(std::string_view line, std::optional<std::size_t>& labels) {
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    constexpr std::string_view key = "labels ";
    if (line.substr(0, key.size()) != key) return;
    line.remove_prefix(key.size());
    std::size_t m = 0;
    const auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), m);
    if (ec == std::errc()) labels = m;
  }

  std::string_view b_;
  std::size_t pos_ = 0;
  std::size_t last_ = 0;
};

}  // namespace detail

inline PgmImage parse_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw ParseError("unsupported format: expected P2 or P5 magic", 0);
  const bool binary = bytes[1] == '5';
  detail::PgmCursor cur(bytes);
  cur.skip(2);
  PgmImage img;
  img.width = cur.number("width", &img.labels);
  if (img.width == 0) throw ParseError("image width must be positive", cur.last());
  img.height = cur.number("height", &img.labels);
  if (img.height == 0) throw ParseError("image height must be positive", cur.last());
  const std::uint64_t maxval = cur.number("maxval", &img.labels);
  if (maxval < 1 || maxval > 65535) throw ParseError("maxval must lie in [1, 65535]", cur.last());
  img.maxval = static_cast<unsigned>(maxval);
  const std::size_t count = img.width * img.height;
  img.samples.resize(count);

  if (binary) {
    if (cur.remaining() == 0 || !std::isspace(static_cast<unsigned char>(cur.rest()[0])))
      throw ParseError("expected a single whitespace byte after maxval", cur.pos());
    cur.skip(1);
    const std::size_t bytes_per = img.maxval > 255 ? 2 : 1;
    const std::size_t expected = count * bytes_per;
    if (cur.remaining() < expected)
      throw ParseError("truncated payload: expected " + std::to_string(expected) + " bytes, got " +
                           std::to_string(cur.remaining()),
                       cur.pos());
    const auto* p = reinterpret_cast<const unsigned char*>(cur.rest().data());
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint16_t v = bytes_per == 2 ? static_cast<std::uint16_t>((p[2 * i] << 8) | p[2 * i + 1]) : p[i];
      if (v > img.maxval) throw ParseError("sample exceeds maxval", cur.pos() + i * bytes_per);
      img.samples[i] = v;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint64_t v;
      try {
        v = cur.number("sample");
      } catch (const ParseError& e) {
        if (cur.remaining() > 0) throw;
        throw ParseError("truncated payload: expected " + std::to_string(count) + " samples, got " + std::to_string(i),
                         e.offset());
      }
      if (v > img.maxval) throw ParseError("sample exceeds maxval", cur.last());
      img.samples[i] = static_cast<std::uint16_t>(v);
    }
  }
  return img;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

inline PgmImage read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

/// Intensities scaled to [0, 1] by maxval; dims are {height, width}.
inline ImageField to_image(const PgmImage& pgm, Boundary boundary = Boundary::ZeroPadded) {
  DomainSpec dom({pgm.height, pgm.width}, boundary);
  RealField f = RealField::zeros(dom);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(pgm.samples[i]) / pgm.maxval;
  return ImageField(std::move(f));
}

inline ImageField read_image(const std::filesystem::path& path, Boundary boundary = Boundary::ZeroPadded) {
  return to_image(read_pgm(path), boundary);
}

inline std::string encode_pgm(const PgmImage& img) {
  std::string out = "P5\n";
  if (img.labels) out += "# labels " + std::to_string(*img.labels) + "\n";
  out += std::to_string(img.width) + " " + std::to_string(img.height) + "\n" + std::to_string(img.maxval) + "\n";
  const bool wide = img.maxval > 255;
  for (std::uint16_t v : img.samples) {
    if (wide) out += static_cast<char>(v >> 8);
    out += static_cast<char>(v & 0xff);
  }
  return out;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> plane_shape(const DomainSpec& dom) {
  if (dom.rank() == 1) return {1, dom.dim(0)};
  if (dom.rank() == 2) return {dom.dim(0), dom.dim(1)};
  throw Unsupported("label maps can only be written for 1-D or 2-D domains");
}

}  // namespace detail

inline std::filesystem::path csv_sidecar(const std::filesystem::path& pgm_path) {
  std::filesystem::path p = pgm_path;
  return p.replace_extension(".csv");
}

inline std::string labels_csv(const LabelField& psi) {
  const auto [rows, cols] = detail::plane_shape(psi.domain());
  std::string out = "row,col,label\n";
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(psi[r * cols + c]) + "\n";
  return out;
}

/// 16-bit P5 label map at `path` plus the CSV sidecar next to it.
inline void write_labels(const LabelField& psi, const std::filesystem::path& path) {
  const auto [rows, cols] = detail::plane_shape(psi.domain());
  PgmImage img;
  img.width = cols;
  img.height = rows;
  img.maxval = 65535;
  img.labels = psi.num_labels();
  img.samples.assign(psi.labels().begin(), psi.labels().end());
  write_file(path, encode_pgm(img));
  write_file(csv_sidecar(path), labels_csv(psi));
}

inline LabelField read_labels_pgm(const std::filesystem::path& path, Boundary boundary = Boundary::ZeroPadded) {
  const PgmImage img = read_pgm(path);
  std::size_t m = img.labels.value_or(0);
  if (m == 0)
    for (std::uint16_t v : img.samples) m = std::max<std::size_t>(m, v);
  return LabelField(DomainSpec({img.height, img.width}, boundary), m,
                    std::vector<Label>(img.samples.begin(), img.samples.end()));
}

/// Parses the row,col,label CSV. Dims come from the largest row/col seen.
inline LabelField parse_labels_csv(std::string_view text, std::size_t num_labels, Boundary boundary = Boundary::ZeroPadded) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "row,col,label") throw ParseError("missing row,col,label header", 0);
  std::size_t offset = line.size() + 1;
  std::vector<std::array<std::size_t, 3>> rows;
  std::size_t max_r = 0, max_c = 0;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    std::array<std::size_t, 3> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < 3; ++k) {
      const auto [q, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc()) throw ParseError("malformed CSV line '" + line + "'", offset);
      p = q;
      if (k < 2) {
        if (p == end || *p != ',') throw ParseError("malformed CSV line '" + line + "'", offset);
        ++p;
      }
    }
    if (p != end) throw ParseError("trailing characters in CSV line '" + line + "'", offset);
    max_r = std::max(max_r, v[0]);
    max_c = std::max(max_c, v[1]);
    rows.push_back(v);
    offset += line.size() + 1;
  }
  const std::size_t h = max_r + 1, w = max_c + 1;
  if (rows.size() != h * w) throw ParseError("CSV does not cover a full grid", offset);
  std::vector<Label> labels(h * w, 0);
  for (const auto& v : rows) labels[v[0] * w + v[1]] = static_cast<Label>(v[2]);
  DomainSpec dom = h == 1 ? DomainSpec({w}, boundary) : DomainSpec({h, w}, boundary);
  return LabelField(dom, num_labels, std::move(labels));
}

/// Uniform i.i.d. labels from mt19937_64(seed), by rejection sampling.
inline LabelField random_init(const DomainSpec& domain, std::size_t num_labels, std::uint64_t seed) {
  if (num_labels < 1 || num_labels > kMaxLabels) throw InvalidArgument("label count must lie in [1, 65535]");
  detail::Rng rng(seed);
  std::vector<Label> labels(domain.size());
  for (auto& l : labels) l = static_cast<Label>(1 + detail::uniform_below(rng, num_labels));
  return LabelField(domain, num_labels, std::move(labels));
}

/// Synthetic stand-in for a fluorescence micrograph: bright disks on a dark,
/// slightly noisy background, quantized to 8 bits.
struct BlobFixture {
  PgmImage pgm;
  std::vector<bool> foreground;  // inside some disk
};

inline BlobFixture make_blob_fixture(std::size_t height = 64, std::size_t width = 64, std::uint64_t seed = 7,
                                     std::size_t disks = 5) {
  detail::Rng rng(seed);
  struct Disk {
    double r, c, radius;
  };
  std::vector<Disk> placed;
  const double min_r = std::max(2.0, static_cast<double>(std::min(height, width)) / 10.0);
  const double max_r = std::max(min_r, static_cast<double>(std::min(height, width)) / 6.0);
  for (std::size_t attempt = 0; placed.size() < disks && attempt < 1000; ++attempt) {
    const double radius = detail::uniform_real(rng, min_r, max_r);
    const double r = detail::uniform_real(rng, radius + 2, static_cast<double>(height) - radius - 2);
    const double c = detail::uniform_real(rng, radius + 2, static_cast<double>(width) - radius - 2);
    bool clear = true;
    for (const auto& d : placed)
      if (std::hypot(d.r - r, d.c - c) < d.radius + radius + 3.0) clear = false;
    if (clear) placed.push_back({r, c, radius});
  }
  BlobFixture fx;
  fx.pgm.width = width;
  fx.pgm.height = height;
  fx.pgm.maxval = 255;
  fx.pgm.samples.resize(width * height);
  fx.foreground.assign(width * height, false);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      bool inside = false;
      for (const auto& d : placed)
        if (std::hypot(static_cast<double>(y) - d.r, static_cast<double>(x) - d.c) <= d.radius) inside = true;
      const double base = inside ? 200.0 : 40.0;
      const double v = base + static_cast<double>(detail::uniform_int(rng, -20, 20));
      fx.pgm.samples[y * width + x] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 255.0));
      fx.foreground[y * width + x] = inside;
    }
  return fx;
}

/// Flat key=value run configuration; '#' starts a comment line.
///
///   image=<pgm path> | fixture=blobs64
///   labels=<M>                      filter=dirac|box|plus|gaussian|taps:<path>
///   scale=<gaussian scale>          boundary=circular|padded
///   skew=zero|background            theta=auto|<value>
///   sharpness=<s>                   amplitude=<a>
///   seed=<u64>                      max_iters=<n>
///   output=<dir>                    checkpoints=0,2,8,14
///   runs=<R>                        detect=full|last-two
struct RunConfig {
  std::string image;
  std::string fixture;
  std::size_t labels = 64;
  std::string filter = "gaussian";
  double scale = 4.0;
  Boundary boundary = Boundary::ZeroPadded;
  std::string skew = "background";
  std::optional<double> theta;  // nullopt: Otsu
  double sharpness = 0.05;
  double amplitude = 1.0;
  std::uint64_t seed = 1;
  std::size_t max_iters = 0;  // 0: 10 N M
  std::string output;
  std::vector<std::size_t> checkpoints{0, 2, 8, 14};
  std::size_t runs = 5;
  DetectMode detect = DetectMode::FullHistory;

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw InvalidArgument("invalid value '" + value + "' for " + key);
  return v;
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("invalid value '" + value + "' for " + key);
  }
}

}  // namespace detail

inline Boundary parse_boundary(const std::string& s) {
  if (s == "circular") return Boundary::Circular;
  if (s == "padded") return Boundary::ZeroPadded;
  throw InvalidArgument("boundary must be circular or padded, got '" + s + "'");
}

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::parse_number;
  if (key == "image") image = value;
  else if (key == "fixture") fixture = value;
  else if (key == "labels") labels = parse_number<std::size_t>(key, value);
  else if (key == "filter") filter = value;
  else if (key == "scale") scale = detail::parse_real(key, value);
  else if (key == "boundary") boundary = parse_boundary(value);
  else if (key == "skew") skew = value;
  else if (key == "theta") theta = value == "auto" ? std::nullopt : std::optional<double>(detail::parse_real(key, value));
  else if (key == "sharpness") sharpness = detail::parse_real(key, value);
  else if (key == "amplitude") amplitude = detail::parse_real(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "max_iters") max_iters = parse_number<std::size_t>(key, value);
  else if (key == "output") output = value;
  else if (key == "runs") runs = parse_number<std::size_t>(key, value);
  else if (key == "detect") {
    if (value == "full") detect = DetectMode::FullHistory;
    else if (value == "last-two") detect = DetectMode::LastTwo;
    else throw InvalidArgument("detect must be full or last-two");
  } else if (key == "checkpoints") {
    checkpoints.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!detail::trim(item).empty()) checkpoints.push_back(parse_number<std::size_t>(key, detail::trim(item)));
  } else {
    throw InvalidArgument("unknown configuration key '" + key + "'");
  }
}

inline void RunConfig::validate() const {
  if (labels < 1 || labels > kMaxLabels) throw InvalidArgument("labels must lie in [1, 65535]");
  if (image.empty() == fixture.empty()) throw InvalidArgument("exactly one of image= or fixture= is required");
  if (!fixture.empty() && fixture != "blobs64") throw InvalidArgument("unknown fixture '" + fixture + "'");
  if (!image.empty() && !std::filesystem::exists(image)) throw InvalidArgument("image not found: " + image);
  if (filter.rfind("taps:", 0) == 0 && !std::filesystem::exists(filter.substr(5)))
    throw InvalidArgument("taps file not found: " + filter.substr(5));
  if (skew != "zero" && skew != "background") throw InvalidArgument("skew must be zero or background");
  if (skew == "background" && labels < 2) throw InvalidArgument("background skew needs labels >= 2");
  if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
  if (!(sharpness > 0.0) || !(amplitude > 0.0)) throw InvalidArgument("sharpness and amplitude must be positive");
  if (runs < 1) throw InvalidArgument("runs must be at least 1");
}

/// Parses key=value text. Relative image/taps paths are resolved against `base_dir`.
inline RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (!t.empty() && t[0] != '#') {
      const auto eq = t.find('=');
      if (eq == std::string::npos) throw ParseError("expected key=value, got '" + t + "'", offset);
      cfg.set(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    offset += line.size() + 1;
  }
  auto resolve = [&](std::string& p) {
    if (!p.empty() && !base_dir.empty() && std::filesystem::path(p).is_relative()) p = (base_dir / p).string();
  };
  resolve(cfg.image);
  if (cfg.filter.rfind("taps:", 0) == 0) {
    std::string p = cfg.filter.substr(5);
    resolve(p);
    cfg.filter = "taps:" + p;
  }
  return cfg;
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file(path), path.parent_path());
}

/// Whitespace-separated rows of numbers, odd width and height, centred on the
/// middle entry. A single row gives a 1-D kernel.
inline Kernel parse_taps(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::istringstream ls(t);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) row.push_back(detail::parse_real("taps", tok));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("taps file is empty", 0);
  const std::size_t w = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != w) throw ParseError("taps rows differ in length", 0);
  if (w % 2 == 0 || rows.size() % 2 == 0) throw ParseError("taps must have odd width and height", 0);
  std::vector<double> weights;
  for (const auto& r : rows) weights.insert(weights.end(), r.begin(), r.end());
  if (rows.size() == 1) return Kernel({w / 2}, std::move(weights));
  return Kernel({rows.size() / 2, w / 2}, std::move(weights));
}

}  // namespace activemask
