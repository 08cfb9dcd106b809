#include "relaxmap/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "relaxmap/error.hpp"

namespace relaxmap {

namespace {

auto open_out(fs::path const &path) -> std::ofstream
{
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) { throw IoError("cannot open '" + path.string() + "' for writing"); }
  return out;
}

auto open_in(fs::path const &path) -> std::ifstream
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw IoError("cannot open '" + path.string() + "' for reading"); }
  return in;
}

void finish_write(std::ofstream &out, fs::path const &path)
{
  out.flush();
  if (!out) { throw IoError("write to '" + path.string() + "' failed"); }
}

template <typename U>
void put_le(std::string &buf, U bits)
{
  for (std::size_t b = 0; b < sizeof(U); ++b) { buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xffU)); }
}

template <typename U>
auto get_le(char const *p) -> U
{
  U v = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) { v |= static_cast<U>(static_cast<unsigned char>(p[b])) << (8 * b); }
  return v;
}

// Reads "key value..." header lines up to "end". The first line is the magic.
struct Header {
  std::string magic;
  std::vector<std::pair<std::string, std::string>> lines;

  [[nodiscard]] auto get(std::string const &key, fs::path const &path) const -> std::string
  {
    for (auto const &[k, v] : lines) {
      if (k == key) { return v; }
    }
    throw IoError("'" + path.string() + "': header is missing '" + key + "'");
  }
  [[nodiscard]] auto all(std::string const &key) const -> std::vector<std::string>
  {
    std::vector<std::string> out;
    for (auto const &[k, v] : lines) {
      if (k == key) { out.push_back(v); }
    }
    return out;
  }
};

auto read_header(std::istream &in, fs::path const &path, std::string const &magic) -> Header
{
  Header h;
  if (!std::getline(in, h.magic) || h.magic != magic) {
    throw IoError("'" + path.string() + "' is not a " + magic + " file");
  }
  std::string line;
  for (int n = 0; n < 100000; ++n) {
    if (!std::getline(in, line)) { throw IoError("'" + path.string() + "': header ends before 'end'"); }
    if (line == "end") { return h; }
    auto const sp = line.find(' ');
    if (sp == std::string::npos) { throw IoError("'" + path.string() + "': malformed header line '" + line + "'"); }
    h.lines.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  throw IoError("'" + path.string() + "': header too long");
}

void check_version(Header const &h, fs::path const &path, int expected)
{
  auto const v = h.get("version", path);
  if (v != std::to_string(expected)) {
    throw IoError("'" + path.string() + "': unsupported version " + v + " (expected " + std::to_string(expected) +
                  ")");
  }
}

auto to_index(std::string const &s, fs::path const &path, std::string const &what) -> Index
{
  try {
    std::size_t used = 0;
    long long const v = std::stoll(s, &used);
    if (used != s.size() || v < 0) { throw std::invalid_argument(s); }
    return static_cast<Index>(v);
  } catch (std::exception const &) {
    throw IoError("'" + path.string() + "': bad " + what + " '" + s + "'");
  }
}

auto to_double(std::string const &s, fs::path const &path, std::string const &what) -> double
{
  try {
    std::size_t used = 0;
    double const v = std::stod(s, &used);
    if (used != s.size()) { throw std::invalid_argument(s); }
    return v;
  } catch (std::exception const &) {
    throw IoError("'" + path.string() + "': bad " + what + " '" + s + "'");
  }
}

auto read_payload(std::istream &in, fs::path const &path, std::size_t bytes) -> std::string
{
  std::string buf(bytes, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw IoError(fmt::format("'{}': truncated payload ({} of {} bytes)", path.string(), in.gcount(), bytes));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError("'" + path.string() + "': trailing bytes after the payload");
  }
  return buf;
}

auto planes_payload(std::vector<ComplexImage> const &planes) -> std::string
{
  std::string buf;
  std::size_t total = 0;
  for (auto const &p : planes) { total += static_cast<std::size_t>(p.size()); }
  buf.reserve(total * 8);
  for (auto const &p : planes) {
    for (auto const &v : p) {
      put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v.real())));
      put_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v.imag())));
    }
  }
  return buf;
}

auto parse_planes(std::string const &buf, Index count, Index rows, Index cols) -> std::vector<ComplexImage>
{
  std::vector<ComplexImage> planes;
  char const *p = buf.data();
  for (Index k = 0; k < count; ++k) {
    ComplexImage img(rows, cols);
    for (auto &v : img) {
      float const re = std::bit_cast<float>(get_le<std::uint32_t>(p));
      float const im = std::bit_cast<float>(get_le<std::uint32_t>(p + 4));
      v = Complex(re, im);
      p += 8;
    }
    planes.push_back(std::move(img));
  }
  return planes;
}

auto plane_bytes(Index rows, Index cols, Index count) -> std::size_t
{
  return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * static_cast<std::size_t>(count) * 8;
}

auto fmt_double(double v) -> std::string { return fmt::format("{:.17g}", v); }

} // namespace

void save_kspace(fs::path const &path, KSpaceData const &data)
{
  data.validate();
  std::vector<std::string> refs;
  std::vector<SamplingPattern const *> written;
  std::string const stem = path.stem().string();
  for (Index i = 0; i < data.echoes; ++i) {
    auto const &pat = data.patterns[i];
    std::size_t k = 0;
    while (k < written.size() && !(*written[k] == pat)) { ++k; }
    auto const name = fmt::format("{}.p{}.pat", stem, k);
    if (k == written.size()) {
      save_pattern(path.parent_path() / name, pat);
      written.push_back(&pat);
    }
    refs.push_back(name);
  }

  std::string head = "RELAXMAP-KSPACE\n";
  head += fmt::format("version {}\nrows {}\ncols {}\nechoes {}\ncoils {}\n", kKSpaceVersion, data.rows(), data.cols(),
                      data.echoes, data.coils);
  head += "times";
  for (double t : data.times.values()) { head += " " + fmt_double(t); }
  head += "\n";
  head += fmt::format("scheme {}\n", data.patterns.scheme == PatternScheme::fixed ? "fixed" : "complementary");
  for (std::size_t i = 0; i < refs.size(); ++i) { head += fmt::format("pattern {} {}\n", i, refs[i]); }
  head += "endianness little\npayload float32\nend\n";

  auto out = open_out(path);
  out << head << planes_payload(data.planes);
  finish_write(out, path);
}

auto load_kspace(fs::path const &path) -> KSpaceData
{
  auto in = open_in(path);
  auto const h = read_header(in, path, "RELAXMAP-KSPACE");
  check_version(h, path, kKSpaceVersion);
  if (h.get("endianness", path) != "little" || h.get("payload", path) != "float32") {
    throw IoError("'" + path.string() + "': only little-endian float32 payloads are supported");
  }
  Index const rows = to_index(h.get("rows", path), path, "rows");
  Index const cols = to_index(h.get("cols", path), path, "cols");
  Index const echoes = to_index(h.get("echoes", path), path, "echoes");
  Index const coils = to_index(h.get("coils", path), path, "coils");
  if (rows < 1 || cols < 1 || echoes < 1 || coils < 1) { throw IoError("'" + path.string() + "': empty dimensions"); }

  std::vector<double> times;
  std::istringstream ts(h.get("times", path));
  for (std::string tok; ts >> tok;) { times.push_back(to_double(tok, path, "echo time")); }
  if (static_cast<Index>(times.size()) != echoes) {
    throw IoError("'" + path.string() + "': echo time count does not match echoes");
  }

  KSpaceData data;
  data.echoes = echoes;
  data.coils = coils;
  try {
    data.times = EchoTimes(times);
  } catch (Error const &e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
  auto const scheme = h.get("scheme", path);
  if (scheme != "fixed" && scheme != "complementary") {
    throw IoError("'" + path.string() + "': unknown scheme '" + scheme + "'");
  }
  data.patterns.scheme = scheme == "fixed" ? PatternScheme::fixed : PatternScheme::complementary;

  auto const refs = h.all("pattern");
  if (static_cast<Index>(refs.size()) != echoes) {
    throw IoError("'" + path.string() + "': expected one pattern reference per echo");
  }
  std::map<std::string, SamplingPattern> cache;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    std::istringstream rs(refs[i]);
    std::size_t idx = 0;
    std::string name;
    if (!(rs >> idx >> name) || idx != i) {
      throw IoError("'" + path.string() + "': bad pattern reference '" + refs[i] + "'");
    }
    auto it = cache.find(name);
    if (it == cache.end()) { it = cache.emplace(name, load_pattern(path.parent_path() / name)).first; }
    if (it->second.rows != rows || it->second.cols != cols) {
      throw IoError("'" + path.string() + "': pattern '" + name + "' has the wrong size");
    }
    data.patterns.patterns.push_back(it->second);
  }

  auto const buf = read_payload(in, path, plane_bytes(rows, cols, echoes * coils));
  data.planes = parse_planes(buf, echoes * coils, rows, cols);
  return data;
}

void save_coils(fs::path const &path, CoilSet const &coils)
{
  coils.validate();
  auto out = open_out(path);
  out << fmt::format("RELAXMAP-COILS\nversion {}\nrows {}\ncols {}\nechoes 1\ncoils {}\nendianness little\n"
                     "payload float32\nend\n",
                     kKSpaceVersion, coils.rows(), coils.cols(), coils.size());
  out << planes_payload(coils.maps);
  finish_write(out, path);
}

auto load_coils(fs::path const &path) -> CoilSet
{
  auto in = open_in(path);
  auto const h = read_header(in, path, "RELAXMAP-COILS");
  check_version(h, path, kKSpaceVersion);
  if (h.get("endianness", path) != "little" || h.get("payload", path) != "float32") {
    throw IoError("'" + path.string() + "': only little-endian float32 payloads are supported");
  }
  Index const rows = to_index(h.get("rows", path), path, "rows");
  Index const cols = to_index(h.get("cols", path), path, "cols");
  Index const count = to_index(h.get("coils", path), path, "coils");
  if (rows < 1 || cols < 1 || count < 1) { throw IoError("'" + path.string() + "': empty dimensions"); }
  auto const buf = read_payload(in, path, plane_bytes(rows, cols, count));
  return CoilSet{parse_planes(buf, count, rows, cols)};
}

void save_pattern(fs::path const &path, SamplingPattern const &pattern)
{
  if (pattern.rows < 1 || pattern.cols < 1 || static_cast<Index>(pattern.mask.size()) != pattern.rows * pattern.cols) {
    throw DimensionError("pattern mask does not match its dimensions");
  }
  std::string runs;
  std::size_t nruns = 0;
  std::uint8_t state = 0;
  std::size_t len = 0;
  for (auto v : pattern.mask) {
    std::uint8_t const b = v != 0 ? 1 : 0;
    if (b != state) {
      runs += " " + std::to_string(len);
      ++nruns;
      state = b;
      len = 0;
    }
    ++len;
  }
  runs += " " + std::to_string(len);
  ++nruns;

  auto out = open_out(path);
  out << "RELAXMAP-PATTERN\n"
      << fmt::format("version {}\nrows {}\ncols {}\nd_min {}\ntarget_rate {}\ncalib_radius {}\nseed {}\n",
                     kPatternVersion, pattern.rows, pattern.cols, fmt_double(pattern.d_min),
                     fmt_double(pattern.target_rate), pattern.calib_radius, pattern.seed)
      << "runs " << nruns << runs << "\nend\n";
  finish_write(out, path);
}

auto load_pattern(fs::path const &path) -> SamplingPattern
{
  auto in = open_in(path);
  auto const h = read_header(in, path, "RELAXMAP-PATTERN");
  check_version(h, path, kPatternVersion);
  SamplingPattern p;
  p.rows = to_index(h.get("rows", path), path, "rows");
  p.cols = to_index(h.get("cols", path), path, "cols");
  if (p.rows < 1 || p.cols < 1) { throw IoError("'" + path.string() + "': empty dimensions"); }
  p.d_min = to_double(h.get("d_min", path), path, "d_min");
  p.target_rate = to_double(h.get("target_rate", path), path, "target_rate");
  p.calib_radius = static_cast<int>(to_index(h.get("calib_radius", path), path, "calib_radius"));
  auto const seed = h.get("seed", path);
  try {
    std::size_t used = 0;
    p.seed = std::stoull(seed, &used);
    if (used != seed.size()) { throw std::invalid_argument(seed); }
  } catch (std::exception const &) {
    throw IoError("'" + path.string() + "': bad seed '" + seed + "'");
  }

  std::istringstream rs(h.get("runs", path));
  std::size_t nruns = 0;
  if (!(rs >> nruns)) { throw IoError("'" + path.string() + "': bad run count"); }
  auto const total = static_cast<std::size_t>(p.rows * p.cols);
  p.mask.reserve(total);
  std::uint8_t state = 0;
  for (std::size_t k = 0; k < nruns; ++k) {
    std::size_t len = 0;
    if (!(rs >> len)) { throw IoError("'" + path.string() + "': run list shorter than its count"); }
    if (p.mask.size() + len > total) { throw IoError("'" + path.string() + "': runs exceed the grid"); }
    p.mask.insert(p.mask.end(), len, state);
    state ^= 1U;
  }
  std::string extra;
  if (rs >> extra) { throw IoError("'" + path.string() + "': run list longer than its count"); }
  if (p.mask.size() != total) { throw IoError("'" + path.string() + "': runs do not cover the grid"); }
  return p;
}

void save_real_image(fs::path const &path, RealImage const &img)
{
  std::string buf;
  buf.reserve(static_cast<std::size_t>(img.size()) * 8);
  for (double v : img) { put_le(buf, std::bit_cast<std::uint64_t>(v)); }
  auto out = open_out(path);
  out << fmt::format("RELAXMAP-IMAGE\nversion {}\nrows {}\ncols {}\nendianness little\npayload float64\nend\n",
                     kImageVersion, img.rows(), img.cols())
      << buf;
  finish_write(out, path);
}

auto load_real_image(fs::path const &path) -> RealImage
{
  auto in = open_in(path);
  auto const h = read_header(in, path, "RELAXMAP-IMAGE");
  check_version(h, path, kImageVersion);
  if (h.get("endianness", path) != "little" || h.get("payload", path) != "float64") {
    throw IoError("'" + path.string() + "': only little-endian float64 payloads are supported");
  }
  Index const rows = to_index(h.get("rows", path), path, "rows");
  Index const cols = to_index(h.get("cols", path), path, "cols");
  if (rows < 1 || cols < 1) { throw IoError("'" + path.string() + "': empty dimensions"); }
  auto const buf = read_payload(in, path, static_cast<std::size_t>(rows * cols) * 8);
  RealImage img(rows, cols);
  for (Index p = 0; p < img.size(); ++p) {
    img[p] = std::bit_cast<double>(get_le<std::uint64_t>(buf.data() + 8 * p));
  }
  return img;
}

auto map_image_bytes(RealImage const &img, double lo, double hi) -> std::string
{
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw InvalidArgument(fmt::format("export window needs finite lo < hi, got [{}, {}]", lo, hi));
  }
  std::string out = fmt::format("P5\n{} {}\n255\n", img.cols(), img.rows());
  for (double v : img) {
    double s = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * s))));
  }
  return out;
}

void export_map_image(RealImage const &img, fs::path const &path, double lo, double hi)
{
  auto const bytes = map_image_bytes(img, lo, hi);
  auto out = open_out(path);
  out << bytes;
  finish_write(out, path);
}

} // namespace relaxmap
