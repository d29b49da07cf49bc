#include "nlflow/io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "nlflow/errors.hpp"

namespace nlflow::io {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : b_(bytes) {}

  void skip_separators() {
    bool any = false;
    while (pos_ < b_.size()) {
      if (is_space(b_[pos_])) {
        ++pos_;
        any = true;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
        any = true;
      } else {
        break;
      }
    }
    if (!any) fail(ErrorCategory::format, "PGM header: expected whitespace between fields");
  }

  std::int64_t number(const char* what) {
    skip_separators();
    const std::size_t start = pos_;
    std::int64_t v = 0;
    while (pos_ < b_.size() && std::isdigit(static_cast<unsigned char>(b_[pos_]))) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 1'000'000'000) fail(ErrorCategory::format, std::string("PGM header: ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) fail(ErrorCategory::format, std::string("PGM header: missing ") + what);
    return v;
  }

  void single_space() {
    if (pos_ >= b_.size() || !is_space(b_[pos_]))
      fail(ErrorCategory::format, "PGM header: maxval must be followed by one whitespace byte");
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }

 private:
  const std::string& b_;
  std::size_t pos_ = 0;
};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v == 0 || v > std::numeric_limits<std::uint32_t>::max())
    fail(ErrorCategory::dimension, std::string("RVOL ") + what + " extent out of range");
  return static_cast<std::uint32_t>(v);
}

void require_unit(double v, std::size_t k) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << "value " << v << " at index " << k << " outside [0, 1]";
    fail(ErrorCategory::input_range, os.str());
  }
}

std::string extension(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

[[noreturn]] void unknown_extension(const std::filesystem::path& path) {
  fail(ErrorCategory::format, "unsupported file extension for '" + path.string() + "' (expected .pgm or .rvol)");
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorCategory::io, "read failure on '" + path.string() + "'");
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCategory::io, "write failure on '" + path.string() + "'");
}

PgmImage parse_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') fail(ErrorCategory::format, "not a binary PGM (P5)");
  HeaderReader h(bytes);
  h.advance(2);
  PgmImage img;
  img.width = static_cast<std::size_t>(h.number("width"));
  img.height = static_cast<std::size_t>(h.number("height"));
  img.maxval = h.number("maxval");
  h.single_space();
  if (img.width == 0 || img.height == 0) fail(ErrorCategory::dimension, "PGM with zero width or height");
  if (img.maxval < 1 || img.maxval > 65535) fail(ErrorCategory::format, "PGM maxval must lie in [1, 65535]");
  const std::size_t bps = img.maxval < 256 ? 1 : 2;
  const std::size_t n = img.width * img.height;
  const std::size_t need = h.pos() + n * bps;
  if (bytes.size() < need) fail(ErrorCategory::format, "PGM payload truncated");
  if (bytes.size() > need) fail(ErrorCategory::format, "PGM has trailing bytes after the payload");
  img.samples.resize(n);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.pos());
  for (std::size_t k = 0; k < n; ++k) {
    img.samples[k] = bps == 1 ? p[k] : (static_cast<std::int64_t>(p[2 * k]) << 8) | p[2 * k + 1];
    if (img.samples[k] > img.maxval) {
      std::ostringstream os;
      os << "PGM sample " << img.samples[k] << " at index " << k << " exceeds maxval " << img.maxval;
      fail(ErrorCategory::input_range, os.str());
    }
  }
  return img;
}

std::string encode_pgm(const PgmImage& img) {
  if (img.maxval < 1 || img.maxval > 65535) fail(ErrorCategory::format, "PGM maxval must lie in [1, 65535]");
  if (img.samples.size() != img.width * img.height) fail(ErrorCategory::dimension, "PGM sample count mismatch");
  std::ostringstream hdr;
  hdr << "P5\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
  std::string out = hdr.str();
  const bool wide = img.maxval >= 256;
  out.reserve(out.size() + img.samples.size() * (wide ? 2 : 1));
  for (std::int64_t s : img.samples) {
    if (s < 0 || s > img.maxval) fail(ErrorCategory::input_range, "PGM sample outside [0, maxval]");
    if (wide) out.push_back(static_cast<char>((s >> 8) & 0xFF));
    out.push_back(static_cast<char>(s & 0xFF));
  }
  return out;
}

GridField read_pgm(const std::filesystem::path& path) {
  const PgmImage img = parse_pgm(read_file(path));
  return normalize_input(Shape(img.height, img.width), img.samples, img.maxval);
}

void write_pgm(const std::filesystem::path& path, const GridField& field, std::int64_t maxval) {
  if (field.shape().rank() != 2) fail(ErrorCategory::dimension, "PGM holds 2D fields only");
  PgmImage img;
  img.height = field.shape().extent(0);
  img.width = field.shape().extent(1);
  img.maxval = maxval;
  img.samples.resize(field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    require_unit(field[k], k);
    img.samples[k] = static_cast<std::int64_t>(std::lround(field[k] * static_cast<double>(maxval)));
  }
  write_file(path, encode_pgm(img));
}

SegmentationMask read_pgm_mask(const std::filesystem::path& path) {
  const PgmImage img = parse_pgm(read_file(path));
  SegmentationMask m(Shape(img.height, img.width));
  for (std::size_t k = 0; k < img.samples.size(); ++k) {
    const std::int64_t s = img.samples[k];
    if (s != 0 && s != img.maxval) {
      std::ostringstream os;
      os << "mask sample " << s << " at index " << k << " is neither 0 nor maxval " << img.maxval;
      fail(ErrorCategory::input_range, os.str());
    }
    m.set(k, s == img.maxval);
  }
  return m;
}

void write_pgm_mask(const std::filesystem::path& path, const SegmentationMask& mask) {
  if (mask.shape().rank() != 2) fail(ErrorCategory::dimension, "PGM holds 2D masks only");
  PgmImage img;
  img.height = mask.shape().extent(0);
  img.width = mask.shape().extent(1);
  img.maxval = 255;
  img.samples.resize(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) img.samples[k] = mask[k] ? 255 : 0;
  write_file(path, encode_pgm(img));
}

GridField parse_rvol(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "RVOL") != 0) fail(ErrorCategory::format, "missing RVOL magic");
  const std::size_t L = get_u32(bytes, 4), M = get_u32(bytes, 8), S = get_u32(bytes, 12);
  if (L == 0 || M == 0 || S == 0) fail(ErrorCategory::dimension, "RVOL with a zero extent");
  const std::size_t n = L * M * S;
  if (bytes.size() < 16 + 4 * n) fail(ErrorCategory::format, "RVOL payload truncated");
  if (bytes.size() > 16 + 4 * n) fail(ErrorCategory::format, "RVOL has trailing bytes after the payload");
  std::vector<double> data(n);
  for (std::size_t k = 0; k < n; ++k) {
    const float v = std::bit_cast<float>(get_u32(bytes, 16 + 4 * k));
    data[k] = static_cast<double>(v);
    require_unit(data[k], k);
  }
  return GridField(S == 1 ? Shape(L, M) : Shape(L, M, S), std::move(data));
}

std::string encode_rvol(const GridField& field) {
  const Shape& sh = field.shape();
  if (sh.rank() != 2 && sh.rank() != 3) fail(ErrorCategory::dimension, "RVOL holds 2D or 3D fields");
  std::string out = "RVOL";
  put_u32(out, checked_u32(sh.extent(0), "L"));
  put_u32(out, checked_u32(sh.extent(1), "M"));
  put_u32(out, checked_u32(sh.extent(2), "S"));
  out.reserve(16 + 4 * field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    require_unit(field[k], k);
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(field[k])));
  }
  return out;
}

GridField read_rvol(const std::filesystem::path& path) { return parse_rvol(read_file(path)); }

void write_rvol(const std::filesystem::path& path, const GridField& field) { write_file(path, encode_rvol(field)); }

SegmentationMask read_rvol_mask(const std::filesystem::path& path) {
  const GridField f = read_rvol(path);
  SegmentationMask m(f.shape());
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (f[k] != 0.0 && f[k] != 1.0) {
      std::ostringstream os;
      os << "mask value " << f[k] << " at index " << k << " is neither 0 nor 1";
      fail(ErrorCategory::input_range, os.str());
    }
    m.set(k, f[k] == 1.0);
  }
  return m;
}

void write_rvol_mask(const std::filesystem::path& path, const SegmentationMask& mask) {
  GridField f(mask.shape());
  for (std::size_t k = 0; k < mask.size(); ++k) f[k] = mask[k] ? 1.0 : 0.0;
  write_rvol(path, f);
}

GridField load_field(const std::filesystem::path& path) {
  const std::string e = extension(path);
  if (e == ".pgm") return read_pgm(path);
  if (e == ".rvol") return read_rvol(path);
  unknown_extension(path);
}

SegmentationMask load_mask(const std::filesystem::path& path) {
  const std::string e = extension(path);
  if (e == ".pgm") return read_pgm_mask(path);
  if (e == ".rvol") return read_rvol_mask(path);
  unknown_extension(path);
}

void save_field(const std::filesystem::path& path, const GridField& field) {
  const std::string e = extension(path);
  if (e == ".pgm") return write_pgm(path, field);
  if (e == ".rvol") return write_rvol(path, field);
  unknown_extension(path);
}

void save_mask(const std::filesystem::path& path, const SegmentationMask& mask) {
  const std::string e = extension(path);
  if (e == ".pgm") return write_pgm_mask(path, mask);
  if (e == ".rvol") return write_rvol_mask(path, mask);
  unknown_extension(path);
}

}  // namespace nlflow::io
