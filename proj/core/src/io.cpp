#include "tenexp/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tenexp/errors.hpp"
#include "tenexp/random.hpp"

namespace tenexp {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicSize = 6;

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

// Parser for the Python-literal header dictionary written by numpy.
class HeaderParser {
 public:
  explicit HeaderParser(std::string text) : s_(std::move(text)) {}

  void parse(std::optional<std::string>& descr, std::optional<bool>& fortran,
             std::optional<Shape>& shape) {
    expect('{');
    while (true) {
      skip_space();
      if (peek() == '}') break;
      const std::string key = parse_string("dictionary key");
      expect(':');
      if (key == "descr") {
        descr = parse_string("descr");
      } else if (key == "fortran_order") {
        fortran = parse_bool();
      } else if (key == "shape") {
        shape = parse_shape();
      } else {
        throw FormatError("NPY header has unexpected field '" + key + "'");
      }
      skip_space();
      if (peek() == ',') ++pos_;
    }
    ++pos_;
  }

 private:
  char peek() const {
    if (pos_ >= s_.size()) throw FormatError("NPY header ends unexpectedly");
    return s_[pos_];
  }
  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_space();
    if (peek() != c) throw FormatError(std::string("NPY header: expected '") + c + "'");
    ++pos_;
  }
  std::string parse_string(const char* what) {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') throw FormatError(std::string("NPY header: malformed ") + what);
    const auto end = s_.find(quote, pos_ + 1);
    if (end == std::string::npos) throw FormatError(std::string("NPY header: unterminated ") + what);
    std::string out = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    return out;
  }
  bool parse_bool() {
    skip_space();
    if (s_.compare(pos_, 4, "True") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "False") == 0) {
      pos_ += 5;
      return false;
    }
    throw FormatError("NPY header: malformed fortran_order");
  }
  Shape parse_shape() {
    expect('(');
    Shape shape;
    while (true) {
      skip_space();
      if (peek() == ')') break;
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) throw FormatError("NPY header: malformed shape");
      shape.push_back(std::stoull(s_.substr(start, pos_ - start)));
      skip_space();
      if (peek() == ',') ++pos_;
    }
    ++pos_;
    return shape;
  }

  std::string s_;
  std::size_t pos_ = 0;
};

std::string header_dict(const Shape& shape) {
  std::string dims;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) dims += ", ";
    dims += std::to_string(shape[i]);
  }
  if (shape.size() == 1) dims += ",";
  return "{'descr': '<f8', 'fortran_order': False, 'shape': (" + dims + "), }";
}

}  // namespace

DenseTensor read_npy(std::istream& in) {
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kMagic, kMagicSize) != 0) {
    throw FormatError("not an NPY stream: bad magic");
  }
  unsigned char version[2];
  if (!in.read(reinterpret_cast<char*>(version), 2)) throw FormatError("NPY stream truncated in version");
  std::size_t header_len = 0;
  if (version[0] == 1) {
    unsigned char len[2];
    if (!in.read(reinterpret_cast<char*>(len), 2)) throw FormatError("NPY stream truncated in header length");
    header_len = len[0] | (static_cast<std::size_t>(len[1]) << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char len[4];
    if (!in.read(reinterpret_cast<char*>(len), 4)) throw FormatError("NPY stream truncated in header length");
    header_len = len[0] | (static_cast<std::size_t>(len[1]) << 8) |
                 (static_cast<std::size_t>(len[2]) << 16) | (static_cast<std::size_t>(len[3]) << 24);
  } else {
    throw FormatError("unsupported NPY version " + std::to_string(version[0]));
  }
  std::string header(header_len, '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header_len))) {
    throw FormatError("NPY stream truncated in header");
  }

  std::optional<std::string> descr;
  std::optional<bool> fortran;
  std::optional<Shape> shape;
  HeaderParser(header).parse(descr, fortran, shape);
  if (!descr) throw FormatError("NPY header is missing descr");
  if (!fortran) throw FormatError("NPY header is missing fortran_order");
  if (!shape) throw FormatError("NPY header is missing shape");
  if (*descr != "<f8") throw FormatError("unsupported NPY dtype '" + *descr + "' (expected '<f8')");
  if (*fortran) throw FormatError("unsupported NPY fortran_order True (expected C order)");
  if (shape->empty()) *shape = {1};
  for (auto d : *shape) {
    if (d == 0) throw FormatError("NPY shape has a zero-length mode");
  }

  std::vector<double> data(element_count(*shape));
  if (!in.read(reinterpret_cast<char*>(data.data()),
               static_cast<std::streamsize>(data.size() * sizeof(double)))) {
    throw FormatError("NPY payload is shorter than its shape requires");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw FormatError("NPY payload contains a non-finite value");
  }
  return DenseTensor(std::move(*shape), std::move(data));
}

void write_npy(std::ostream& out, const DenseTensor& x) {
  std::string dict = header_dict(x.shape());
  // magic(6) + version(2) + length(2) + dict + '\n' padded to a multiple of 64.
  const std::size_t unpadded = kMagicSize + 2 + 2 + dict.size() + 1;
  const std::size_t padded = (unpadded + 63) / 64 * 64;
  dict.append(padded - unpadded, ' ');
  dict.push_back('\n');
  const std::size_t len = dict.size();
  if (len > 0xFFFF) throw ArgumentError("tensor shape too long for an NPY 1.0 header");
  out.write(kMagic, kMagicSize);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const char len_bytes[2] = {static_cast<char>(len & 0xFF), static_cast<char>((len >> 8) & 0xFF)};
  out.write(len_bytes, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(reinterpret_cast<const char*>(x.data().data()),
            static_cast<std::streamsize>(x.size() * sizeof(double)));
}

DenseTensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "' for reading");
  return read_npy(in);
}

void write_tensor(const std::filesystem::path& path, const DenseTensor& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path.string() + "' for writing");
  write_npy(out, x);
  if (!out) throw ArgumentError("failed writing '" + path.string() + "'");
}

DenseTensor gen_mask(const Shape& shape, double sr, std::uint64_t seed) {
  if (!(sr > 0.0 && sr <= 1.0)) throw ArgumentError("sampling rate must lie in (0, 1]");
  DenseTensor mask(shape);
  const std::size_t n = mask.size();
  // The small offset keeps products such as 0.29 * 100 from rounding down.
  const auto ones = static_cast<std::size_t>(std::floor(sr * static_cast<double>(n) + 1e-9));
  if (ones == 0) throw ArgumentError("sampling rate yields no observed entries");
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < ones; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
    std::swap(index[i], index[j]);
    mask[index[i]] = 1.0;
  }
  return mask;
}

DenseTensor normalize01(const DenseTensor& x) {
  const auto [lo, hi] = std::minmax_element(x.data().begin(), x.data().end());
  const double min = *lo;
  const double max = *hi;
  if (min == max) throw DegenerateInputError("cannot normalize a constant tensor");
  DenseTensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - min) / (max - min);
  return out;
}

}  // namespace tenexp
