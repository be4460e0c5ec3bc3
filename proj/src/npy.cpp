#include "latentedit/npy.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cfloat>
#include <cstring>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace latentedit::npy {

namespace {

constexpr std::array<std::uint8_t, 6> kMagic = {0x93, 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kPreambleSize = 10;  // magic + version + u16 header length
constexpr std::size_t kAlignment = 64;
// numpy leaves room for the leading axis to grow to this many digits.
constexpr std::size_t kGrowthAxisMaxDigits = 21;

std::string shape_to_string(const std::vector<std::uint64_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  if (shape.size() == 1) out += ',';
  return out + ")";
}

[[noreturn]] void unsupported(const std::string& field, const std::string& detail) {
  throw Error(ErrorCode::kUnsupportedLayout, field + ": " + detail);
}

// Minimal reader for the Python dict literal in the header.
class DictParser {
 public:
  explicit DictParser(std::string_view text) : text_(text) {}

  struct Entries {
    std::optional<std::string> descr;
    std::optional<bool> fortran_order;
    std::optional<std::vector<std::uint64_t>> shape;
  };

  Entries parse() {
    Entries out;
    expect('{');
    while (true) {
      skip_space();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      const std::string key = parse_string();
      expect(':');
      if (key == "descr") {
        out.descr = parse_string();
      } else if (key == "fortran_order") {
        out.fortran_order = parse_bool();
      } else if (key == "shape") {
        out.shape = parse_tuple();
      } else {
        unsupported("header", "unknown key '" + key + "'");
      }
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        malformed("expected ',' or '}'");
      }
    }
    skip_space();
    if (pos_ != text_.size()) malformed("trailing characters after dictionary");
    return out;
  }

 private:
  [[noreturn]] void malformed(const std::string& what) {
    unsupported("header", what + " at offset " + std::to_string(pos_));
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) malformed(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string parse_string() {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') malformed("expected quoted string");
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) malformed("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  bool parse_bool() {
    skip_space();
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    malformed("expected True or False");
  }

  std::vector<std::uint64_t> parse_tuple() {
    expect('(');
    std::vector<std::uint64_t> dims;
    while (true) {
      skip_space();
      if (peek() == ')') {
        ++pos_;
        return dims;
      }
      if (!std::isdigit(static_cast<unsigned char>(peek()))) malformed("expected dimension");
      std::uint64_t value = 0;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        const std::uint64_t digit = static_cast<std::uint64_t>(peek() - '0');
        if (value > (std::numeric_limits<std::uint64_t>::max() - digit) / 10) {
          malformed("dimension overflows 64 bits");
        }
        value = value * 10 + digit;
        ++pos_;
      }
      if (peek() == 'L') ++pos_;
      dims.push_back(value);
      if (dims.size() > 32) malformed("too many dimensions");
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ')') {
        malformed("expected ',' or ')'");
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

double decode_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

double decode_f32(const std::uint8_t* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | p[i];
  return static_cast<double>(std::bit_cast<float>(bits));
}

void encode_f64(double v, std::vector<std::uint8_t>& out) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i, bits >>= 8) out.push_back(static_cast<std::uint8_t>(bits & 0xff));
}

void encode_f32(float v, std::vector<std::uint8_t>& out) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i, bits >>= 8) out.push_back(static_cast<std::uint8_t>(bits & 0xff));
}

}  // namespace

std::string_view descr(DType dtype) { return dtype == DType::kFloat32 ? "<f4" : "<f8"; }

std::size_t item_size(DType dtype) { return dtype == DType::kFloat32 ? 4 : 8; }

Header parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::kNotNpy, "missing \\x93NUMPY magic");
  }
  if (bytes.size() < kPreambleSize) {
    throw Error(ErrorCode::kPayloadLengthMismatch,
                "file ends inside the preamble (" + std::to_string(bytes.size()) + " bytes)");
  }
  Header header;
  header.major = bytes[6];
  header.minor = bytes[7];
  if (header.major != 1 || header.minor != 0) {
    unsupported("version", std::to_string(header.major) + "." + std::to_string(header.minor) +
                               " (only 1.0 is supported)");
  }
  const std::size_t header_len = static_cast<std::size_t>(bytes[8]) |
                                 (static_cast<std::size_t>(bytes[9]) << 8);
  header.data_offset = kPreambleSize + header_len;
  if (header.data_offset > bytes.size()) {
    throw Error(ErrorCode::kPayloadLengthMismatch,
                "header declares " + std::to_string(header_len) + " bytes but only " +
                    std::to_string(bytes.size() - kPreambleSize) + " follow the preamble");
  }
  if (header.data_offset % kAlignment != 0) {
    unsupported("header", "total header length " + std::to_string(header.data_offset) +
                              " is not a multiple of 64");
  }

  std::string text(bytes.begin() + kPreambleSize, bytes.begin() + header.data_offset);
  for (char c : text) {
    if (static_cast<unsigned char>(c) >= 0x80) unsupported("header", "non-ASCII byte");
  }
  const auto entries = DictParser(text).parse();
  if (!entries.descr) unsupported("descr", "missing");
  if (!entries.fortran_order) unsupported("fortran_order", "missing");
  if (!entries.shape) unsupported("shape", "missing");

  if (*entries.descr == "<f8") {
    header.dtype = DType::kFloat64;
  } else if (*entries.descr == "<f4") {
    header.dtype = DType::kFloat32;
  } else {
    unsupported("descr", "'" + *entries.descr + "' (expected '<f4' or '<f8')");
  }
  if (*entries.fortran_order) unsupported("fortran_order", "True (only C order is supported)");
  header.fortran_order = false;
  header.shape = *entries.shape;
  return header;
}

LatentArchive read_npy(std::span<const std::uint8_t> bytes, const ReadOptions& options) {
  const Header header = parse_header(bytes);

  std::uint64_t count = 0;
  if (header.shape.size() == 3 && header.shape[1] == kNumLayers && header.shape[2] == kChannels) {
    count = header.shape[0];
  } else if (header.shape.size() == 2 && header.shape[0] == kNumLayers &&
             header.shape[1] == kChannels) {
    count = 1;
  } else {
    throw Error(ErrorCode::kShapeMismatch,
                "expected (N, 18, 512) or (18, 512), got " + shape_to_string(header.shape));
  }
  if (count > options.max_codes) {
    throw Error(ErrorCode::kLimitExceeded, "file declares " + std::to_string(count) +
                                               " codes; limit is " +
                                               std::to_string(options.max_codes));
  }

  const std::size_t width = item_size(header.dtype);
  const std::uint64_t per_code = kEntries * width;
  const std::uint64_t actual = bytes.size() - header.data_offset;
  if (actual % per_code != 0 || actual / per_code != count) {
    throw Error(ErrorCode::kPayloadLengthMismatch,
                "shape " + shape_to_string(header.shape) + " needs " + std::to_string(count) +
                    " x " + std::to_string(per_code) + " payload bytes, file has " +
                    std::to_string(actual));
  }

  LatentArchive archive;
  archive.source_dtype = header.dtype;
  archive.codes.reserve(count);
  const std::uint8_t* p = bytes.data() + header.data_offset;
  for (std::uint64_t n = 0; n < count; ++n) {
    std::vector<double> values(kEntries);
    for (std::size_t i = 0; i < kEntries; ++i, p += width) {
      values[i] = header.dtype == DType::kFloat64 ? decode_f64(p) : decode_f32(p);
    }
    try {
      archive.codes.push_back(LatentCode::from_values(std::move(values)));
    } catch (const Error& e) {
      throw Error(e.code(), "code " + std::to_string(n) + " of the archive has a non-finite entry",
                  e.where());
    }
  }
  return archive;
}

std::vector<std::uint8_t> write_npy(const LatentArchive& archive, DType dtype) {
  if (archive.codes.empty()) {
    throw Error(ErrorCode::kEmptyArchive, "refusing to write an archive with no codes");
  }
  if (dtype == DType::kFloat32) {
    for (std::size_t n = 0; n < archive.codes.size(); ++n) {
      const auto values = archive.codes[n].values();
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i]) > static_cast<double>(FLT_MAX)) {
          throw Error(ErrorCode::kNarrowingOverflow,
                      "code " + std::to_string(n) + " value exceeds float32 range",
                      {.layer = i / kChannels, .channel = i % kChannels});
        }
      }
    }
  }

  const std::string count = std::to_string(archive.codes.size());
  std::string dict = "{'descr': '" + std::string(descr(dtype)) +
                     "', 'fortran_order': False, 'shape': (" + count + ", " +
                     std::to_string(kNumLayers) + ", " + std::to_string(kChannels) + "), }";
  dict.append(kGrowthAxisMaxDigits - count.size(), ' ');
  // Newline terminator counts toward the aligned length.
  const std::size_t unpadded = kPreambleSize + dict.size() + 1;
  const std::size_t padding = kAlignment - unpadded % kAlignment;
  dict.append(padding, ' ');
  dict.push_back('\n');
  if (dict.size() > 0xffff) {
    throw Error(ErrorCode::kUnsupportedLayout, "header exceeds the v1.0 length field");
  }

  std::vector<std::uint8_t> out(kPreambleSize + dict.size());
  out.reserve(out.size() + archive.codes.size() * kEntries * item_size(dtype));
  std::memcpy(out.data(), kMagic.data(), kMagic.size());
  out[6] = 1;
  out[7] = 0;
  out[8] = static_cast<std::uint8_t>(dict.size() & 0xff);
  out[9] = static_cast<std::uint8_t>(dict.size() >> 8);
  std::memcpy(out.data() + kPreambleSize, dict.data(), dict.size());
  for (const auto& code : archive.codes) {
    for (double v : code.values()) {
      if (dtype == DType::kFloat64) {
        encode_f64(v, out);
      } else {
        encode_f32(static_cast<float>(v), out);
      }
    }
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace latentedit::npy
