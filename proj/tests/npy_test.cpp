#include "latentedit/npy.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_support.hpp"

namespace latentedit::npy {
namespace {

using latentedit::testing::fixture_dir;
using latentedit::testing::random_code;

std::vector<std::uint8_t> fixture(const std::string& name) {
  return read_file(fixture_dir() / name);
}

std::vector<std::uint8_t> bytes_of(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

// Builds a v1.0 file around an arbitrary dictionary, padded the way numpy pads.
std::vector<std::uint8_t> with_header(std::string dict, std::size_t payload_bytes,
                                      std::uint8_t major = 1) {
  std::size_t total = 10 + dict.size() + 1;
  dict.append((64 - total % 64) % 64, ' ');
  dict.push_back('\n');
  std::vector<std::uint8_t> out = {0x93, 'N', 'U', 'M', 'P', 'Y', major, 0,
                                   static_cast<std::uint8_t>(dict.size() & 0xff),
                                   static_cast<std::uint8_t>(dict.size() >> 8)};
  out.insert(out.end(), dict.begin(), dict.end());
  out.resize(out.size() + payload_bytes, 0);
  return out;
}

ErrorCode code_of(std::span<const std::uint8_t> bytes) {
  try {
    read_npy(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

TEST(NpyReadTest, ZerosFixture) {
  const auto a = read_npy(fixture("zeros_1.npy"));
  ASSERT_EQ(a.codes.size(), 1u);
  EXPECT_EQ(a.codes[0], LatentCode::zeros());
  EXPECT_EQ(a.source_dtype, DType::kFloat64);
}

TEST(NpyReadTest, TwoZeroCodes) {
  const auto a = read_npy(with_header(
      "{'descr': '<f8', 'fortran_order': False, 'shape': (2, 18, 512), }", 2 * kEntries * 8));
  ASSERT_EQ(a.codes.size(), 2u);
  for (const auto& c : a.codes) EXPECT_EQ(c, LatentCode::zeros());
}

TEST(NpyReadTest, NumpyWrittenFilesRoundTripByteIdentical) {
  for (const char* name : {"zeros_1.npy", "random_3.npy", "toy_mapper_ref_in.npy"}) {
    const auto bytes = fixture(name);
    EXPECT_EQ(write_npy(read_npy(bytes)), bytes) << name;
  }
}

TEST(NpyReadTest, Float32FixtureWidensExactly) {
  const auto bytes = fixture("random_f32_2.npy");
  const auto a = read_npy(bytes);
  ASSERT_EQ(a.codes.size(), 2u);
  EXPECT_EQ(a.source_dtype, DType::kFloat32);
  const auto header = parse_header(bytes);
  for (std::size_t k = 0; k < kEntries; ++k) {
    float f;
    std::memcpy(&f, bytes.data() + header.data_offset + 4 * (kEntries + k), 4);
    ASSERT_EQ(a.codes[1].values()[k], static_cast<double>(f));
  }
  EXPECT_EQ(write_npy(a, DType::kFloat32), bytes);
}

TEST(NpyReadTest, TwoDimensionalFileIsOneCode) {
  const auto a = read_npy(fixture("single_2d.npy"));
  ASSERT_EQ(a.codes.size(), 1u);
  // Written back as (1, 18, 512), so the payload matches but the header does not.
  const auto src = fixture("single_2d.npy");
  const auto out = write_npy(a);
  ASSERT_EQ(out.size(), src.size());
  EXPECT_TRUE(std::equal(out.begin() + 128, out.end(), src.begin() + 128));
}

TEST(NpyReadTest, ManifestShapesAgree) {
  std::ifstream in(fixture_dir() / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  for (const auto& f : manifest["files"]) {
    if (!f.contains("shape")) continue;
    const auto h = parse_header(fixture(f["path"]));
    EXPECT_EQ(std::string(descr(h.dtype)), f["dtype"].get<std::string>()) << f["path"];
    EXPECT_EQ(h.shape, f["shape"].get<std::vector<std::uint64_t>>()) << f["path"];
  }
}

TEST(NpyWriteTest, SingleZeroCodeLayout) {
  const auto out = write_npy({{LatentCode::zeros()}, DType::kFloat64});
  ASSERT_EQ(out.size(), 128 + kEntries * 8);
  const std::string header(out.begin() + 10, out.begin() + 128);
  EXPECT_EQ(header.rfind("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 512), }", 0),
            0u);
  EXPECT_EQ(header.back(), '\n');
}

TEST(NpyWriteTest, EmptyArchiveThrows) {
  try {
    write_npy({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyArchive);
  }
}

TEST(NpyWriteTest, Float32OverflowThrows) {
  std::vector<double> v(kEntries, 0.0);
  v[7 * kChannels + 3] = 1e39;
  try {
    write_npy({{LatentCode::from_values(v)}, DType::kFloat64}, DType::kFloat32);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNarrowingOverflow);
    EXPECT_EQ(e.where().layer, 7u);
  }
}

TEST(NpyWriteTest, Float32RoundTripIsQuantized) {
  Rng rng(41);
  LatentArchive a{{random_code(rng), random_code(rng)}, DType::kFloat64};
  const auto back = read_npy(write_npy(a, DType::kFloat32));
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t k = 0; k < kEntries; ++k) {
      const double v = a.codes[n].values()[k];
      ASSERT_EQ(back.codes[n].values()[k], static_cast<double>(static_cast<float>(v)));
    }
  }
}

TEST(NpyWriteTest, RandomArchivesRoundTrip) {
  Rng rng(42);
  for (std::size_t n : {1u, 2u, 9u, 10u, 11u, 64u}) {
    LatentArchive a;
    for (std::size_t i = 0; i < n; ++i) a.codes.push_back(random_code(rng, 1e3));
    const auto bytes = write_npy(a);
    EXPECT_EQ(bytes.size() % 64, (kEntries * 8 * n) % 64);
    EXPECT_EQ(parse_header(bytes).data_offset % 64, 0u);
    EXPECT_EQ(read_npy(bytes).codes, a.codes);
  }
}

TEST(NpyMalformedTest, StructuredErrors) {
  const auto good = fixture("zeros_1.npy");
  EXPECT_EQ(code_of({}), ErrorCode::kNotNpy);
  EXPECT_EQ(code_of(bytes_of("PK\x03\x04 not numpy at all")), ErrorCode::kNotNpy);
  EXPECT_EQ(code_of(std::span(good).first(10)), ErrorCode::kPayloadLengthMismatch);
  EXPECT_EQ(code_of(std::span(good).first(8)), ErrorCode::kPayloadLengthMismatch);
  EXPECT_EQ(code_of(std::span(good).first(good.size() - 1)), ErrorCode::kPayloadLengthMismatch);
  auto longer = good;
  longer.push_back(0);
  EXPECT_EQ(code_of(longer), ErrorCode::kPayloadLengthMismatch);

  const std::size_t one = kEntries * 8;
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 512), }",
                                one, 2)),
            ErrorCode::kUnsupportedLayout);
  EXPECT_EQ(code_of(with_header("{'descr': '>f8', 'fortran_order': False, 'shape': (1, 18, 512), }",
                                one)),
            ErrorCode::kUnsupportedLayout);
  EXPECT_EQ(code_of(with_header("{'descr': '<i8', 'fortran_order': False, 'shape': (1, 18, 512), }",
                                one)),
            ErrorCode::kUnsupportedLayout);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': True, 'shape': (1, 18, 512), }",
                                one)),
            ErrorCode::kUnsupportedLayout);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'shape': (1, 18, 512), }", one)),
            ErrorCode::kUnsupportedLayout);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 510), }",
                                kEntries * 8)),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (9216,), }",
                                one)),
            ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (2, 18, 512), }",
                                one)),
            ErrorCode::kPayloadLengthMismatch);
  // Huge declared count must fail on the limit, before any allocation.
  EXPECT_EQ(code_of(with_header(
                "{'descr': '<f8', 'fortran_order': False, 'shape': (18446744073709551615, 18, 512), }",
                0)),
            ErrorCode::kLimitExceeded);
  EXPECT_EQ(code_of(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 512)",
                                one)),
            ErrorCode::kUnsupportedLayout);
}

TEST(NpyMalformedTest, ShapeErrorReportsActualShape) {
  try {
    read_npy(with_header("{'descr': '<f8', 'fortran_order': False, 'shape': (1, 18, 510), }",
                         kEntries * 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("(1, 18, 510)"), std::string::npos) << e.what();
  }
}

TEST(NpyMalformedTest, NonFinitePayloadNamesCodeAndLayer) {
  auto bytes = fixture("random_3.npy");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t at = 128 + 8 * (kEntries + 3 * kChannels + 1);
  std::memcpy(bytes.data() + at, &nan, 8);
  try {
    read_npy(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
    EXPECT_EQ(e.where().layer, 3u);
    EXPECT_EQ(e.where().channel, 1u);
    EXPECT_NE(std::string(e.what()).find("code 1"), std::string::npos);
  }
}

// Parser totality: random corruptions either parse or raise Error.
TEST(NpyMalformedTest, FuzzedHeadersNeverCrash) {
  const auto good = fixture("zeros_1.npy");
  Rng rng(43);
  for (int t = 0; t < 3000; ++t) {
    auto bytes = std::vector<std::uint8_t>(good.begin(), good.begin() + 128 + rng.index(64));
    const int flips = 1 + static_cast<int>(rng.index(4));
    for (int f = 0; f < flips; ++f) {
      bytes[rng.index(128)] = static_cast<std::uint8_t>(rng.next());
    }
    try {
      read_npy(bytes);
    } catch (const Error&) {
    }
  }
}

}  // namespace
}  // namespace latentedit::npy
