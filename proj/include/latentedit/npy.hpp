#pragma once

// Reader and writer for NPY v1.0 files holding stacks of latent codes.
//
// Only little-endian float32/float64, C-order arrays of shape (N, 18, 512) or
// (18, 512) are accepted. Everything else is rejected with a structured
// Error; nothing is allocated on the strength of header-declared sizes until
// they have been checked against the actual byte count.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "latentedit/latent.hpp"

namespace latentedit::npy {

enum class DType { kFloat32, kFloat64 };

std::string_view descr(DType dtype);  // "<f4" / "<f8"
std::size_t item_size(DType dtype);

struct Header {
  std::uint8_t major = 1;
  std::uint8_t minor = 0;
  DType dtype = DType::kFloat64;
  bool fortran_order = false;
  std::vector<std::uint64_t> shape;
  std::size_t data_offset = 0;  // bytes of magic + version + length + dict
};

/// A stack of latent codes and the on-disk element width it came from.
struct LatentArchive {
  std::vector<LatentCode> codes;
  DType source_dtype = DType::kFloat64;
};

struct ReadOptions {
  std::size_t max_codes = 100'000;
};

/// Parses and validates the preamble and header dictionary only.
Header parse_header(std::span<const std::uint8_t> bytes);

/// Shape (18, 512) is promoted to a single code. float32 payloads are widened.
LatentArchive read_npy(std::span<const std::uint8_t> bytes, const ReadOptions& options = {});

/// Emits a v1.0 C-order file whose header layout matches numpy's own writer,
/// so read/write over numpy-produced (N, 18, 512) float64 files is
/// byte-identical. Throws kEmptyArchive or kNarrowingOverflow.
std::vector<std::uint8_t> write_npy(const LatentArchive& archive, DType dtype = DType::kFloat64);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace latentedit::npy
