#include "latentedit/kernels.hpp"

#include <cstring>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace latentedit {
namespace {

using testing::random_grid;

bool same_bits(const LayerValues& a, const LayerValues& b) {
  return std::memcmp(a.data(), b.data(), sizeof(LayerValues)) == 0;
}

TEST(KernelsTest, ReductionsMatchBitwise) {
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_grid(rng, 10.0);
    const auto b = random_grid(rng, 10.0);
    EXPECT_TRUE(same_bits(kernels::serial::layer_abs_sums(a), kernels::parallel::layer_abs_sums(a)));
    EXPECT_TRUE(
        same_bits(kernels::serial::layer_square_sums(a), kernels::parallel::layer_square_sums(a)));
    EXPECT_TRUE(same_bits(kernels::serial::layer_dots(a, b), kernels::parallel::layer_dots(a, b)));
  }
}

TEST(KernelsTest, LayerDotsAgainstNaiveLoop) {
  Rng rng(22);
  const auto a = random_grid(rng);
  const auto b = random_grid(rng);
  const auto dots = kernels::layer_dots(a, b);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < kChannels; ++c) s += a[i * kChannels + c] * b[i * kChannels + c];
    EXPECT_EQ(dots[i], s);
  }
}

TEST(KernelsTest, ScaledAddRowsCopiesUnselectedRows) {
  Rng rng(23);
  const auto w = random_grid(rng);
  const auto d = random_grid(rng);
  std::bitset<kNumLayers> rows;
  rows.set(3).set(11);
  std::vector<double> s(kEntries), p(kEntries);
  kernels::serial::scaled_add_rows(w, d, 0.7, rows, s);
  kernels::parallel::scaled_add_rows(w, d, 0.7, rows, p);
  EXPECT_EQ(std::memcmp(s.data(), p.data(), kEntries * sizeof(double)), 0);
  for (std::size_t i = 0; i < kNumLayers; ++i) {
    if (rows.test(i)) continue;
    EXPECT_EQ(std::memcmp(&s[i * kChannels], &w[i * kChannels], kChannels * sizeof(double)), 0);
  }
}

TEST(KernelsTest, AffineMatchesBitwiseAcrossSizes) {
  Rng rng(24);
  for (auto [rows, cols] : {std::pair{1, 1}, {7, 3}, {512, 16}, {16, 512}, {300, 300}}) {
    std::vector<double> w(rows * cols), b(rows), x(cols), s(rows), p(rows);
    for (double& v : w) v = rng.normal();
    for (double& v : b) v = rng.normal();
    for (double& v : x) v = rng.normal();
    kernels::serial::affine(w, b, x, s);
    kernels::parallel::affine(w, b, x, p);
    EXPECT_EQ(std::memcmp(s.data(), p.data(), rows * sizeof(double)), 0) << rows << "x" << cols;
  }
}

TEST(KernelsTest, SumLayersIsInOrder) {
  LayerValues v{};
  v[0] = 1e16;
  v[1] = 1.0;
  v[2] = -1e16;
  EXPECT_EQ(kernels::sum_layers(v), ((1e16 + 1.0) - 1e16));
}

}  // namespace
}  // namespace latentedit
