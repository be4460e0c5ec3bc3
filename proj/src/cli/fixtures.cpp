#include <cmath>

#include "latentedit/cli.hpp"
#include "latentedit/random.hpp"

namespace latentedit::cli {

namespace {

constexpr std::size_t kHiddenWidth = 16;

AffineLayer random_layer(Rng& rng, std::size_t rows, std::size_t cols, Activation act) {
  AffineLayer layer;
  layer.rows = rows;
  layer.cols = cols;
  layer.activation = act;
  const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  layer.weights.resize(rows * cols);
  for (double& w : layer.weights) w = scale * rng.normal();
  layer.bias.resize(rows);
  for (double& b : layer.bias) b = 0.01 * rng.normal();
  return layer;
}

}  // namespace

npy::LatentArchive make_latent_fixture(std::uint64_t seed, std::size_t count) {
  Rng rng(seed);
  npy::LatentArchive archive;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<double> values(kEntries);
    for (double& v : values) v = rng.normal();
    archive.codes.push_back(LatentCode::from_values(std::move(values)));
  }
  return archive;
}

MapperModel make_toy_mapper(std::uint64_t seed) {
  Rng rng(seed ^ 0x6d61707065ULL);
  std::vector<MapperGroup> groups;
  for (const char* spec : {"0-3", "4-7", "8-17"}) {
    MapperGroup group;
    group.layers = LayerMask::parse(spec).active_layers();
    group.network.push_back(random_layer(rng, kHiddenWidth, kChannels, Activation::kLeakyRelu));
    group.network.push_back(random_layer(rng, kChannels, kHiddenWidth, Activation::kLinear));
    groups.push_back(std::move(group));
  }
  return MapperModel::create(std::move(groups));
}

void write_fixtures(std::uint64_t seed, const std::filesystem::path& out_dir, std::size_t count) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create '" + out_dir.string() + "': " + ec.message());
  }
  npy::write_file(out_dir / kLatentsFile, npy::write_npy(make_latent_fixture(seed, count)));
  npy::write_file(out_dir / kMapperFile, serialize_mapper(make_toy_mapper(seed)));
  npy::write_file(out_dir / kGeneratorFile,
                  npy::write_npy(ToyGenerator::canonical(seed).to_archive()));
}

}  // namespace latentedit::cli
