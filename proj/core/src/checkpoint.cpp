#include "motifset/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "motifset/binary_io.hpp"
#include "motifset/errors.hpp"

namespace motifset {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'T', 'I', 'F', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_values(std::ostream& os, const std::vector<T>& values) {
  binary::write_u64(os, values.size());
  for (const T v : values) binary::write_f64(os, static_cast<double>(v));
}

template <typename T>
std::vector<T> read_values(std::istream& is, std::size_t expected) {
  const std::uint64_t n = binary::read_u64(is);
  if (n != expected) throw DataError("checkpoint array has " + std::to_string(n) + " values, expected " +
                                     std::to_string(expected));
  std::vector<T> out(n);
  for (auto& v : out) v = static_cast<T>(binary::read_f64(is));
  return out;
}

}  // namespace

template <typename T>
void save_checkpoint(std::ostream& os, const BasicNetwork<T>& network) {
  const NetworkOptions& opt = network.options();
  os.write(kMagic, sizeof kMagic);
  binary::write_u32(os, kVersion);
  binary::write_u32(os, static_cast<std::uint32_t>(opt.weight_mode));
  binary::write_u32(os, static_cast<std::uint32_t>(opt.activation));
  binary::write_u32(os, static_cast<std::uint32_t>(opt.init));
  binary::write_u32(os, static_cast<std::uint32_t>(network.topology().density_spec().mode));
  binary::write_f64(os, network.topology().density_spec().value);
  binary::write_string(os, topology_to_string(network.topology()));
  for (std::size_t i = 0; i < network.layer_count(); ++i) {
    write_values(os, network.layer(i).weights.values());
    write_values(os, network.layer(i).bias);
  }
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const BasicNetwork<T>& network) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  save_checkpoint(out, network);
  if (!out) throw FileError("failed writing " + path.string());
}

template <typename T>
BasicNetwork<T> load_checkpoint(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic)) {
    throw DataError("not a motifset checkpoint");
  }
  const std::uint32_t version = binary::read_u32(is);
  if (version != kVersion) throw DataError("unsupported checkpoint version " + std::to_string(version));
  NetworkOptions opt;
  const std::uint32_t mode = binary::read_u32(is);
  const std::uint32_t act = binary::read_u32(is);
  const std::uint32_t init = binary::read_u32(is);
  const std::uint32_t density_mode = binary::read_u32(is);
  if (mode > 1 || act > 1 || init > 1 || density_mode > 1) throw DataError("checkpoint header has unknown enums");
  opt.weight_mode = static_cast<WeightMode>(mode);
  opt.activation = static_cast<Activation>(act);
  opt.init = static_cast<InitScheme>(init);
  BlockDensitySpec density{static_cast<BlockDensitySpec::Mode>(density_mode), binary::read_f64(is)};

  std::istringstream topo_text(binary::read_string(is));
  MotifTopology topology = read_topology(topo_text);
  topology.set_density_spec(density);

  BasicNetwork<T> net(std::move(topology), opt);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    SparseLayer<T>& l = net.layer(i);
    l.weights.values() = read_values<T>(is, l.weights.size());
    l.bias = read_values<T>(is, l.bias.size());
  }
  return net;
}

template <typename T>
BasicNetwork<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  return load_checkpoint<T>(in);
}

template void save_checkpoint<double>(std::ostream&, const BasicNetwork<double>&);
template void save_checkpoint<float>(std::ostream&, const BasicNetwork<float>&);
template void save_checkpoint<double>(const std::filesystem::path&, const BasicNetwork<double>&);
template void save_checkpoint<float>(const std::filesystem::path&, const BasicNetwork<float>&);
template BasicNetwork<double> load_checkpoint<double>(std::istream&);
template BasicNetwork<float> load_checkpoint<float>(std::istream&);
template BasicNetwork<double> load_checkpoint<double>(const std::filesystem::path&);
template BasicNetwork<float> load_checkpoint<float>(const std::filesystem::path&);

}  // namespace motifset
