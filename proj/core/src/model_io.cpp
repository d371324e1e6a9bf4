#include "plotsteal/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace plotsteal {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'N', 'E', 'T', '0', '0', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& out, double d) {
  const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("model file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("model file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void save_model(const FeedforwardNet& net, std::ostream& out) {
  out.write(kMagic, sizeof(kMagic));
  std::uint32_t act = 0;
  switch (net.hidden_activation()) {
    case ActivationKind::relu: act = 0; break;
    case ActivationKind::elu: act = 1; break;
    case ActivationKind::tanh: act = 2; break;
  }
  write_u32(out, act);
  write_u32(out, static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    write_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
    write_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
    for (double v : layer.weight.values()) write_f64(out, v);
    for (double v : layer.bias) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("model write failed");
}

void save_model(const FeedforwardNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  save_model(net, out);
}

FeedforwardNet load_model(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a model file (bad magic)");
  const std::uint32_t act = read_u32(in);
  if (act > 2) throw std::runtime_error("model file: unknown activation code");
  const std::uint32_t layer_count = read_u32(in);
  if (layer_count == 0 || layer_count > 64) throw std::runtime_error("model file: bad layer count");

  FeedforwardNet net;
  Rng unused(0);
  std::vector<Layer> layers;
  layers.reserve(layer_count);
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows == 0 || cols == 0 || rows > 1u << 20 || cols > 1u << 20)
      throw std::runtime_error("model file: bad layer shape");
    Layer layer;
    layer.weight = Matrix(rows, cols);
    for (double& v : layer.weight.values()) v = read_f64(in);
    layer.bias.resize(cols);
    for (double& v : layer.bias) v = read_f64(in);
    layers.push_back(std::move(layer));
  }
  ActivationKind kind = act == 0   ? ActivationKind::relu
                        : act == 1 ? ActivationKind::elu
                                   : ActivationKind::tanh;
  // Rebuild through the public surface, then swap the real weights in.
  std::vector<std::size_t> dims;
  dims.push_back(layers.front().weight.rows());
  for (const auto& layer : layers) dims.push_back(layer.weight.cols());
  net = FeedforwardNet(dims, kind, unused);
  net.layers() = std::move(layers);
  net.validate();
  return net;
}

FeedforwardNet load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace plotsteal
