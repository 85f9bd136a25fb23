#include "malcraft/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace malcraft {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated model checkpoint");
  return value;
}

}  // namespace

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());

  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(model.input_dim));
  write_raw(out, static_cast<std::uint32_t>(model.layer_count()));
  for (const Matrix& w : model.weights) {
    write_raw(out, static_cast<std::uint32_t>(w.rows()));
    write_raw(out, static_cast<std::uint32_t>(w.cols()));
  }
  write_raw(out, model.temperature);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Matrix& w = model.weights[l];
    out.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(sizeof(double)) * w.size());
    const Vector& b = model.biases[l];
    out.write(reinterpret_cast<const char*>(b.data()),
              static_cast<std::streamsize>(sizeof(double)) * b.size());
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

MlpModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a model checkpoint: " + path.string());
  }
  const auto version = read_raw<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }

  MlpModel model;
  model.input_dim = static_cast<FeatureIndex>(read_raw<std::uint32_t>(in));
  const auto layers = read_raw<std::uint32_t>(in);
  if (layers == 0 || layers > 64) {
    throw std::runtime_error("implausible layer count in checkpoint");
  }
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
  for (std::uint32_t l = 0; l < layers; ++l) {
    auto rows = read_raw<std::uint32_t>(in);
    auto cols = read_raw<std::uint32_t>(in);
    shapes.emplace_back(rows, cols);
  }
  model.temperature = read_raw<double>(in);
  for (auto [rows, cols] : shapes) {
    Matrix w(rows, cols);
    in.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(sizeof(double)) * w.size());
    Vector b(cols);
    in.read(reinterpret_cast<char*>(b.data()),
            static_cast<std::streamsize>(sizeof(double)) * b.size());
    if (!in) throw std::runtime_error("truncated model checkpoint");
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  return model;
}

}  // namespace malcraft
