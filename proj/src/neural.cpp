#include "crloc/neural.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "model container is little-endian; add byte swapping for this platform");

namespace crloc::neural {

NetworkSpec NetworkSpec::paper() {
  NetworkSpec s;
  s.input_h = s.input_w = 180;
  // Valid 3x3 convs leave room for four pool stages on a 180px input;
  // the map entering the dense head is 3x3x512.
  const int filters[] = {64, 64, 128, 128, 256, 256, 512};
  for (int i = 0; i < 7; ++i) {
    s.layers.push_back(LayerSpec::conv(filters[i], 3));
    s.layers.push_back(LayerSpec::relu());
    if (i < 4) s.layers.push_back(LayerSpec::maxpool());
  }
  s.layers.push_back(LayerSpec::flatten());
  s.layers.push_back(LayerSpec::dense(256));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::dense(2));
  return s;
}

NetworkSpec NetworkSpec::desk() {
  NetworkSpec s;
  s.input_h = s.input_w = 64;
  const int filters[] = {8, 16, 32, 32};
  for (int i = 0; i < 4; ++i) {
    s.layers.push_back(LayerSpec::conv(filters[i], 3));
    s.layers.push_back(LayerSpec::relu());
    if (i < 3) s.layers.push_back(LayerSpec::maxpool());
  }
  s.layers.push_back(LayerSpec::flatten());
  s.layers.push_back(LayerSpec::dense(64));
  s.layers.push_back(LayerSpec::relu());
  s.layers.push_back(LayerSpec::dense(2));
  return s;
}

std::string NetworkSpec::to_text() const {
  std::ostringstream os;
  os << "input " << input_h << " " << input_w << "\n";
  for (const LayerSpec& l : layers) {
    switch (l.kind) {
      case LayerKind::conv:
        os << "conv " << l.filters << " " << l.kernel << " " << (l.trainable ? 1 : 0) << "\n";
        break;
      case LayerKind::maxpool: os << "maxpool\n"; break;
      case LayerKind::relu: os << "relu\n"; break;
      case LayerKind::flatten: os << "flatten\n"; break;
      case LayerKind::dense:
        os << "dense " << l.units << " " << (l.trainable ? 1 : 0) << "\n";
        break;
    }
  }
  return os.str();
}

NetworkSpec NetworkSpec::from_text(const std::string& text) {
  NetworkSpec s;
  std::istringstream is(text);
  std::string line;
  bool have_input = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "input") {
      ls >> s.input_h >> s.input_w;
      have_input = true;
    } else if (kind == "conv") {
      LayerSpec l = LayerSpec::conv(0, 0);
      int tr = 1;
      ls >> l.filters >> l.kernel >> tr;
      l.trainable = tr != 0;
      s.layers.push_back(l);
    } else if (kind == "maxpool") {
      s.layers.push_back(LayerSpec::maxpool());
    } else if (kind == "relu") {
      s.layers.push_back(LayerSpec::relu());
    } else if (kind == "flatten") {
      s.layers.push_back(LayerSpec::flatten());
    } else if (kind == "dense") {
      LayerSpec l = LayerSpec::dense(0);
      int tr = 1;
      ls >> l.units >> tr;
      l.trainable = tr != 0;
      s.layers.push_back(l);
    } else {
      throw std::runtime_error("NetworkSpec: unknown layer kind '" + kind + "'");
    }
    if (ls.fail()) throw std::runtime_error("NetworkSpec: malformed line '" + line + "'");
  }
  if (!have_input) throw std::runtime_error("NetworkSpec: missing input line");
  return s;
}

double loss_mse(std::span<const Vec2> pred, std::span<const Vec2> truth) {
  if (pred.empty() || pred.size() != truth.size())
    throw std::invalid_argument("loss_mse: empty batch or size mismatch");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]).squaredNorm();
  return s / (2.0 * static_cast<double>(pred.size()));
}

namespace {

constexpr char kMagic[5] = {'C', 'R', 'C', 'N', 'N'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("model file truncated");
  return v;
}

void write_floats(std::ostream& os, const float* data, size_t n) {
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

void read_floats(std::istream& is, float* data, size_t n) {
  is.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw std::runtime_error("model file truncated");
}

}  // namespace

void save_model(const NetworkF& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_model: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod(os, kVersion);
  const std::string spec = net.spec().to_text();
  write_pod(os, static_cast<uint32_t>(spec.size()));
  os.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  write_pod(os, net.init_seed());
  write_pod(os, net.adam_step_count());
  for (size_t li = 0; li < net.spec().layers.size(); ++li) {
    const int i = static_cast<int>(li);
    if (!net.has_params(i)) continue;
    const auto& W = net.weights(i);
    write_pod(os, static_cast<uint32_t>(W.rows()));
    write_pod(os, static_cast<uint32_t>(W.cols()));
    write_floats(os, W.data(), static_cast<size_t>(W.size()));
    write_floats(os, net.bias(i).data(), static_cast<size_t>(net.bias(i).size()));
    write_floats(os, net.adam_m(i).data(), static_cast<size_t>(W.size()));
    write_floats(os, net.adam_v(i).data(), static_cast<size_t>(W.size()));
    write_floats(os, net.adam_mb(i).data(), static_cast<size_t>(net.bias(i).size()));
    write_floats(os, net.adam_vb(i).data(), static_cast<size_t>(net.bias(i).size()));
  }
  if (!os) throw std::runtime_error("save_model: write failed for " + path);
}

NetworkF load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_model: cannot open " + path);
  char magic[5];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("load_model: bad magic (not a CRCNN model file)");
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw std::runtime_error("load_model: unsupported version " + std::to_string(version));
  const uint32_t spec_len = read_pod<uint32_t>(is);
  std::string spec_text(spec_len, '\0');
  is.read(spec_text.data(), spec_len);
  if (!is) throw std::runtime_error("model file truncated");
  const uint64_t init_seed = read_pod<uint64_t>(is);
  const uint64_t steps = read_pod<uint64_t>(is);

  NetworkF net(NetworkSpec::from_text(spec_text), init_seed);
  net.adam_step_count() = steps;
  for (size_t li = 0; li < net.spec().layers.size(); ++li) {
    const int i = static_cast<int>(li);
    if (!net.has_params(i)) continue;
    const auto rows = static_cast<Eigen::Index>(read_pod<uint32_t>(is));
    const auto cols = static_cast<Eigen::Index>(read_pod<uint32_t>(is));
    if (rows != net.weights(i).rows() || cols != net.weights(i).cols())
      throw std::runtime_error("load_model: weight shape mismatch at layer " + std::to_string(i));
    read_floats(is, net.weights(i).data(), static_cast<size_t>(net.weights(i).size()));
    read_floats(is, net.bias(i).data(), static_cast<size_t>(net.bias(i).size()));
    read_floats(is, net.adam_m(i).data(), static_cast<size_t>(net.weights(i).size()));
    read_floats(is, net.adam_v(i).data(), static_cast<size_t>(net.weights(i).size()));
    read_floats(is, net.adam_mb(i).data(), static_cast<size_t>(net.bias(i).size()));
    read_floats(is, net.adam_vb(i).data(), static_cast<size_t>(net.bias(i).size()));
  }
  return net;
}

}  // namespace crloc::neural
