#include "posphase/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "posphase/errors.hpp"

namespace posphase::model {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'O', 'S', 'P', 'H', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw IoError("truncated checkpoint: " + path.string());
  }
  return value;
}

std::string read_string(std::istream& in, const std::filesystem::path& path) {
  const auto len = read_pod<std::uint32_t>(in, path);
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw IoError("truncated checkpoint: " + path.string());
  return s;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::size_t parse_size(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ConfigError(key, "missing");
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(it->second, &pos);
    if (pos != it->second.size() || v < 0) throw std::invalid_argument(key);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw ConfigError(key, "expected a non-negative integer, got '" + it->second + "'");
  }
}

}  // namespace

std::string serialize_config(const ModelConfig& c) {
  std::ostringstream os;
  os << "d_model=" << c.d_model << '\n'
     << "n_layers=" << c.n_layers << '\n'
     << "n_heads=" << c.n_heads << '\n'
     << "context_window=" << c.context_window << '\n'
     << "vocab_size=" << c.vocab_size << '\n'
     << "pe_scheme=" << to_string(c.pe_scheme) << '\n'
     << "attention_mode=" << to_string(c.attention_mode) << '\n'
     << "rel_max_distance=" << c.rel_max_distance << '\n'
     << "mlp_mult=" << c.mlp_mult << '\n';
  return os.str();
}

ModelConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", "malformed config line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  static const std::set<std::string> known{"d_model",        "n_layers",   "n_heads",
                                           "context_window", "vocab_size", "pe_scheme",
                                           "attention_mode", "rel_max_distance", "mlp_mult"};
  for (const auto& [key, value] : kv) {
    if (!known.count(key)) throw ConfigError(key, "unknown model config key");
  }
  ModelConfig c;
  c.d_model = parse_size(kv, "d_model");
  c.n_layers = parse_size(kv, "n_layers");
  c.n_heads = parse_size(kv, "n_heads");
  c.context_window = parse_size(kv, "context_window");
  c.vocab_size = parse_size(kv, "vocab_size");
  if (!kv.count("pe_scheme")) throw ConfigError("pe_scheme", "missing");
  c.pe_scheme = parse_pe_scheme(kv["pe_scheme"]);
  if (!kv.count("attention_mode")) throw ConfigError("attention_mode", "missing");
  c.attention_mode = parse_attention_mode(kv["attention_mode"]);
  c.rel_max_distance = static_cast<std::int32_t>(parse_size(kv, "rel_max_distance"));
  c.mlp_mult = parse_size(kv, "mlp_mult");
  c.validate();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Transformer& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof kMagic);
  write_pod(out, kVersion);
  write_string(out, serialize_config(model.config()));
  write_pod(out, static_cast<std::uint32_t>(model.parameters().size()));
  for (const auto& p : model.parameters()) {
    write_string(out, p.name);
    write_pod(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (std::size_t d : p.tensor.shape()) write_pod(out, static_cast<std::uint64_t>(d));
    auto data = p.tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size_bytes()));
  }
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Transformer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw IoError("not a checkpoint file: " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const ModelConfig config = parse_config(read_string(in, path));
  const auto count = read_pod<std::uint32_t>(in, path);
  std::vector<numerics::NamedTensor<float>> params;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = read_string(in, path);
    const auto rank = read_pod<std::uint32_t>(in, path);
    numerics::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(in, path));
    std::vector<float> data(numerics::shape_size(shape));
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(float)))) {
      throw IoError("truncated checkpoint: " + path.string());
    }
    params.push_back({std::move(name), numerics::Tensor::from_data(std::move(shape),
                                                                   std::move(data), true)});
  }
  return Transformer(config, std::move(params));
}

}  // namespace posphase::model
