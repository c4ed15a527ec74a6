#include "stcl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "stcl/error.hpp"
#include "stcl/hash.hpp"

namespace stcl {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

class Writer {
 public:
  template <typename V>
  void put(V v) {
    unsigned char buf[sizeof(V)];
    std::memcpy(buf, &v, sizeof(V));
    bytes.insert(bytes.end(), buf, buf + sizeof(V));
  }
  void put_string(const std::string& s) {
    if (s.size() > 0xFFFF) throw ValidationError("checkpoint: name too long: " + s.substr(0, 32));
    put(static_cast<std::uint16_t>(s.size()));
    bytes.insert(bytes.end(), s.begin(), s.end());
  }
  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(V));
    pos_ += sizeof(V);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return end_ - pos_; }
  void need(std::size_t n) const {
    if (n > end_ - pos_) throw CheckpointError(CheckpointFault::malformed, "record runs past the end of the file");
  }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* data, std::size_t size) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), data, static_cast<uInt>(size)));
}

constexpr std::size_t kPrefix = 4 + 2;
constexpr std::size_t kTrailer = 4;

const char* const kArchitectureFields[] = {"image_height", "image_width", "payload_depth",
                                           "encoder_layers", "decoder_layers", "hidden_channels"};

}  // namespace

std::uint64_t Checkpoint::field(const std::string& key) const {
  for (const auto& [k, v] : config) {
    if (k == key) return v;
  }
  throw CheckpointError(CheckpointFault::config_mismatch, "missing config field '" + key + "'");
}

std::uint64_t Checkpoint::fingerprint() const {
  const auto bytes = serialize_checkpoint(*this);
  Fnv1a h;
  h.add_bytes(bytes.data(), bytes.size());
  return h.digest();
}

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.bytes.insert(w.bytes.end(), std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  w.put(kCheckpointVersion);
  w.put_string(checkpoint.kind);
  w.put(static_cast<std::uint16_t>(checkpoint.config.size()));
  for (const auto& [key, value] : checkpoint.config) {
    w.put_string(key);
    w.put(value);
  }
  w.put(static_cast<std::uint32_t>(checkpoint.arrays.size()));
  for (const auto& a : checkpoint.arrays) {
    if (shape_numel(a.shape) != a.values.size()) {
      throw ValidationError("checkpoint: array '" + a.name + "' has " + std::to_string(a.values.size()) +
                            " values for shape " + shape_str(a.shape));
    }
    w.put_string(a.name);
    w.put(static_cast<std::uint8_t>(a.shape.size()));
    for (auto d : a.shape) w.put(static_cast<std::uint32_t>(d));
    for (double v : a.values) w.put(static_cast<float>(v));
  }
  w.put(crc_of(w.bytes.data(), w.bytes.size()));
  return std::move(w.bytes);
}

Checkpoint parse_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(CheckpointFault::bad_magic, "file does not start with \"STCL\"");
  }
  if (bytes.size() < kPrefix + kTrailer) {
    throw CheckpointError(CheckpointFault::checksum_mismatch,
                          "file is truncated (" + std::to_string(bytes.size()) + " bytes)");
  }
  std::uint16_t version;
  std::memcpy(&version, bytes.data() + 4, 2);
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointFault::unsupported_version,
                          "version " + std::to_string(version) + ", this build reads " +
                              std::to_string(kCheckpointVersion));
  }
  const std::size_t body = bytes.size() - kTrailer;
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + body, 4);
  if (stored != crc_of(bytes.data(), body)) {
    throw CheckpointError(CheckpointFault::checksum_mismatch, "CRC-32 does not match the file contents");
  }

  Reader r(bytes, body);
  r.need(kPrefix);
  for (std::size_t i = 0; i < kPrefix; ++i) r.get<unsigned char>();
  Checkpoint out;
  out.kind = r.get_string();
  const auto fields = r.get<std::uint16_t>();
  for (std::uint16_t i = 0; i < fields; ++i) {
    auto key = r.get_string();
    out.config.emplace_back(std::move(key), r.get<std::uint64_t>());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string();
    const auto rank = r.get<std::uint8_t>();
    for (std::uint8_t k = 0; k < rank; ++k) a.shape.push_back(r.get<std::uint32_t>());
    const std::size_t n = shape_numel(a.shape);
    r.need(n * sizeof(float));
    a.values.resize(n);
    for (auto& v : a.values) v = r.get<float>();
    out.arrays.push_back(std::move(a));
  }
  if (r.remaining() != 0) {
    throw CheckpointError(CheckpointFault::malformed, std::to_string(r.remaining()) + " trailing bytes");
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = serialize_checkpoint(checkpoint);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return parse_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(e.fault(), path.string() + ": " + (std::strchr(e.what(), ':') + 2));
  }
}

Checkpoint model_checkpoint(const Model& model) {
  const auto& c = model.config();
  Checkpoint out;
  out.kind = "stego-model";
  out.config = {{"image_height", c.image_height},     {"image_width", c.image_width},
                {"payload_depth", c.payload_depth},   {"encoder_layers", c.encoder_layers},
                {"decoder_layers", c.decoder_layers}, {"hidden_channels", c.hidden_channels},
                {"seed", c.seed}};
  out.arrays = model.state();
  return out;
}

ModelConfig model_config_from(const Checkpoint& checkpoint) {
  if (checkpoint.kind != "stego-model") {
    throw CheckpointError(CheckpointFault::config_mismatch,
                          "expected a stego-model checkpoint, found '" + checkpoint.kind + "'");
  }
  ModelConfig c;
  c.image_height = checkpoint.field("image_height");
  c.image_width = checkpoint.field("image_width");
  c.payload_depth = checkpoint.field("payload_depth");
  c.encoder_layers = checkpoint.field("encoder_layers");
  c.decoder_layers = checkpoint.field("decoder_layers");
  c.hidden_channels = checkpoint.field("hidden_channels");
  c.seed = checkpoint.field("seed");
  return c;
}

Model model_from(const Checkpoint& checkpoint) {
  Model model(model_config_from(checkpoint));
  model.load_state(checkpoint.arrays);
  return model;
}

void restore_model(Model& model, const Checkpoint& checkpoint) {
  const auto ours = model_checkpoint(model);
  model_config_from(checkpoint);
  for (const char* key : kArchitectureFields) {
    if (ours.field(key) != checkpoint.field(key)) {
      throw CheckpointError(CheckpointFault::config_mismatch,
                            std::string(key) + " is " + std::to_string(checkpoint.field(key)) +
                                " in the checkpoint but " + std::to_string(ours.field(key)) +
                                " in the model");
    }
  }
  model.load_state(checkpoint.arrays);
}

}  // namespace stcl
