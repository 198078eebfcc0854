#include "pamnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "pamnet/config.hpp"
#include "pamnet/errors.hpp"

namespace pamnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'A', 'M', 'N', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(std::uint32_t(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    T v;
    std::memcpy(&v, take(sizeof(T), what), sizeof(T));
    return v;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    const auto* p = take(n, what);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const std::uint8_t* take(std::size_t n, const char* what) {
    if (n > bytes_.size() - offset_) {
      throw FormatError("checkpoint truncated at offset " + std::to_string(offset_) + " reading " + what + " (" +
                        std::to_string(n) + " bytes wanted, " + std::to_string(bytes_.size() - offset_) + " left)");
    }
    const auto* p = bytes_.data() + offset_;
    offset_ += n;
    return p;
  }
  std::size_t offset() const { return offset_; }
  bool done() const { return offset_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelParams<float>& params, const ModelConfig& config,
                                            const CheckpointMeta& meta) {
  Writer w;
  w.put_bytes(kMagic, sizeof kMagic);
  w.put(kCheckpointVersion);
  w.put_string(dump_model_config(config));
  w.put(meta.seed);
  w.put(meta.best_epoch);
  std::vector<const Parameter<float>*> stored;
  for (const auto* p : params.all())
    if (parameter_is_active(p->name, config)) stored.push_back(p);
  w.put(std::uint32_t(stored.size()));
  for (const auto* p : stored) {
    w.put_string(p->name);
    w.put(std::uint32_t(p->value.rank()));
    for (auto d : p->value.shape()) w.put(std::uint32_t(d));
    w.put_bytes(p->value.data().data(), p->value.size() * sizeof(float));
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(sizeof kMagic, "magic"), kMagic, sizeof kMagic) != 0) {
    throw FormatError("bad checkpoint magic at offset 0");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ck;
  const std::size_t config_at = r.offset();
  try {
    ck.config = parse_model_config(r.get_string("config"));
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError("invalid embedded config at offset " + std::to_string(config_at) + ": " + e.what());
  }
  ck.meta.seed = r.get<std::uint64_t>("seed");
  ck.meta.best_epoch = r.get<std::uint32_t>("best_epoch");

  // Shapes come from the config; stored tensors must match them exactly.
  ck.params = init_params<float>(ck.config, 0);
  for (auto* p : ck.params.all())
    if (!p->frozen) p->value.fill(0.0f);
  ck.params.zero_grad();

  std::set<std::string> expected;
  for (const auto* p : ck.params.all())
    if (parameter_is_active(p->name, ck.config)) expected.insert(p->name);

  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const std::string name = r.get_string("tensor name");
    if (!expected.erase(name)) throw FormatError("unexpected tensor '" + name + "' at offset " + std::to_string(at));
    Parameter<float>* p = ck.params.find(name);
    const auto rank = r.get<std::uint32_t>("tensor rank");
    if (rank != p->value.rank()) throw FormatError("rank mismatch for '" + name + "' at offset " + std::to_string(at));
    Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(r.get<std::uint32_t>("tensor dims"));
    if (shape != p->value.shape()) {
      throw FormatError("tensor '" + name + "' has shape " + shape_to_string(shape) + " but the config implies " +
                        shape_to_string(p->value.shape()));
    }
    std::memcpy(p->value.data().data(), r.take(p->value.size() * sizeof(float), "tensor payload"),
                p->value.size() * sizeof(float));
  }
  if (!expected.empty()) throw FormatError("checkpoint is missing tensor '" + *expected.begin() + "'");
  if (!r.done()) throw FormatError("trailing bytes after offset " + std::to_string(r.offset()));
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams<float>& params, const ModelConfig& config,
                     const CheckpointMeta& meta) {
  const auto bytes = encode_checkpoint(params, config, meta);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace pamnet
