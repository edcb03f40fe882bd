#include "idil/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "idil/error.hpp"
#include "idil/io.hpp"

// Layout: 8-byte magic, u32 version, u64 header length, JSON header, then
// for each parameter array a u64 count followed by little-endian doubles.

namespace idil::model {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'I', 'D', 'I', 'L', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, const T& value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<double> doubles(std::size_t n) {
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError(source_, 0, "truncated checkpoint");
  }

  const std::string& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& cfg = ckpt.model.config();
  json header = {
      {"format", "idil-ood-checkpoint"},
      {"version", kCheckpointVersion},
      {"model",
       {{"input_dim", cfg.input_dim},
        {"hidden_dim", cfg.hidden_dim},
        {"num_labels", cfg.num_labels},
        {"init_seed", cfg.init_seed}}},
      {"labels", ckpt.labels},
      {"feature_dim", ckpt.feature_dim},
      {"seed", ckpt.seed},
      {"loss", ckpt.loss},
  };
  json params = json::array();
  for (const auto& p : ckpt.model.parameters()) params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  header["parameters"] = params;

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string text = header.dump();
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& p : ckpt.model.parameters()) {
    const auto v = p.tensor.values();
    put<std::uint64_t>(out, v.size());
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  Reader in(bytes, source);
  if (in.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw ParseError(source, 0, "not a checkpoint file");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw ParseError(source, 0, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = in.get<std::uint64_t>();
  json header;
  try {
    header = json::parse(in.take(header_len));
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("bad checkpoint header: ") + e.what());
  }

  try {
    ModelConfig cfg;
    cfg.input_dim = header.at("model").at("input_dim").get<std::size_t>();
    cfg.hidden_dim = header.at("model").at("hidden_dim").get<std::size_t>();
    cfg.num_labels = header.at("model").at("num_labels").get<std::size_t>();
    cfg.init_seed = header.at("model").at("init_seed").get<std::uint64_t>();

    std::vector<std::vector<double>> values;
    for (const auto& p : header.at("parameters")) {
      const auto shape = p.at("shape").get<std::vector<std::size_t>>();
      const auto count = in.get<std::uint64_t>();
      if (count != ad::element_count(shape)) {
        throw ParseError(source, 0, "parameter " + p.at("name").get<std::string>() + " has wrong length");
      }
      values.push_back(in.doubles(count));
    }
    if (!in.at_end()) throw ParseError(source, 0, "trailing bytes after parameters");

    return Checkpoint{MlpClassifier::from_parameters(cfg, std::move(values)),
                      header.at("labels").get<std::vector<std::string>>(),
                      header.at("feature_dim").get<std::size_t>(), header.at("seed").get<std::uint64_t>(),
                      header.at("loss").get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(source, 0, std::string("bad checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_text(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_text(path), path.string());
}

}  // namespace idil::model
