#include "permll/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json_io.hpp"
#include "permll/errors.hpp"

namespace permll {
namespace {

using detail::json;

constexpr std::array<char, 8> kMagic{'P', 'E', 'R', 'M', 'L', 'L', 'C', 'K'};
constexpr const char* kFormatTag = "permll-checkpoint";

json layers_to_json(const std::vector<DenseLayer>& layers) {
  json out = json::array();
  for (const auto& l : layers) {
    const auto w = l.weight.flat();
    out.push_back({{"rows", l.weight.rows()},
                   {"cols", l.weight.cols()},
                   {"weight", std::vector<double>(w.begin(), w.end())},
                   {"bias", l.bias}});
  }
  return out;
}

void layers_from_json(const json& j, std::vector<DenseLayer>& layers) {
  if (j.size() != layers.size()) throw ParseError("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& item = j.at(l);
    const auto rows = item.at("rows").get<std::size_t>();
    const auto cols = item.at("cols").get<std::size_t>();
    const auto w = item.at("weight").get<std::vector<double>>();
    auto b = item.at("bias").get<std::vector<double>>();
    if (rows != layers[l].weight.rows() || cols != layers[l].weight.cols() ||
        w.size() != rows * cols || b.size() != rows)
      throw ParseError("checkpoint: layer shape mismatch");
    std::copy(w.begin(), w.end(), layers[l].weight.flat().begin());
    layers[l].bias = std::move(b);
  }
}

json to_document(const Checkpoint& ck) {
  const auto& spec = ck.model.spec();
  const auto a = ck.alpha.values();
  return json{{"format", kFormatTag},
              {"version", Checkpoint::kVersion},
              {"config_hash", ck.config_hash},
              {"epoch", ck.epoch},
              {"rng", {{"seed", ck.rng.seed}, {"position", ck.rng.position}}},
              {"model",
               {{"arch", std::string(to_string(spec.arch))},
                {"hidden", spec.hidden},
                {"input_dim", ck.model.input_dim()},
                {"classes", ck.model.classes()},
                {"layers", layers_to_json(ck.model.layers())}}},
              {"velocity", layers_to_json(ck.velocity.layers)},
              {"alpha",
               {{"classes", ck.alpha.classes()},
                {"noisy_labels", ck.alpha.noisy_labels()},
                {"values", std::vector<double>(a.begin(), a.end())}}},
              {"report", detail::report_to_json_value(ck.report)}};
}

Checkpoint from_document(const json& doc) {
  if (doc.value("format", std::string()) != kFormatTag)
    throw ParseError("not a permll checkpoint");
  const auto version = doc.at("version").get<std::uint32_t>();
  if (version != Checkpoint::kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_hash = doc.at("config_hash").get<std::string>();
  ck.epoch = doc.at("epoch").get<std::size_t>();
  ck.rng.seed = doc.at("rng").at("seed").get<std::uint64_t>();
  ck.rng.position = doc.at("rng").at("position").get<std::uint64_t>();

  const auto& m = doc.at("model");
  ModelSpec spec{parse_arch(m.at("arch").get<std::string>()), m.at("hidden").get<std::size_t>()};
  ck.model = Classifier(spec, m.at("input_dim").get<std::size_t>(),
                        m.at("classes").get<std::size_t>());
  layers_from_json(m.at("layers"), ck.model.layers());
  ck.velocity = ck.model.zeros_like();
  layers_from_json(doc.at("velocity"), ck.velocity.layers);

  const auto& a = doc.at("alpha");
  ck.alpha = AlphaTable(a.at("classes").get<std::size_t>(),
                        a.at("noisy_labels").get<std::vector<ClassIndex>>());
  const auto values = a.at("values").get<std::vector<double>>();
  if (values.size() != ck.alpha.values().size()) throw ParseError("checkpoint: alpha size mismatch");
  std::copy(values.begin(), values.end(), ck.alpha.values().begin());
  ck.report = detail::report_from_json_value(doc.at("report"));
  return ck;
}

}  // namespace

CheckpointFormat parse_checkpoint_format(std::string_view name) {
  if (name == "json") return CheckpointFormat::json;
  if (name == "binary") return CheckpointFormat::binary;
  throw ConfigError("unknown checkpoint format '" + std::string(name) +
                    "' (expected json or binary)");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt,
                     CheckpointFormat format) {
  const json doc = to_document(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  if (format == CheckpointFormat::json) {
    out << doc.dump() << '\n';
  } else {
    out.write(kMagic.data(), kMagic.size());
    const std::uint32_t v = Checkpoint::kVersion;
    const unsigned char le[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v >> 16),
                                 static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(le), 4);
    const std::vector<std::uint8_t> body = json::to_cbor(doc);
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
  }
  if (!out) throw ParseError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    if (bytes.size() >= 12 && std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) == 0) {
      const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
      const std::uint32_t version = std::uint32_t{u[8]} | (std::uint32_t{u[9]} << 8) |
                                    (std::uint32_t{u[10]} << 16) | (std::uint32_t{u[11]} << 24);
      if (version != Checkpoint::kVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version));
      return from_document(json::from_cbor(bytes.begin() + 12, bytes.end()));
    }
    return from_document(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace permll
