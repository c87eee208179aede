#include "nmguard/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nmguard/error.hpp"
#include "nmguard/rng.hpp"

namespace nmguard {

namespace {

using nlohmann::ordered_json;

constexpr std::array<char, 8> kBlobMagic{'N', 'M', 'G', 'W', 'T', 'S', '0', '1'};

nn::LayerKind parse_kind(std::string_view text) {
  for (auto k : {nn::LayerKind::Dense, nn::LayerKind::Conv1D, nn::LayerKind::Gru, nn::LayerKind::Flatten}) {
    if (nn::to_string(k) == text) return k;
  }
  throw DataError("checkpoint: unknown layer kind '" + std::string(text) + "'");
}

void put_u64(std::ostream& out, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xffU);
  out.write(b, 8);
}

std::uint64_t get_u64(const unsigned char* b) {
  std::uint64_t x = 0;
  for (int i = 7; i >= 0; --i) x = (x << 8) | b[i];
  return x;
}

ordered_json describe(const nn::Network& net, std::size_t offset) {
  ordered_json layers = ordered_json::array();
  for (const auto& s : net.specs()) {
    layers.push_back({{"kind", nn::to_string(s.kind)},
                      {"units", s.units},
                      {"activation", nn::to_string(s.activation)},
                      {"return_sequences", s.return_sequences}});
  }
  ordered_json params = ordered_json::array();
  for (const auto* p : net.parameters()) params.push_back({{"name", p->name}, {"shape", p->value().shape()}});
  return {{"name", net.name()},
          {"input", {{"steps", net.input_shape().steps}, {"width", net.input_shape().width}}},
          {"layers", layers},
          {"parameters", params},
          {"offset", offset},
          {"count", net.parameter_count()}};
}

std::string read_all(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw DataError("checkpoint: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_networks(const std::filesystem::path& dir, std::span<const nn::Network* const> networks,
                   const CheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  std::vector<double> blob;
  ordered_json models = ordered_json::array();
  for (const auto* net : networks) {
    models.push_back(describe(*net, blob.size()));
    const auto flat = net->flat_parameters();
    blob.insert(blob.end(), flat.begin(), flat.end());
  }

  std::string bytes;
  bytes.reserve(blob.size() * 8);
  for (double v : blob) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xffU));
  }
  {
    std::ofstream out(dir / "weights.bin", std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot write " + (dir / "weights.bin").string());
    out.write(kBlobMagic.data(), kBlobMagic.size());
    put_u64(out, blob.size());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  ordered_json manifest;
  manifest["magic"] = kCheckpointMagic;
  manifest["version"] = kCheckpointVersion;
  manifest["kind"] = info.kind;
  manifest["forwarding"] = info.forwarding;
  manifest["normalizer_fingerprint"] = info.normalizer_fingerprint;
  manifest["seed"] = info.seed;
  manifest["config_hash"] = info.config_hash;
  manifest["blob"] = {{"file", "weights.bin"}, {"values", blob.size()}, {"fnv1a64", fnv1a64(bytes)}};
  manifest["models"] = models;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("checkpoint: cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(1) << '\n';
}

Checkpoint load_networks(const std::filesystem::path& dir) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_all(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint manifest: ") + e.what());
  }
  try {
    if (m.at("magic") != kCheckpointMagic) throw DataError("checkpoint: bad magic string");
    if (m.at("version") != kCheckpointVersion) {
      throw DataError("checkpoint: unsupported version " + m.at("version").dump());
    }
    Checkpoint ck;
    ck.info.kind = m.at("kind").get<std::string>();
    ck.info.forwarding = m.at("forwarding").get<std::string>();
    ck.info.normalizer_fingerprint = m.at("normalizer_fingerprint").get<std::string>();
    ck.info.seed = m.at("seed").get<std::uint64_t>();
    ck.info.config_hash = m.at("config_hash").get<std::string>();

    const std::string raw = read_all(dir / m.at("blob").at("file").get<std::string>(), std::ios::binary);
    if (raw.size() < 16 || std::memcmp(raw.data(), kBlobMagic.data(), kBlobMagic.size()) != 0) {
      throw DataError("checkpoint: weights blob has a bad header");
    }
    const auto* ubytes = reinterpret_cast<const unsigned char*>(raw.data());
    const std::uint64_t count = get_u64(ubytes + 8);
    if (count != m.at("blob").at("values").get<std::uint64_t>() || raw.size() != 16 + 8 * count) {
      throw DataError("checkpoint: weights blob length disagrees with the manifest");
    }
    if (fnv1a64(std::string_view(raw).substr(16)) != m.at("blob").at("fnv1a64").get<std::uint64_t>()) {
      throw DataError("checkpoint: weights blob checksum mismatch");
    }
    std::vector<double> blob(count);
    for (std::uint64_t i = 0; i < count; ++i) blob[i] = std::bit_cast<double>(get_u64(ubytes + 16 + 8 * i));

    for (const auto& jm : m.at("models")) {
      std::vector<nn::LayerSpec> specs;
      for (const auto& jl : jm.at("layers")) {
        specs.push_back({parse_kind(jl.at("kind").get<std::string>()), jl.at("units").get<std::size_t>(),
                         nn::parse_activation(jl.at("activation").get<std::string>()),
                         jl.at("return_sequences").get<bool>()});
      }
      const nn::InputShape input{jm.at("input").at("steps").get<std::size_t>(),
                                 jm.at("input").at("width").get<std::size_t>()};
      Rng rng(0);
      nn::Network net = nn::build_network(jm.at("name").get<std::string>(), input, specs, rng, nn::Init::Zeros);
      const auto params = net.parameters();
      const auto& jp = jm.at("parameters");
      if (jp.size() != params.size()) throw DataError("checkpoint: parameter list disagrees with architecture");
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (jp[i].at("shape").get<nn::Shape>() != params[i]->value().shape()) {
          throw DataError("checkpoint: shape mismatch for parameter " + params[i]->name + " of " + net.name());
        }
      }
      const auto offset = jm.at("offset").get<std::size_t>();
      const auto n = jm.at("count").get<std::size_t>();
      if (offset + n > blob.size() || n != net.parameter_count()) {
        throw DataError("checkpoint: parameter range of " + net.name() + " is out of bounds");
      }
      net.set_flat_parameters(std::span<const double>(blob).subspan(offset, n));
      ck.networks.push_back(std::move(net));
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint manifest: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint manifest: ") + e.what());
  }
}

void save_detector(const std::filesystem::path& dir, const Detector& d, std::uint64_t seed,
                   const std::string& config_hash) {
  const std::array<const nn::Network*, 3> nets{&d.stage1, &d.stage2, &d.stage3};
  save_networks(dir, nets,
                {"detector", std::string(to_string(d.forwarding)), d.normalizer_fingerprint, seed, config_hash});
}

Detector load_detector(const std::filesystem::path& dir) {
  Checkpoint ck = load_networks(dir);
  if (ck.info.kind != "detector" || ck.networks.size() != 3) {
    throw DataError("checkpoint at " + dir.string() + " is not a three-stage detector");
  }
  Detector d{std::move(ck.networks[0]), std::move(ck.networks[1]), std::move(ck.networks[2]),
             parse_forwarding(ck.info.forwarding), ck.info.normalizer_fingerprint};
  for (int s = 1; s <= 3; ++s) {
    const nn::Network& net = s == 1 ? d.stage1 : s == 2 ? d.stage2 : d.stage3;
    const std::size_t width = net.input_shape().width;
    const std::size_t forwarded = s == 1 ? 2 : width - (s == 2 ? 2 : 3);
    const StageSpec expected = stage_spec(s, forwarded);
    auto specs = net.specs();
    std::erase_if(specs, [](const nn::LayerSpec& l) { return l.kind == nn::LayerKind::Flatten; });
    if (net.input_shape() != expected.input || specs != expected.layers) {
      throw DataError("checkpoint: stage " + std::to_string(s) + " does not match the stage architecture");
    }
  }
  return d;
}

void save_baseline(const std::filesystem::path& dir, const nn::Network& net, const std::string& normalizer_fingerprint,
                   std::uint64_t seed, const std::string& config_hash) {
  const std::array<const nn::Network*, 1> nets{&net};
  save_networks(dir, nets, {"baseline", "probabilities", normalizer_fingerprint, seed, config_hash});
}

nn::Network load_baseline(const std::filesystem::path& dir, std::string* fingerprint) {
  Checkpoint ck = load_networks(dir);
  if (ck.info.kind != "baseline" || ck.networks.size() != 1) {
    throw DataError("checkpoint at " + dir.string() + " is not a baseline model");
  }
  if (fingerprint) *fingerprint = ck.info.normalizer_fingerprint;
  return std::move(ck.networks[0]);
}

}  // namespace nmguard
