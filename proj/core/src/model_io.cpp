#include "tenexp/model_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tenexp/errors.hpp"
#include "tenexp/io.hpp"

namespace tenexp {

namespace {

constexpr char kMagic[] = "TENEXPM1";
constexpr std::size_t kMagicSize = 8;

using nlohmann::json;

DenseTensor matrix_tensor(const Matrix& m) { return DenseTensor::from_matrix(m); }

Matrix tensor_matrix(const DenseTensor& t) {
  if (t.order() != 2) throw FormatError("model array expected to be a matrix");
  return t.as_matrix(t.shape()[0], t.shape()[1]);
}

struct Collector {
  std::vector<std::pair<std::string, DenseTensor>> arrays;
  void add(std::string name, DenseTensor t) { arrays.emplace_back(std::move(name), std::move(t)); }
};

json describe(const CandidateDecomposition& c, std::size_t index, Collector& out) {
  const std::string prefix = "candidate" + std::to_string(index) + ".";
  json j;
  j["kind"] = to_string(c.kind());
  j["target_shape"] = c.target_shape;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, TuckerFactors>) {
          j["ranks"] = f.core.shape();
          out.add(prefix + "core", f.core);
          for (std::size_t n = 0; n < f.factors.size(); ++n) {
            out.add(prefix + "factor" + std::to_string(n + 1), matrix_tensor(f.factors[n]));
          }
        } else if constexpr (std::is_same_v<T, FCTNFactors>) {
          json ranks = json::array();
          for (std::size_t a = 0; a < f.ranks.order(); ++a) {
            for (std::size_t b = a + 1; b < f.ranks.order(); ++b) {
              ranks.push_back({a + 1, b + 1, f.ranks.get(a, b)});
            }
          }
          j["ranks"] = ranks;
          for (std::size_t n = 0; n < f.cores.size(); ++n) {
            out.add(prefix + "core" + std::to_string(n + 1), f.cores[n]);
          }
        } else {
          j["tubal_rank"] = f.a_hat.shape()[1];
          j["latent_dim"] = f.a_hat.shape()[2];
          out.add(prefix + "a_hat", f.a_hat);
          out.add(prefix + "b_hat", f.b_hat);
          out.add(prefix + "transform", matrix_tensor(f.transform));
        }
      },
      c.factors);
  return j;
}

const DenseTensor& lookup(const std::map<std::string, DenseTensor>& arrays, const std::string& name) {
  const auto it = arrays.find(name);
  if (it == arrays.end()) throw FormatError("model container is missing array '" + name + "'");
  return it->second;
}

CandidateDecomposition rebuild(const json& j, std::size_t index,
                               const std::map<std::string, DenseTensor>& arrays) {
  const std::string prefix = "candidate" + std::to_string(index) + ".";
  CandidateDecomposition c;
  c.target_shape = j.at("target_shape").get<Shape>();
  const auto kind = parse_decomposition_kind(j.at("kind").get<std::string>());
  switch (kind) {
    case DecompositionKind::tucker: {
      TuckerFactors f;
      f.core = lookup(arrays, prefix + "core");
      for (std::size_t n = 0; n < c.target_shape.size(); ++n) {
        f.factors.push_back(tensor_matrix(lookup(arrays, prefix + "factor" + std::to_string(n + 1))));
      }
      c.factors = std::move(f);
      break;
    }
    case DecompositionKind::fctn: {
      FCTNFactors f{{}, FctnRanks(c.target_shape.size(), 1)};
      for (const auto& e : j.at("ranks")) {
        f.ranks.set(e.at(0).get<std::size_t>() - 1, e.at(1).get<std::size_t>() - 1, e.at(2).get<std::size_t>());
      }
      for (std::size_t n = 0; n < c.target_shape.size(); ++n) {
        f.cores.push_back(lookup(arrays, prefix + "core" + std::to_string(n + 1)));
      }
      c.factors = std::move(f);
      break;
    }
    case DecompositionKind::tf: {
      TFFactors f;
      f.a_hat = lookup(arrays, prefix + "a_hat");
      f.b_hat = lookup(arrays, prefix + "b_hat");
      f.transform = tensor_matrix(lookup(arrays, prefix + "transform"));
      c.factors = std::move(f);
      break;
    }
  }
  try {
    validate(c);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model container holds an invalid candidate: ") + e.what());
  }
  return c;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelArchive& archive) {
  Collector arrays;
  json header;
  header["format"] = "tenexp-model";
  header["schema"] = 1;
  json candidates = json::array();
  for (std::size_t i = 0; i < archive.candidates.size(); ++i) {
    validate(archive.candidates[i]);
    candidates.push_back(describe(archive.candidates[i], i, arrays));
  }
  header["candidates"] = candidates;
  header["gate_scores"] = archive.gate_scores;
  header["gate_weights"] = archive.gate_weights;
  header["support"] = archive.support;
  for (const auto& [name, t] : archive.extra_arrays) arrays.add("extra." + name, t);

  std::vector<std::string> payloads;
  json listing = json::array();
  for (const auto& [name, t] : arrays.arrays) {
    std::ostringstream buffer;
    write_npy(buffer, t);
    payloads.push_back(buffer.str());
    listing.push_back({{"name", name}, {"shape", t.shape()}, {"bytes", payloads.back().size()}});
  }
  header["arrays"] = listing;

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, kMagicSize);
  std::uint64_t len = text.size();
  unsigned char len_bytes[8];
  for (int b = 0; b < 8; ++b) len_bytes[b] = static_cast<unsigned char>((len >> (8 * b)) & 0xFF);
  out.write(reinterpret_cast<const char*>(len_bytes), 8);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : payloads) out.write(p.data(), static_cast<std::streamsize>(p.size()));
  if (!out) throw ArgumentError("failed writing '" + path.string() + "'");
}

ModelArchive load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path.string() + "' for reading");
  char magic[kMagicSize];
  if (!in.read(magic, kMagicSize) || std::memcmp(magic, kMagic, kMagicSize) != 0) {
    throw FormatError("not a tenexp model container: bad magic");
  }
  unsigned char len_bytes[8];
  if (!in.read(reinterpret_cast<char*>(len_bytes), 8)) throw FormatError("model container truncated");
  std::uint64_t len = 0;
  for (int b = 7; b >= 0; --b) len = (len << 8) | len_bytes[b];
  if (len > (1ULL << 30)) throw FormatError("model container header length is implausible");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("model container truncated");

  ModelArchive archive;
  try {
    const json header = json::parse(text);
    if (header.at("format") != "tenexp-model") throw FormatError("model container has an unknown format tag");
    if (header.at("schema") != 1) throw FormatError("unsupported model container schema");
    std::map<std::string, DenseTensor> arrays;
    for (const auto& entry : header.at("arrays")) {
      DenseTensor t = read_npy(in);
      if (t.shape() != entry.at("shape").get<Shape>()) {
        throw FormatError("model array '" + entry.at("name").get<std::string>() + "' has an unexpected shape");
      }
      const auto name = entry.at("name").get<std::string>();
      if (name.rfind("extra.", 0) == 0) archive.extra_arrays.emplace_back(name.substr(6), t);
      arrays.emplace(name, std::move(t));
    }
    const auto& candidates = header.at("candidates");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      archive.candidates.push_back(rebuild(candidates[i], i, arrays));
    }
    archive.gate_scores = header.at("gate_scores").get<std::vector<double>>();
    archive.gate_weights = header.at("gate_weights").get<std::vector<double>>();
    archive.support = header.at("support").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model container header is malformed: ") + e.what());
  }
  return archive;
}

}  // namespace tenexp
