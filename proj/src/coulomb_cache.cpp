#include <fstream>
#include <nlohmann/json.hpp>

#include "qdgate/coulomb.hpp"
#include "qdgate/error.hpp"

namespace qdgate {

namespace {
constexpr const char* kSchema = "qdgate.coulomb-cache/1";
}

std::filesystem::path cache_file(const std::filesystem::path& dir, CoulombKind kind,
                                 std::uint64_t hash) {
  return dir / ("coulomb_" + std::string(to_string(kind)) + "_" + hash_hex(hash) + ".json");
}

void write_tensor_cache(const CoulombTensor& tensor, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["schema"] = kSchema;
  doc["kind"] = to_string(tensor.kind);
  doc["basis_hash"] = hash_hex(tensor.basis_hash);
  doc["n_first"] = tensor.n_first();
  doc["n_second"] = tensor.n_second();
  doc["units"] = "meV";
  auto& elements = doc["elements"] = nlohmann::json::array();
  for (std::size_t k = 0; k < tensor.values.size(); ++k) {
    const auto& r = tensor.orbits.representatives[k];
    elements.push_back({r[0], r[1], r[2], r[3], tensor.values[k]});
  }
  // Single writer; the rename makes the file appear complete or not at all.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp);
    require(bool(out), ErrorKind::Io, "cannot write " + tmp.string());
    out << doc.dump() << '\n';
    require(bool(out), ErrorKind::Io, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::optional<CoulombTensor> read_tensor_cache(const std::filesystem::path& path,
                                               CoulombKind kind, std::uint64_t hash,
                                               int n_first, int n_second, std::string* reason) {
  auto reject = [&](const std::string& why) -> std::optional<CoulombTensor> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  std::ifstream in(path);
  if (!in) return reject("missing");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    return reject(std::string("unparsable: ") + e.what());
  }
  try {
    if (doc.at("schema") != kSchema) return reject("schema mismatch");
    if (doc.at("kind") != to_string(kind)) return reject("kind mismatch");
    if (doc.at("basis_hash") != hash_hex(hash)) return reject("basis hash mismatch");
    if (doc.at("n_first") != n_first || doc.at("n_second") != n_second) {
      return reject("dimension mismatch");
    }
    CoulombTensor t;
    t.kind = kind;
    t.basis_hash = hash;
    t.orbits = symmetry_orbits(kind, n_first, n_second);
    const auto& elements = doc.at("elements");
    if (elements.size() != t.orbits.representatives.size()) return reject("orbit count mismatch");
    t.values.resize(elements.size());
    for (std::size_t k = 0; k < elements.size(); ++k) {
      const auto& e = elements[k];
      const auto& r = t.orbits.representatives[k];
      if (e.at(0) != r[0] || e.at(1) != r[1] || e.at(2) != r[2] || e.at(3) != r[3]) {
        return reject("orbit ordering mismatch");
      }
      t.values[k] = e.at(4).get<double>();
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    return reject(std::string("malformed: ") + e.what());
  }
}

}  // namespace qdgate
