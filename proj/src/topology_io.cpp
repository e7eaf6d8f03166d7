#include "freqalloc/topology_io.hpp"

#include <fstream>
#include <sstream>

#include "freqalloc/error.hpp"
#include "json.hpp"

namespace freqalloc {

using nlohmann::json;

std::string topology_to_json(const Topology& topology) {
  json positions = json::array();
  for (const auto& p : topology.positions()) {
    if (topology.dimension() == 1) {
      positions.push_back(json::array({p.x}));
    } else {
      positions.push_back(json::array({p.x, p.y}));
    }
  }
  json doc;
  doc["positions"] = std::move(positions);
  doc["p0"] = topology.p0();
  doc["eta"] = topology.eta();
  return doc.dump(2);
}

Topology topology_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("topology: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("topology: document must be an object");
  if (!doc.contains("positions") || !doc["positions"].is_array()) {
    throw ValidationError("topology: /positions must be an array");
  }

  PathLoss loss;
  for (const char* key : {"p0", "eta"}) {
    if (!doc.contains(key)) continue;
    if (!doc[key].is_number()) throw ValidationError(std::string("topology: /") + key + " must be a number");
  }
  loss.p0 = doc.value("p0", loss.p0);
  loss.eta = doc.value("eta", loss.eta);

  const auto& raw = doc["positions"];
  std::vector<Point> points;
  int dimension = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& entry = raw[i];
    const std::string where = "topology: /positions/" + std::to_string(i);
    if (!entry.is_array() || entry.empty() || entry.size() > 2) {
      throw ValidationError(where + " must be [x] or [x, y]");
    }
    for (const auto& c : entry) {
      if (!c.is_number()) throw ValidationError(where + " must contain numbers");
    }
    const int dim = static_cast<int>(entry.size());
    if (dimension == 0) dimension = dim;
    if (dim != dimension) throw ValidationError(where + " mixes 1-D and 2-D coordinates");
    points.push_back({entry[0].get<double>(), dim == 2 ? entry[1].get<double>() : 0.0});
  }
  if (points.empty()) throw ValidationError("topology: /positions is empty");
  return Topology::from_positions(std::move(points), dimension, loss);
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open topology file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return topology_from_json(buf.str());
}

void save_topology(const Topology& topology, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write topology file " + path.string());
  out << topology_to_json(topology) << '\n';
}

}  // namespace freqalloc
