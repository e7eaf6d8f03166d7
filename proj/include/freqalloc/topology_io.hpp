#pragma once

#include <filesystem>
#include <string>

#include "freqalloc/topology.hpp"

namespace freqalloc {

// JSON form: {"positions": [[x], ...] or [[x, y], ...], "p0": f, "eta": f}.
// Distances are never stored; they are recomputed on load.

std::string topology_to_json(const Topology& topology);
Topology topology_from_json(const std::string& text);

Topology load_topology(const std::filesystem::path& path);
void save_topology(const Topology& topology, const std::filesystem::path& path);

}  // namespace freqalloc
