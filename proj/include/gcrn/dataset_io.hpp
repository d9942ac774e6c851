#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gcrn/synth.hpp"

namespace gcrn {

/// One dataset file: {"world": {...}, "scenes": [...]}. Doubles are written
/// with shortest round-trip formatting, so serialize/parse is value-exact
/// and regeneration from the same seed is byte-identical. Ingested data that
/// has no synthetic world yet stores "world": null.
std::string dataset_to_json(const WorldModel& world,
                            const std::vector<SceneGraph>& scenes);
std::string dataset_to_json_worldless(const std::vector<SceneGraph>& scenes);

struct ParsedDataset {
  std::optional<WorldModel> world;
  std::vector<SceneGraph> scenes;
};

ParsedDataset dataset_from_json(const std::string& text);

std::string manifest_to_json(const std::vector<Injection>& manifest);
std::vector<Injection> manifest_from_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace gcrn
