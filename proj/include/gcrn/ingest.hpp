#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcrn/synth.hpp"

namespace gcrn {

struct CocoParseResult {
  std::vector<SceneGraph> scenes;            // labels set, no appearance
  std::map<std::int64_t, int> category_remap;  // original id -> dense index
  int skipped_annotations = 0;               // lenient mode only
};

struct CocoParseOptions {
  // When set, annotations with degenerate or out-of-bounds boxes are skipped
  // and counted instead of failing the parse.
  bool lenient = false;
};

/// Parses the images/annotations/categories subset of a COCO-style JSON
/// document. bbox [x, y, w, h] becomes (xmin, ymin, xmax, ymax); category
/// ids are remapped to a dense [0, K). Throws ParseError (with byte offset)
/// on malformed JSON, ReferentialError on dangling image/category ids, and
/// ValidationError on bad boxes unless lenient.
CocoParseResult parse_coco_annotations(const std::string& bytes,
                                       const CocoParseOptions& options = {});

/// Draws appearance features for every node from the world's prototype of
/// its label. Throws ValidationError when a label falls outside the world's
/// vocabulary.
void attach_oracle_appearance(std::vector<SceneGraph>& scenes,
                              const WorldModel& world, Rng& rng);

struct LabelFlip {
  std::int64_t scene_id = 0;
  int node_index = 0;
  int original_label = 0;
  int replacement_label = 0;
};

struct CorruptResult {
  std::vector<SceneGraph> scenes;
  std::vector<LabelFlip> manifest;
};

/// Independently replaces each node's label with a uniformly drawn different
/// class with probability flip_rate. Original labels live in the manifest.
CorruptResult corrupt_labels(const std::vector<SceneGraph>& scenes,
                             double flip_rate, int num_classes, Rng& rng);

std::string flip_manifest_to_json(const std::vector<LabelFlip>& manifest);
std::string remap_to_json(const std::map<std::int64_t, int>& remap);

}  // namespace gcrn
