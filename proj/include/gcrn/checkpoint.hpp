#pragma once

#include <string>

#include "gcrn/gcrn.hpp"
#include "gcrn/ooc.hpp"

namespace gcrn {

// Versioned JSON checkpoints. Doubles round-trip value-exactly. Loading
// throws CheckpointVersionError on a version mismatch,
// CheckpointTruncatedError on truncated/unparseable input, and ShapeError
// when declared dimensions disagree with the stored payload.

std::string gcn_to_checkpoint(const GcnModel& model);
GcnModel gcn_from_checkpoint(const std::string& text);

std::string mlp_to_checkpoint(const MlpModel& model);
MlpModel mlp_from_checkpoint(const std::string& text);

std::string gcrn_to_checkpoint(const Gcrn& gcrn);
Gcrn gcrn_from_checkpoint(const std::string& text);

void save_gcrn(const Gcrn& gcrn, const std::string& path);
Gcrn load_gcrn(const std::string& path);

void save_classifier(const ContextFreeClassifier& classifier,
                     const std::string& path);
ContextFreeClassifier load_classifier(const std::string& path);

}  // namespace gcrn
