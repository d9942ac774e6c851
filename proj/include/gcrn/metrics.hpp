#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gcrn/ooc.hpp"

namespace gcrn {

struct RocPoint {
  double threshold = 0.0;
  double true_positive_rate = 0.0;
  double false_positive_rate = 0.0;
};

/// Area under the ROC curve via the rank (Mann-Whitney) formulation with
/// tie-halving. Needs at least one positive and one negative record.
double auc(const std::vector<OocRecord>& records);

/// One point per distinct score threshold plus the (0,0) endpoint; the
/// trapezoid area over these points equals auc() within 1e-12.
std::vector<RocPoint> roc_curve(const std::vector<OocRecord>& records);

double trapezoid_area(const std::vector<RocPoint>& curve);

struct AccuracyReport {
  std::optional<double> ooc_accuracy;      // absent when no OOC nodes
  std::optional<double> non_ooc_accuracy;  // absent when no in-context nodes
  double overall_accuracy = 0.0;
};

/// Label-match rate split over OOC-flagged and unflagged nodes. For OOC
/// nodes a mismatch means the context contradicted the object, so lower is
/// the desirable direction there.
AccuracyReport accuracy_report(const std::vector<int>& predictions,
                               const std::vector<int>& truth_labels,
                               const std::vector<bool>& ooc_flags);

std::string roc_to_csv(const std::vector<RocPoint>& curve);

}  // namespace gcrn
