#include "gcrn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gcrn {

namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts count_classes(const std::vector<OocRecord>& records) {
  Counts c;
  for (const OocRecord& r : records) {
    if (!std::isfinite(r.score)) {
      throw ValidationError("auc: non-finite score for scene " +
                            std::to_string(r.scene_id));
    }
    if (r.truth) ++c.positives; else ++c.negatives;
  }
  if (c.positives == 0 || c.negatives == 0) {
    throw ValidationError("auc: records contain only one class (" +
                          std::to_string(c.positives) + " positive, " +
                          std::to_string(c.negatives) + " negative)");
  }
  return c;
}

}  // namespace

double auc(const std::vector<OocRecord>& records) {
  const Counts counts = count_classes(records);

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score < records[b].score;
  });

  // Sum of average ranks over positives; ties share the mean of their ranks.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           records[order[j]].score == records[order[i]].score) {
      ++j;
    }
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (records[order[k]].truth) positive_rank_sum += avg_rank;
    }
    i = j;
  }

  const double n_pos = static_cast<double>(counts.positives);
  const double n_neg = static_cast<double>(counts.negatives);
  const double numerator = positive_rank_sum - n_pos * (n_pos + 1.0) * 0.5;
  return numerator / (n_pos * n_neg);
}

std::vector<RocPoint> roc_curve(const std::vector<OocRecord>& records) {
  const Counts counts = count_classes(records);

  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score > records[b].score;
  });

  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});

  const double n_pos = static_cast<double>(counts.positives);
  const double n_neg = static_cast<double>(counts.negatives);
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double score = records[order[i]].score;
    std::size_t j = i;
    while (j < order.size() && records[order[j]].score == score) {
      if (records[order[j]].truth) ++tp; else ++fp;
      ++j;
    }
    curve.push_back({score, static_cast<double>(tp) / n_pos,
                     static_cast<double>(fp) / n_neg});
    i = j;
  }
  return curve;
}

double trapezoid_area(const std::vector<RocPoint>& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double dx =
        curve[i].false_positive_rate - curve[i - 1].false_positive_rate;
    area += dx * 0.5 *
            (curve[i].true_positive_rate + curve[i - 1].true_positive_rate);
  }
  return area;
}

AccuracyReport accuracy_report(const std::vector<int>& predictions,
                               const std::vector<int>& truth_labels,
                               const std::vector<bool>& ooc_flags) {
  if (predictions.size() != truth_labels.size() ||
      predictions.size() != ooc_flags.size()) {
    throw ShapeError("accuracy_report: misaligned lists (" +
                     std::to_string(predictions.size()) + " predictions, " +
                     std::to_string(truth_labels.size()) + " labels, " +
                     std::to_string(ooc_flags.size()) + " flags)");
  }
  if (predictions.empty()) {
    throw ValidationError("accuracy_report: empty input");
  }

  std::size_t ooc_total = 0, ooc_correct = 0;
  std::size_t other_total = 0, other_correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool correct = predictions[i] == truth_labels[i];
    if (ooc_flags[i]) {
      ++ooc_total;
      if (correct) ++ooc_correct;
    } else {
      ++other_total;
      if (correct) ++other_correct;
    }
  }

  AccuracyReport report;
  if (ooc_total > 0) {
    report.ooc_accuracy =
        static_cast<double>(ooc_correct) / static_cast<double>(ooc_total);
  }
  if (other_total > 0) {
    report.non_ooc_accuracy =
        static_cast<double>(other_correct) / static_cast<double>(other_total);
  }
  report.overall_accuracy =
      static_cast<double>(ooc_correct + other_correct) /
      static_cast<double>(predictions.size());
  return report;
}

std::string roc_to_csv(const std::vector<RocPoint>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "threshold,true_positive_rate,false_positive_rate\n";
  for (const RocPoint& p : curve) {
    out << p.threshold << ',' << p.true_positive_rate << ','
        << p.false_positive_rate << '\n';
  }
  return out.str();
}

}  // namespace gcrn
