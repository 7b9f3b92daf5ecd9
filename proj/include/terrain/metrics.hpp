#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace terrain {

/// Row = true class, column = predicted class.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;
  std::vector<std::string> labels;

  explicit ConfusionMatrix(std::vector<std::string> label_names);
  void add(int true_class, int predicted_class);

  int total() const { return counts.sum(); }
  double accuracy() const;
  /// Precision/recall for one class; 0 when the denominator is empty.
  double precision(int c) const;
  double recall(int c) const;
};

struct Metrics {
  double accuracy = 0.0;
  Eigen::VectorXd precision, recall;
  ConfusionMatrix confusion;
};

Metrics compute_metrics(const ConfusionMatrix& cm);

/// {"accuracy": ..., "per_class": {label: {precision, recall}},
///  "confusion": [[...], ...]} — key order is fixed, so equal metrics
/// produce byte-identical files.
void write_metrics_json(const std::string& path, const Metrics& metrics);

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm);

}  // namespace terrain
