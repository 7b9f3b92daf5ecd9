#include "terrain/metrics.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace terrain {

// insertion-ordered so the emitted key order matches the documented layout
using json = nlohmann::ordered_json;

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> label_names)
    : labels(std::move(label_names)) {
  if (labels.empty()) throw std::invalid_argument("ConfusionMatrix: empty label set");
  const auto n = static_cast<Eigen::Index>(labels.size());
  counts = Eigen::MatrixXi::Zero(n, n);
}

void ConfusionMatrix::add(int true_class, int predicted_class) {
  if (true_class < 0 || true_class >= counts.rows() || predicted_class < 0 ||
      predicted_class >= counts.cols())
    throw std::invalid_argument("ConfusionMatrix: class id out of range");
  ++counts(true_class, predicted_class);
}

double ConfusionMatrix::accuracy() const {
  const int t = total();
  if (t == 0) throw std::domain_error("ConfusionMatrix: no samples");
  return static_cast<double>(counts.trace()) / t;
}

double ConfusionMatrix::precision(int c) const {
  const int col = counts.col(c).sum();
  return col == 0 ? 0.0 : static_cast<double>(counts(c, c)) / col;
}

double ConfusionMatrix::recall(int c) const {
  const int row = counts.row(c).sum();
  return row == 0 ? 0.0 : static_cast<double>(counts(c, c)) / row;
}

Metrics compute_metrics(const ConfusionMatrix& cm) {
  Metrics m{0.0, {}, {}, cm};
  m.accuracy = cm.accuracy();
  const auto n = cm.counts.rows();
  m.precision.resize(n);
  m.recall.resize(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    m.precision[c] = cm.precision(static_cast<int>(c));
    m.recall[c] = cm.recall(static_cast<int>(c));
  }
  return m;
}

void write_metrics_json(const std::string& path, const Metrics& metrics) {
  json doc;
  doc["accuracy"] = metrics.accuracy;
  json per_class;
  for (size_t c = 0; c < metrics.confusion.labels.size(); ++c) {
    per_class[metrics.confusion.labels[c]] = {
        {"precision", metrics.precision[static_cast<Eigen::Index>(c)]},
        {"recall", metrics.recall[static_cast<Eigen::Index>(c)]}};
  }
  doc["per_class"] = per_class;
  json confusion = json::array();
  for (Eigen::Index r = 0; r < metrics.confusion.counts.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < metrics.confusion.counts.cols(); ++c)
      row.push_back(metrics.confusion.counts(r, c));
    confusion.push_back(row);
  }
  doc["confusion"] = confusion;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << doc.dump(2) << '\n';
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "true\\pred";
  for (const auto& l : cm.labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index r = 0; r < cm.counts.rows(); ++r) {
    out << cm.labels[static_cast<size_t>(r)];
    for (Eigen::Index c = 0; c < cm.counts.cols(); ++c) out << ',' << cm.counts(r, c);
    out << '\n';
  }
}

}  // namespace terrain
