#include "terrain/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace terrain {

void LabeledFeatureSet::validate() const {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("feature set is empty");
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw std::invalid_argument("feature set: row/label count mismatch");
  if (num_classes <= 0) throw std::invalid_argument("feature set: num_classes must be positive");
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw std::invalid_argument("feature set: label out of range");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x, bool with_scale) {
  if (x.rows() == 0) throw std::invalid_argument("standardizer: no rows");
  Standardizer s;
  s.mean = x.colwise().mean();
  s.scale = Eigen::VectorXd::Ones(x.cols());
  if (with_scale && x.rows() > 1) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - s.mean[j]).square().sum() / double(x.rows());
      const double sd = std::sqrt(var);
      if (sd > 0.0) s.scale[j] = sd;  // constant columns pass through unscaled
    }
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& v) const {
  return (v - mean).cwiseQuotient(scale);
}

int knn_classify(const LabeledFeatureSet& train, const Eigen::VectorXd& query, int k) {
  train.validate();
  if (k <= 0) throw std::invalid_argument("knn: k must be positive");
  if (query.size() != train.x.cols()) throw std::invalid_argument("knn: dimension mismatch");
  const Eigen::Index n = train.x.rows();
  const int kk = static_cast<int>(std::min<Eigen::Index>(k, n));

  std::vector<std::pair<double, Eigen::Index>> dist(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dist[i] = {(train.x.row(i).transpose() - query).norm(), i};
  std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());  // (distance, index) order

  std::vector<double> votes(train.num_classes, 0.0);
  for (int j = 0; j < kk; ++j)
    votes[train.labels[dist[j].second]] += 1.0 / (dist[j].first + 1e-12);

  int best = 0;
  for (int c = 1; c < train.num_classes; ++c)
    if (votes[c] > votes[best]) best = c;  // ties keep the smaller class id
  return best;
}

LinearSvm linear_svm_train(const LabeledFeatureSet& train, double lambda, int epochs,
                           std::uint64_t seed) {
  train.validate();
  if (lambda <= 0.0) throw std::invalid_argument("svm: lambda must be positive");
  if (epochs <= 0) throw std::invalid_argument("svm: epochs must be positive");
  const Eigen::Index n = train.x.rows();
  const Eigen::Index d = train.x.cols();

  LinearSvm avg;
  avg.w = Eigen::MatrixXd::Zero(train.num_classes, d);
  avg.b = Eigen::VectorXd::Zero(train.num_classes);

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int c = 0; c < train.num_classes; ++c) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double b = 0.0;
    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(d);
    double b_sum = 0.0;
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(c) * 0x9e3779b97f4a7c15ull);
    long t = 0;
    for (int e = 0; e < epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index i : order) {
        ++t;
        const double eta = 1.0 / (lambda * double(t));
        const double y = train.labels[i] == c ? 1.0 : -1.0;
        const double margin = y * (w.dot(train.x.row(i)) + b);
        // the bias rides as an appended constant-1 feature, so it shares the
        // L2 shrinkage; with eta = 1/(lambda t) an unregularized bias would
        // keep its huge first-step transient and poison the averaged iterate
        w *= 1.0 - eta * lambda;
        b *= 1.0 - eta * lambda;
        if (margin < 1.0) {
          w += eta * y * train.x.row(i).transpose();
          b += eta * y;
        }
        w_sum += w;
        b_sum += b;
      }
    }
    avg.w.row(c) = w_sum.transpose() / double(t);
    avg.b[c] = b_sum / double(t);
  }
  return avg;
}

int linear_svm_classify(const LinearSvm& model, const Eigen::VectorXd& query) {
  if (query.size() != model.w.cols()) throw std::invalid_argument("svm: dimension mismatch");
  Eigen::VectorXd scores = model.w * query + model.b;
  int best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = static_cast<int>(c);
  return best;
}

double svm_objective(const LinearSvm& model, const LabeledFeatureSet& data, double lambda) {
  data.validate();
  double obj = 0.0;
  for (int c = 0; c < data.num_classes; ++c) {
    obj += 0.5 * lambda * (model.w.row(c).squaredNorm() + model.b[c] * model.b[c]);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
      const double y = data.labels[i] == c ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - y * (model.w.row(c).dot(data.x.row(i)) + model.b[c]));
    }
    obj += hinge / double(data.x.rows());
  }
  return obj;
}

namespace {

// Stratified round-robin fold assignment: per class, shuffle that class's
// rows and deal them out 0,1,...,folds-1,0,... so every fold sees every
// class when counts allow.
std::vector<int> fold_assignment(const LabeledFeatureSet& data, int folds, std::mt19937_64& rng) {
  std::vector<std::vector<Eigen::Index>> by_class(data.num_classes);
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<int> fold(data.x.rows(), 0);
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t j = 0; j < rows.size(); ++j)
      fold[rows[j]] = static_cast<int>(j % static_cast<std::size_t>(folds));
  }
  return fold;
}

struct FoldSplit {
  LabeledFeatureSet train;
  Eigen::MatrixXd val_x;
  std::vector<int> val_labels;
};

FoldSplit take_fold(const LabeledFeatureSet& data, const std::vector<int>& fold, int f) {
  std::vector<Eigen::Index> tr, va;
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) (fold[i] == f ? va : tr).push_back(i);
  FoldSplit s;
  s.train.x.resize(static_cast<Eigen::Index>(tr.size()), data.x.cols());
  s.train.num_classes = data.num_classes;
  for (std::size_t j = 0; j < tr.size(); ++j) {
    s.train.x.row(static_cast<Eigen::Index>(j)) = data.x.row(tr[j]);
    s.train.labels.push_back(data.labels[tr[j]]);
  }
  s.val_x.resize(static_cast<Eigen::Index>(va.size()), data.x.cols());
  for (std::size_t j = 0; j < va.size(); ++j) {
    s.val_x.row(static_cast<Eigen::Index>(j)) = data.x.row(va[j]);
    s.val_labels.push_back(data.labels[va[j]]);
  }
  return s;
}

}  // namespace

CvChoice cross_validate_knn(const LabeledFeatureSet& train, const std::vector<int>& grid,
                            int folds, std::uint64_t seed) {
  train.validate();
  if (grid.empty()) throw std::invalid_argument("cv: empty grid");
  if (folds < 2 || folds > train.x.rows()) throw std::invalid_argument("cv: bad fold count");
  std::mt19937_64 rng(seed);
  const std::vector<int> fold = fold_assignment(train, folds, rng);

  CvChoice best;
  for (int k : grid) {
    double acc_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      const FoldSplit s = take_fold(train, fold, f);
      if (s.val_labels.empty()) continue;
      int hits = 0;
      for (std::size_t j = 0; j < s.val_labels.size(); ++j)
        if (knn_classify(s.train, s.val_x.row(static_cast<Eigen::Index>(j)).transpose(), k) ==
            s.val_labels[j])
          ++hits;
      acc_sum += double(hits) / double(s.val_labels.size());
    }
    const double score = acc_sum / double(folds);
    if (score > best.score) {
      best.score = score;
      best.knn_k = k;
    }
  }
  return best;
}

CvChoice cross_validate_svm(const LabeledFeatureSet& train, const std::vector<double>& grid,
                            int folds, int epochs, std::uint64_t seed) {
  train.validate();
  if (grid.empty()) throw std::invalid_argument("cv: empty grid");
  if (folds < 2 || folds > train.x.rows()) throw std::invalid_argument("cv: bad fold count");
  std::mt19937_64 rng(seed);
  const std::vector<int> fold = fold_assignment(train, folds, rng);

  CvChoice best;
  for (double lambda : grid) {
    double acc_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      const FoldSplit s = take_fold(train, fold, f);
      if (s.val_labels.empty()) continue;
      const LinearSvm model =
          linear_svm_train(s.train, lambda, epochs, seed + 977u * static_cast<std::uint64_t>(f));
      int hits = 0;
      for (std::size_t j = 0; j < s.val_labels.size(); ++j)
        if (linear_svm_classify(model, s.val_x.row(static_cast<Eigen::Index>(j)).transpose()) ==
            s.val_labels[j])
          ++hits;
      acc_sum += double(hits) / double(s.val_labels.size());
    }
    const double score = acc_sum / double(folds);
    if (score > best.score) {
      best.score = score;
      best.svm_lambda = lambda;
    }
  }
  return best;
}

}  // namespace terrain
