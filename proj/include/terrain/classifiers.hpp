#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace terrain {

/// Feature rows with integer class labels. `standardize` removes the
/// per-dimension mean (and optionally divides by the per-dimension std,
/// skipping constant dimensions); the fitted transform is reusable on
/// queries.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 1 everywhere when scaling is off

  static Standardizer fit(const Eigen::MatrixXd& x, bool with_scale);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
};

struct LabeledFeatureSet {
  Eigen::MatrixXd x;  // n rows, d columns
  std::vector<int> labels;
  int num_classes = 0;

  void validate() const;
};

/// Inverse-distance weighted k-nearest-neighbour vote: among the k closest
/// training rows by Euclidean distance, each contributes 1/(d + 1e-12) to
/// its class; ties go to the smallest class id. Neighbour order is pinned by
/// (distance, index), so permuting the training set cannot change the answer.
int knn_classify(const LabeledFeatureSet& train, const Eigen::VectorXd& query, int k);

/// One-vs-all linear discriminants w_c.x + b_c.
struct LinearSvm {
  Eigen::MatrixXd w;  // classes x d
  Eigen::VectorXd b;
};

/// Hinge-loss subgradient descent with L2 regularization lambda, one binary
/// problem per class; the bias is treated as an appended constant feature,
/// so it shares the regularization. Returns the averaged iterate, which
/// makes the objective behave monotonically enough for convergence checks.
LinearSvm linear_svm_train(const LabeledFeatureSet& train, double lambda, int epochs,
                           std::uint64_t seed);

int linear_svm_classify(const LinearSvm& model, const Eigen::VectorXd& query);

/// Regularized one-vs-all hinge objective of a model on a set:
/// sum_c [ lambda/2 (|w_c|^2 + b_c^2) + mean_i max(0, 1 - y_ic (w_c.x_i + b_c)) ].
double svm_objective(const LinearSvm& model, const LabeledFeatureSet& data, double lambda);

// ---------------------------------------------------------------------------
// model selection

struct CvChoice {
  double score = -1.0;  // mean validation accuracy
  int knn_k = 0;        // set for kNN
  double svm_lambda = 0.0;  // set for SVM
};

/// 5-fold cross-validated accuracy over k in `grid`; picks the best
/// (ties -> smaller k).
CvChoice cross_validate_knn(const LabeledFeatureSet& train, const std::vector<int>& grid,
                            int folds, std::uint64_t seed);

/// Same for the SVM's lambda over a logarithmic grid.
CvChoice cross_validate_svm(const LabeledFeatureSet& train, const std::vector<double>& grid,
                            int folds, int epochs, std::uint64_t seed);

}  // namespace terrain
