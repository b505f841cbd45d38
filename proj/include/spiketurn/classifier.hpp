#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <json.hpp>

namespace spiketurn {

// Row-major sample matrix: rows are examples, cols are features.
struct FeatureMatrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<double> values;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows(rows), cols(cols), values(rows * cols, 0.0) {}

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
  void push_back(std::span<const double> x);
  FeatureMatrix select(std::span<const std::size_t> indices) const;
};

// Per-column standardization; zero-variance columns map to 0.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& x);
  std::vector<double> apply(std::span<const double> x) const;
  FeatureMatrix apply(const FeatureMatrix& x) const;

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
  bool operator==(const Standardizer&) const = default;
};

// Labels are {0, 1}; every classifier needs both classes to fit.
void check_binary_labels(std::span<const int> labels, std::size_t rows);

struct SvmConfig {
  double c{1.0};
  int max_epochs{1000};
  double tolerance{1e-4};  // projected-gradient spread at which to stop
  std::uint64_t seed{0};
};

// L2-regularized hinge-loss linear SVM,
//   min 0.5 (|w|^2 + b^2) + C sum max(0, 1 - y (w.x + b)),
// solved by dual coordinate descent with the bias as an extra constant feature.
class LinearSvm {
public:
  LinearSvm() = default;
  explicit LinearSvm(SvmConfig config) : config_(config) {}

  void fit(const FeatureMatrix& x, std::span<const int> labels);
  double score(std::span<const double> x) const;
  int decide(std::span<const double> x) const { return score(x) >= 0.0 ? 1 : 0; }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }
  const SvmConfig& config() const { return config_; }

  // Primal and dual objective after each epoch. The dual never decreases and
  // bounds the primal from below, so the gap certifies convergence.
  const std::vector<double>& primal_trace() const { return primal_trace_; }
  const std::vector<double>& dual_trace() const { return dual_trace_; }
  double primal_objective(const FeatureMatrix& x, std::span<const int> labels) const;

  nlohmann::json to_json() const;
  static LinearSvm from_json(const nlohmann::json& j);
  bool operator==(const LinearSvm& o) const { return config_.c == o.config_.c && w_ == o.w_ && b_ == o.b_; }

private:
  SvmConfig config_;
  std::vector<double> w_;
  double b_{0.0};
  std::vector<double> primal_trace_;
  std::vector<double> dual_trace_;
};

// Nearest class centroid in Euclidean distance; equidistant points go to 0.
class NearestCentroid {
public:
  void fit(const FeatureMatrix& x, std::span<const int> labels);
  // |x - c0|^2 - |x - c1|^2, nudged below zero on an exact tie.
  double score(std::span<const double> x) const;
  int decide(std::span<const double> x) const { return score(x) >= 0.0 ? 1 : 0; }

  const std::vector<double>& centroid(int label) const { return label == 0 ? c0_ : c1_; }

  nlohmann::json to_json() const;
  static NearestCentroid from_json(const nlohmann::json& j);
  bool operator==(const NearestCentroid&) const = default;

private:
  std::vector<double> c0_;
  std::vector<double> c1_;
};

using AnyClassifier = std::variant<LinearSvm, NearestCentroid>;

double classifier_score(const AnyClassifier& c, std::span<const double> x);
inline int classifier_decide(const AnyClassifier& c, std::span<const double> x) {
  return classifier_score(c, x) >= 0.0 ? 1 : 0;
}
nlohmann::json classifier_to_json(const AnyClassifier& c);
AnyClassifier classifier_from_json(const nlohmann::json& j);

// Stratified k-fold assignment: fold id per example, classes dealt
// round-robin after a seeded shuffle.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct GridResult {
  double best_c{1.0};
  std::vector<double> mean_f1;  // parallel to the grid
};

// k-fold cross-validated choice of C by mean Give-class F1. Ties keep the
// earlier grid value.
GridResult select_svm_c(const FeatureMatrix& x, std::span<const int> labels, std::span<const double> grid,
                        int folds, std::uint64_t seed, int threads = 1);

}  // namespace spiketurn
