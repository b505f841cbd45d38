#include "spiketurn/classifier.hpp"

#include "spiketurn/common.hpp"
#include "spiketurn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace spiketurn {

using nlohmann::json;

void FeatureMatrix::push_back(std::span<const double> x) {
  if (rows == 0 && cols == 0) cols = x.size();
  if (x.size() != cols) throw DataError("feature row has " + std::to_string(x.size()) + " values, expected " +
                                        std::to_string(cols));
  values.insert(values.end(), x.begin(), x.end());
  ++rows;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto r = row(indices[i]);
    std::copy(r.begin(), r.end(), out.row(i).begin());
  }
  return out;
}

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  if (x.rows == 0) throw DataError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean.assign(x.cols, 0.0);
  s.scale.assign(x.cols, 1.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += x.values[r * x.cols + c];
  for (auto& m : s.mean) m /= static_cast<double>(x.rows);
  std::vector<double> var(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double d = x.values[r * x.cols + c] - s.mean[c];
      var[c] += d * d;
    }
  for (std::size_t c = 0; c < x.cols; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(x.rows));
    s.scale[c] = sd > 1e-12 ? 1.0 / sd : 0.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  if (x.size() != mean.size()) throw DataError("standardizer width mismatch");
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - mean[c]) * scale[c];
  return out;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  FeatureMatrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto z = apply(x.row(r));
    std::copy(z.begin(), z.end(), out.row(r).begin());
  }
  return out;
}

json Standardizer::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw DataError("standardizer: mean/scale size mismatch");
  return s;
}

void check_binary_labels(std::span<const int> labels, std::size_t rows) {
  if (labels.size() != rows) throw DataError("label count does not match feature rows");
  bool has0 = false, has1 = false;
  for (int y : labels) {
    if (y == 0) has0 = true;
    else if (y == 1) has1 = true;
    else throw DataError("labels must be 0 or 1");
  }
  if (!has0 || !has1) throw DataError("classifier needs examples of both classes");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

void LinearSvm::fit(const FeatureMatrix& x, std::span<const int> labels) {
  check_binary_labels(labels, x.rows);
  if (!(config_.c > 0.0)) throw ConfigError("svm.c must be positive");
  const std::size_t n = x.rows;
  w_.assign(x.cols, 0.0);
  b_ = 0.0;
  primal_trace_.clear();
  dual_trace_.clear();

  std::vector<double> alpha(n, 0.0), qii(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
    qii[i] = dot(x.row(i), x.row(i)) + 1.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config_.seed);
  const double c = config_.c;

  for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const auto xi = x.row(i);
      const double g = y[i] * (dot(w_, xi) + b_) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[i] >= c) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (pg == 0.0) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double step = (alpha[i] - old) * y[i];
      if (step == 0.0) continue;
      for (std::size_t k = 0; k < xi.size(); ++k) w_[k] += step * xi[k];
      b_ += step;
    }
    const double norm2 = dot(w_, w_) + b_ * b_;
    dual_trace_.push_back(std::accumulate(alpha.begin(), alpha.end(), 0.0) - 0.5 * norm2);
    primal_trace_.push_back(primal_objective(x, labels));
    if (!std::isfinite(primal_trace_.back())) throw NumericalError("svm objective is not finite");
    if (pg_max - pg_min < config_.tolerance) break;
  }
}

double LinearSvm::primal_objective(const FeatureMatrix& x, std::span<const int> labels) const {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double y = labels[i] == 1 ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * score(x.row(i)));
  }
  return 0.5 * (dot(w_, w_) + b_ * b_) + config_.c * loss;
}

double LinearSvm::score(std::span<const double> x) const {
  if (x.size() != w_.size()) throw DataError("svm input width mismatch");
  return dot(w_, x) + b_;
}

json LinearSvm::to_json() const {
  return {{"kind", "svm"}, {"c", config_.c}, {"max_epochs", config_.max_epochs},
          {"tolerance", config_.tolerance}, {"seed", config_.seed}, {"weights", w_}, {"bias", b_}};
}

LinearSvm LinearSvm::from_json(const json& j) {
  SvmConfig cfg;
  cfg.c = j.at("c").get<double>();
  cfg.max_epochs = j.at("max_epochs").get<int>();
  cfg.tolerance = j.at("tolerance").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  LinearSvm svm(cfg);
  svm.w_ = j.at("weights").get<std::vector<double>>();
  svm.b_ = j.at("bias").get<double>();
  return svm;
}

void NearestCentroid::fit(const FeatureMatrix& x, std::span<const int> labels) {
  check_binary_labels(labels, x.rows);
  c0_.assign(x.cols, 0.0);
  c1_.assign(x.cols, 0.0);
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto& c = labels[r] == 1 ? c1_ : c0_;
    (labels[r] == 1 ? n1 : n0)++;
    const auto xr = x.row(r);
    for (std::size_t k = 0; k < x.cols; ++k) c[k] += xr[k];
  }
  for (auto& v : c0_) v /= static_cast<double>(n0);
  for (auto& v : c1_) v /= static_cast<double>(n1);
}

double NearestCentroid::score(std::span<const double> x) const {
  if (x.size() != c0_.size()) throw DataError("centroid input width mismatch");
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    d0 += (x[k] - c0_[k]) * (x[k] - c0_[k]);
    d1 += (x[k] - c1_[k]) * (x[k] - c1_[k]);
  }
  const double s = d0 - d1;
  return s == 0.0 ? -std::numeric_limits<double>::denorm_min() : s;
}

json NearestCentroid::to_json() const { return {{"kind", "centroid"}, {"centroid0", c0_}, {"centroid1", c1_}}; }

NearestCentroid NearestCentroid::from_json(const json& j) {
  NearestCentroid nc;
  nc.c0_ = j.at("centroid0").get<std::vector<double>>();
  nc.c1_ = j.at("centroid1").get<std::vector<double>>();
  if (nc.c0_.size() != nc.c1_.size()) throw DataError("centroid size mismatch");
  return nc;
}

double classifier_score(const AnyClassifier& c, std::span<const double> x) {
  return std::visit([&](const auto& m) { return m.score(x); }, c);
}

json classifier_to_json(const AnyClassifier& c) {
  return std::visit([](const auto& m) { return m.to_json(); }, c);
}

AnyClassifier classifier_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "svm") return LinearSvm::from_json(j);
  if (kind == "centroid") return NearestCentroid::from_json(j);
  throw DataError("unknown classifier kind '" + kind + "'");
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cv_folds must be >= 2");
  std::vector<int> fold(labels.size(), 0);
  std::mt19937_64 rng(seed);
  int next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    // Continue dealing where the previous class stopped so fold sizes stay even.
    for (std::size_t i : idx) {
      fold[i] = next;
      next = (next + 1) % folds;
    }
  }
  return fold;
}

GridResult select_svm_c(const FeatureMatrix& x, std::span<const int> labels, std::span<const double> grid,
                        int folds, std::uint64_t seed, int threads) {
  check_binary_labels(labels, x.rows);
  if (grid.empty()) throw ConfigError("svm C grid is empty");
  const auto fold = stratified_folds(labels, folds, seed);
  // One slot per (grid value, fold) so the reduction order is fixed.
  std::vector<double> f1s(grid.size() * static_cast<std::size_t>(folds), 0.0);
  parallel_for(f1s.size(), threads, [&](std::size_t job) {
    const std::size_t g = job / static_cast<std::size_t>(folds);
    const int f = static_cast<int>(job % static_cast<std::size_t>(folds));
    std::vector<std::size_t> tr, va;
    std::vector<int> ytr, yva;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold[i] == f) {
        va.push_back(i);
        yva.push_back(labels[i]);
      } else {
        tr.push_back(i);
        ytr.push_back(labels[i]);
      }
    }
    if (va.empty() || std::count(ytr.begin(), ytr.end(), 1) == 0 || std::count(ytr.begin(), ytr.end(), 0) == 0)
      return;
    SvmConfig cfg;
    cfg.c = grid[g];
    cfg.seed = derive_seed(seed, kStreamGridSearch, job);
    LinearSvm svm(cfg);
    svm.fit(x.select(tr), ytr);
    std::vector<int> pred;
    for (std::size_t i : va) pred.push_back(svm.decide(x.row(i)));
    f1s[job] = f1(confusion(yva, pred));
  });
  GridResult out;
  double best = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (int f = 0; f < folds; ++f) s += f1s[g * static_cast<std::size_t>(folds) + static_cast<std::size_t>(f)];
    s /= folds;
    out.mean_f1.push_back(s);
    if (s > best) {
      best = s;
      out.best_c = grid[g];
    }
  }
  return out;
}

}  // namespace spiketurn
