#include "spiketurn/classifier.hpp"
#include "spiketurn/common.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace spiketurn;

namespace {

FeatureMatrix rows_of(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix x;
  for (const auto& r : rows) x.push_back(r);
  return x;
}

struct Blobs {
  FeatureMatrix x;
  std::vector<int> y;
};

Blobs blobs(std::size_t n, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Blobs b;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double shift = label ? separation / 2.0 : -separation / 2.0;
    b.x.push_back(std::vector<double>{shift + normal(rng), shift + normal(rng), normal(rng)});
    b.y.push_back(label);
  }
  return b;
}

double accuracy(const auto& clf, const FeatureMatrix& x, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.rows; ++i) ok += clf.decide(x.row(i)) == y[i];
  return static_cast<double>(ok) / static_cast<double>(x.rows);
}

}  // namespace

TEST_CASE("svm on a separable line recovers the maximum-margin solution") {
  const auto x = rows_of({{-2.0}, {-1.0}, {1.0}, {2.0}});
  const std::vector<int> y{0, 0, 1, 1};
  SvmConfig cfg;
  cfg.c = 1000.0;
  cfg.tolerance = 1e-9;
  cfg.max_epochs = 100000;
  LinearSvm svm(cfg);
  svm.fit(x, y);
  CHECK(svm.weights()[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(svm.bias()) < 1e-6);
  CHECK(accuracy(svm, x, y) == 1.0);
}

TEST_CASE("svm dual trace is monotone and closes the duality gap") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto b = blobs(120, 1.5, seed);  // overlapping classes
    SvmConfig cfg;
    cfg.c = 0.5;
    cfg.seed = seed;
    cfg.tolerance = 1e-6;
    cfg.max_epochs = 5000;
    LinearSvm svm(cfg);
    svm.fit(b.x, b.y);
    const auto& dual = svm.dual_trace();
    const auto& primal = svm.primal_trace();
    REQUIRE(dual.size() == primal.size());
    REQUIRE_FALSE(dual.empty());
    for (std::size_t i = 1; i < dual.size(); ++i) CHECK(dual[i] >= dual[i - 1] - 1e-9);
    for (std::size_t i = 0; i < dual.size(); ++i) CHECK(dual[i] <= primal[i] + 1e-9);
    const double gap = primal.back() - dual.back();
    CHECK(gap <= 1e-3 * std::max(1.0, std::abs(primal.back())));
  }
}

TEST_CASE("linear models cannot solve xor") {
  const auto x = rows_of({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}});
  const std::vector<int> y{0, 0, 1, 1};
  for (double c : {0.01, 1.0, 100.0}) {
    SvmConfig cfg;
    cfg.c = c;
    LinearSvm svm(cfg);
    svm.fit(x, y);
    CHECK(accuracy(svm, x, y) <= 0.75);
  }
  NearestCentroid nc;
  nc.fit(x, y);
  CHECK(accuracy(nc, x, y) <= 0.75);
}

TEST_CASE("nearest centroid") {
  const auto x = rows_of({{0.0, 0.0}, {2.0, 0.0}, {0.0, 4.0}, {2.0, 4.0}});
  const std::vector<int> y{0, 0, 1, 1};
  NearestCentroid nc;
  nc.fit(x, y);
  CHECK(nc.centroid(0) == std::vector<double>{1.0, 0.0});
  CHECK(nc.centroid(1) == std::vector<double>{1.0, 4.0});
  CHECK(nc.score(std::vector<double>{1.0, 1.0}) == -8.0);
  CHECK(nc.score(std::vector<double>{1.0, 3.0}) == 8.0);
  const double tie = nc.score(std::vector<double>{5.0, 2.0});
  CHECK(tie < 0.0);
  CHECK(nc.decide(std::vector<double>{5.0, 2.0}) == 0);
  CHECK(nc.decide(std::vector<double>{1.0, 3.0}) == 1);
  CHECK_THROWS_AS(nc.score(std::vector<double>{1.0}), DataError);
}

TEST_CASE("well separated blobs") {
  const auto train = blobs(400, 8.0, 11);
  const auto test = blobs(400, 8.0, 12);
  LinearSvm svm;
  svm.fit(train.x, train.y);
  NearestCentroid nc;
  nc.fit(train.x, train.y);
  CHECK(accuracy(svm, test.x, test.y) >= 0.99);
  CHECK(accuracy(nc, test.x, test.y) >= 0.99);
}

TEST_CASE("classifier input validation") {
  const auto x = rows_of({{0.0}, {1.0}});
  LinearSvm svm;
  CHECK_THROWS_AS(svm.fit(x, std::vector<int>{1, 1}), DataError);
  CHECK_THROWS_AS(svm.fit(x, std::vector<int>{0, 2}), DataError);
  CHECK_THROWS_AS(svm.fit(x, std::vector<int>{0}), DataError);
  SvmConfig bad;
  bad.c = 0.0;
  CHECK_THROWS_AS(LinearSvm(bad).fit(x, std::vector<int>{0, 1}), ConfigError);
}

TEST_CASE("standardizer") {
  const auto x = rows_of({{1.0, 5.0}, {3.0, 5.0}});
  const auto s = Standardizer::fit(x);
  CHECK(s.apply(std::vector<double>{1.0, 5.0}) == std::vector<double>{-1.0, 0.0});
  CHECK(s.apply(std::vector<double>{5.0, 9.0}) == std::vector<double>{3.0, 0.0});
  CHECK(Standardizer::from_json(s.to_json()) == s);
}

TEST_CASE("stratified folds") {
  std::vector<int> labels;
  for (int i = 0; i < 53; ++i) labels.push_back(i % 3 == 0 ? 1 : 0);
  const auto folds = stratified_folds(labels, 5, 9);
  CHECK(folds == stratified_folds(labels, 5, 9));
  for (int label : {0, 1}) {
    std::vector<int> count(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) ++count[folds[i]];
    const auto [lo, hi] = std::minmax_element(count.begin(), count.end());
    CHECK(*hi - *lo <= 1);
  }
}

TEST_CASE("grid search keeps the earliest best value and is thread-invariant") {
  const auto b = blobs(100, 10.0, 4);
  const std::vector<double> grid{0.01, 0.1, 1.0, 10.0};
  const auto r1 = select_svm_c(b.x, b.y, grid, 5, 3, 1);
  const auto r4 = select_svm_c(b.x, b.y, grid, 5, 3, 4);
  CHECK(r1.mean_f1 == r4.mean_f1);
  CHECK(r1.best_c == r4.best_c);
  REQUIRE(r1.mean_f1.size() == grid.size());
  CHECK(r1.mean_f1[0] == 1.0);
  CHECK(r1.best_c == 0.01);
}

TEST_CASE("classifier json round trip") {
  const auto b = blobs(60, 3.0, 5);
  LinearSvm svm;
  svm.fit(b.x, b.y);
  const AnyClassifier a = svm;
  const auto back = classifier_from_json(classifier_to_json(a));
  REQUIRE(std::holds_alternative<LinearSvm>(back));
  for (std::size_t i = 0; i < b.x.rows; ++i) CHECK(classifier_score(back, b.x.row(i)) == svm.score(b.x.row(i)));
  NearestCentroid nc;
  nc.fit(b.x, b.y);
  const auto nback = classifier_from_json(classifier_to_json(AnyClassifier{nc}));
  REQUIRE(std::holds_alternative<NearestCentroid>(nback));
  CHECK(std::get<NearestCentroid>(nback) == nc);
  CHECK_THROWS_AS(classifier_from_json(nlohmann::json{{"kind", "forest"}}), DataError);
}

TEST_CASE("nearest centroid on a line") {
  const auto x = rows_of({{0.0}, {10.0}});
  NearestCentroid nc;
  nc.fit(x, std::vector<int>{0, 1});
  CHECK(nc.decide(std::vector<double>{1.0}) == 0);
  CHECK(nc.decide(std::vector<double>{5.0}) == 0);
  CHECK(nc.decide(std::vector<double>{5.5}) == 1);
}

TEST_CASE("svm on the two-point line") {
  const auto x = rows_of({{-1.0}, {1.0}});
  LinearSvm svm;
  svm.fit(x, std::vector<int>{0, 1});
  CHECK(svm.score(std::vector<double>{-1.0}) < 0.0);
  CHECK(svm.score(std::vector<double>{1.0}) > 0.0);
}
