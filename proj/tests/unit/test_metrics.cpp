#include "spiketurn/common.hpp"
#include "spiketurn/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

#include <random>

using namespace spiketurn;

TEST_CASE("f1 direct evaluation and degenerate conventions") {
  CHECK(f1(8, 2, 2) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(f1(5, 0, 0) == 1.0);
  CHECK(f1(0, 5, 0) == 0.0);
  CHECK(f1(0, 0, 5) == 0.0);
  CHECK(f1(0, 0, 0) == 0.0);
  // 2PR/(P+R) with P = 3/4, R = 3/5.
  CHECK(f1(3, 1, 2) == doctest::Approx(2.0 * 0.75 * 0.6 / 1.35).epsilon(1e-15));
}

TEST_CASE("f1 is invariant to event order") {
  std::vector<int> t{1, 0, 1, 1, 0, 0, 1}, p{1, 1, 0, 1, 0, 1, 1};
  const double a = f1(confusion(t, p));
  std::mt19937 rng(1);
  for (int k = 0; k < 20; ++k) {
    std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6};
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> t2, p2;
    for (auto i : idx) {
      t2.push_back(t[i]);
      p2.push_back(p[i]);
    }
    CHECK(f1(confusion(t2, p2)) == a);
  }
}

TEST_CASE("confusion counts are additive") {
  Confusion a = confusion(std::vector<int>{1, 0, 1}, std::vector<int>{1, 1, 0});
  Confusion b = confusion(std::vector<int>{0, 0}, std::vector<int>{0, 1});
  Confusion both = confusion(std::vector<int>{1, 0, 1, 0, 0}, std::vector<int>{1, 1, 0, 0, 1});
  a += b;
  CHECK(a == both);
  CHECK(a.total() == 5);
}

TEST_CASE("weighted f1 examples") {
  std::vector<Confusion> perfect(1), useless(1);
  perfect[0] = {10, 0, 0, 0};
  useless[0] = {0, 3, 3, 0};
  std::vector<Confusion> two{perfect[0], useless[0]};
  CHECK(weighted_f1(two, std::vector<std::size_t>{90, 10}) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(weighted_f1(two, std::vector<std::size_t>{5, 5}) == doctest::Approx(0.5).epsilon(1e-15));
  std::vector<Confusion> one{Confusion{8, 2, 2, 0}};
  CHECK(weighted_f1(one, std::vector<std::size_t>{7}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_THROWS_AS(weighted_f1(two, std::vector<std::size_t>{0, 0}), DataError);
}

TEST_CASE("multiclass weighted f1 weights by true counts") {
  // Class 1: tp 2 fp 0 fn 1 -> 0.8; class 2: tp 1 fp 1 fn 0 -> 2/3.
  std::vector<int> truth{1, 1, 1, 2}, pred{1, 1, 2, 2};
  const double expect = (3 * 0.8 + 1 * (2.0 / 3.0)) / 4.0;
  CHECK(weighted_f1(truth, pred, 2) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>(10, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(auc(std::vector<double>(10, 0.5)) == doctest::Approx(0.5).epsilon(1e-15));
  std::vector<double> spike(10, 0.0);
  spike.back() = 1.0;
  CHECK(auc(spike) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK_THROWS_AS(auc(std::vector<double>(9, 1.0)), DataError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double c = u(rng);
    CHECK(auc(std::vector<double>(10, c)) == doctest::Approx(c).epsilon(1e-12));
  }
  const auto curve = make_curve({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  CHECK(curve.taus.size() == 10);
  CHECK(curve.auc == doctest::Approx(0.55).epsilon(1e-14));
}

TEST_CASE("median and mad") {
  CHECK(mad(std::vector<double>{0.9, 0.9, 0.9}) == 0.0);
  CHECK(mad(std::vector<double>{0.8, 0.9, 1.0}) == doctest::Approx(0.1).epsilon(1e-12));
  // Even length: lower middle.
  CHECK(median(std::vector<double>{4.0, 1.0, 3.0, 2.0}) == 2.0);
  CHECK(mad(std::vector<double>{1.0, 2.0, 3.0, 4.0}) == 1.0);
  CHECK_THROWS_AS(median(std::vector<double>{}), DataError);
  CHECK(format_median_mad(std::vector<double>{0.922, 0.932, 0.942}) == "0.932 ± 0.010");
}

TEST_CASE("cohen kappa") {
  CHECK(cohen_kappa(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cohen_kappa(std::vector<int>{0, 1, 2, 1}, std::vector<int>{0, 1, 2, 1}) == 1.0);
  CHECK(cohen_kappa(std::vector<int>{1, 1}, std::vector<int>{1, 1}) == 1.0);
  CHECK_THROWS_AS(cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 0}), DataError);
  std::vector<int> a{0, 1, 1, 0, 1, 0, 0}, b{1, 1, 0, 0, 1, 0, 1};
  CHECK(cohen_kappa(a, b) == cohen_kappa(b, a));

  std::mt19937_64 rng(derive_seed(42, 1));
  std::bernoulli_distribution coin(0.5);
  std::vector<int> x(10000), y(10000);
  for (auto& v : x) v = coin(rng);
  for (auto& v : y) v = coin(rng);
  CHECK(std::abs(cohen_kappa(x, y)) < 0.05);
}

TEST_CASE("loso split partitions the corpus") {
  Corpus c;
  for (int s = 0; s < 4; ++s)
    for (int e = 0; e < 3; ++e) {
      TurnEvent ev;
      ev.event_id = "s" + std::to_string(s) + "_" + std::to_string(e);
      ev.subject_id = "s" + std::to_string(s);
      c.events.push_back(ev);
    }
  c.trials.push_back({"s1/t1", "s1", {1, 2}});
  c.index_subjects();
  const auto folds = loso_split(c);
  REQUIRE(folds.size() == 4);
  std::multiset<std::string> seen;
  for (const auto& f : folds) {
    for (const auto& e : f.test.events) {
      CHECK(e.subject_id == f.held_out_subject);
      seen.insert(e.event_id);
    }
    for (const auto& e : f.train.events) CHECK(e.subject_id != f.held_out_subject);
    CHECK(f.train.events.size() + f.test.events.size() == c.events.size());
  }
  CHECK(seen.size() == c.events.size());
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == c.events.size());
  CHECK(folds[1].test.trials.size() == 1);
  CHECK(folds[0].train.trials.size() == 1);

  Corpus one;
  one.events.push_back(c.events[0]);
  one.index_subjects();
  CHECK_THROWS_AS(loso_split(one), DataError);
}
