#include "spiketurn/common.hpp"
#include "spiketurn/metrics.hpp"
#include "spiketurn/objects.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

using namespace spiketurn;

TEST_CASE("history windows") {
  const std::vector<int> seq{3, 1, 4};
  const auto w = trigram_windows(seq);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == ObjectHistory{{0, 0, 3}, 1});
  CHECK(w[1] == ObjectHistory{{0, 3, 1}, 4});
  const std::vector<int> longer{1, 2, 3, 4, 5};
  CHECK(trigram_windows(longer).back() == ObjectHistory{{2, 3, 4}, 5});
  CHECK(trigram_windows(std::vector<int>{2}).empty());
  CHECK(query_window(seq) == std::vector<int>{3, 1, 4});
  CHECK(query_window(std::vector<int>{5}) == std::vector<int>{0, 0, 5});
  CHECK(query_window(std::vector<int>{}) == std::vector<int>{0, 0, 0});
  CHECK(query_window(longer, 6, 2) == std::vector<int>{4, 5});
  CHECK_THROWS_AS(trigram_windows(std::vector<int>{1, 7}), DataError);
  CHECK_THROWS_AS(trigram_windows(std::vector<int>{1, 0}), DataError);
  CHECK_THROWS_AS(query_window(seq, 6, 0), ConfigError);
}

TEST_CASE("softmax and argmax") {
  const std::vector<double> ll{0.0, 0.0, std::log(2.0)};
  const auto p = softmax_argmax(ll);
  CHECK(p.object == 3);
  CHECK(p.probs[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.probs[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(softmax_argmax(std::vector<double>{-3.0, -1.0, -1.0}).object == 2);
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto u = softmax_argmax(std::vector<double>{ninf, ninf});
  CHECK(u.object == 1);
  CHECK(u.probs == std::vector<double>{0.5, 0.5});
  const auto big = softmax_argmax(std::vector<double>{-1000.0, -1001.0, ninf});
  CHECK(big.probs[2] == 0.0);
  CHECK(big.probs[0] + big.probs[1] == doctest::Approx(1.0));
}

TEST_CASE("oversampling") {
  std::vector<std::vector<ObjectHistory>> by_class(3);
  for (int i = 0; i < 3; ++i) by_class[0].push_back({{0, 0, i + 1}, 1});
  by_class[1].push_back({{0, 1, 2}, 2});
  const auto out = oversample(by_class, 4);
  CHECK(out[0] == by_class[0]);
  REQUIRE(out[1].size() == 3);
  for (const auto& h : out[1]) CHECK(h == by_class[1][0]);
  CHECK(out[2].empty());
  CHECK(oversample(by_class, 4) == out);
}

TEST_CASE("bigram predictor") {
  const std::vector<int> seq{1, 2, 1, 3, 1, 2};
  const auto b = BigramPredictor::fit(trigram_windows(seq), 6);
  CHECK(b.predict(std::vector<int>{0, 0, 1}) == 2);
  CHECK(b.predict(std::vector<int>{0, 1, 2}) == 1);
  CHECK(b.predict(std::vector<int>{1, 1, 3}) == 1);
  CHECK(b.predict(std::vector<int>{0, 0, 5}) == 1);  // unseen: most frequent request, ties to smaller id
}

TEST_CASE("object hmms learn a scripted procedure") {
  const std::vector<int> script{1, 2, 3, 4, 2, 5, 4, 2, 6, 2, 4, 6, 2, 4};
  std::vector<ObjectHistory> hist;
  for (int r = 0; r < 4; ++r) {
    auto h = trigram_windows(script);
    hist.insert(hist.end(), h.begin(), h.end());
  }
  ObjectModelConfig cfg;
  cfg.em.restarts = 3;
  cfg.em.max_iterations = 60;
  const auto m1 = train_object_models(hist, cfg, 9, 1);
  const auto m3 = train_object_models(hist, cfg, 9, 3);
  CHECK(m1.to_json() == m3.to_json());
  CHECK(ObjectModels::from_json(m1.to_json()).to_json() == m1.to_json());
  std::vector<int> truth, pred;
  for (const auto& h : hist) {
    const auto p = m1.predict(h.window);
    CHECK(std::accumulate(p.probs.begin(), p.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.probs[p.object - 1] == *std::max_element(p.probs.begin(), p.probs.end()));
    truth.push_back(h.next);
    pred.push_back(p.object);
  }
  CHECK(weighted_f1(truth, pred, 6) >= 0.6);
  // Object 1 is never requested after a predecessor, so its model stays untrained.
  CHECK_FALSE(m1.trained[0]);
  CHECK(m1.trained[1]);
}

TEST_CASE("object evaluation over held-out subjects") {
  const auto corpus = testing::small_corpus(3, 12, 8);
  ObjectModelConfig cfg;
  cfg.em.restarts = 2;
  cfg.em.max_iterations = 40;
  const auto a = evaluate_objects(corpus, cfg, 1, 1);
  const auto b = evaluate_objects(corpus, cfg, 1, 3);
  REQUIRE(a.size() == 3);
  for (std::size_t f = 0; f < a.size(); ++f) {
    CHECK(a[f].held_out_subject == corpus.subjects[f]);
    CHECK(a[f].hmm_f1 == b[f].hmm_f1);
    CHECK(a[f].bigram_f1 == b[f].bigram_f1);
    CHECK(a[f].random_f1 == b[f].random_f1);
    CHECK(a[f].hmm_f1 >= 0.0);
    CHECK(a[f].hmm_f1 <= 1.0);
    CHECK(a[f].predictions.size() == 3 * 13);  // 3 trials, 14-step script
  }
  const auto dir = testing::scratch_dir("objects");
  write_object_predictions(a[0].predictions, 6, dir / "p.csv");
  std::ifstream in(dir / "p.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "trial_id,step,true_object,pred_object,p1,p2,p3,p4,p5,p6");
  CHECK(first.rfind(a[0].predictions[0].trial_id + ",2,", 0) == 0);
}

TEST_CASE("object selection examples") {
  const auto equal = softmax_argmax(std::vector<double>(6, -2.5));
  for (double p : equal.probs) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  const std::vector<double> u{0.1, 0.5, 0.2, 0.1, 0.05, 0.05};
  std::vector<double> ll;
  for (double p : u) ll.push_back(std::log(p));
  const auto pick = softmax_argmax(ll);
  CHECK(pick.object == 2);
  for (std::size_t j = 0; j < u.size(); ++j) CHECK(pick.probs[j] == doctest::Approx(u[j]).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> any(-500.0, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(6);
    for (auto& x : v) x = any(rng);
    const auto p = softmax_argmax(v);
    CHECK(std::abs(std::accumulate(p.probs.begin(), p.probs.end(), 0.0) - 1.0) <= 1e-9);
  }

  CHECK(trigram_windows(std::vector<int>{4, 2}).front() == ObjectHistory{{0, 0, 4}, 2});

  std::vector<std::vector<ObjectHistory>> by_class(2);
  by_class[0].assign(10, ObjectHistory{{0, 0, 1}, 1});
  by_class[1].assign(20, ObjectHistory{{0, 0, 2}, 2});
  const auto balanced = oversample(by_class, 1);
  CHECK(balanced[0].size() == 20);
  CHECK(balanced[1].size() == 20);
}
