#include "spiketurn/common.hpp"
#include "spiketurn/descriptors.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <bit>
#include <random>
#include <set>

using namespace spiketurn;
using namespace spiketurn::testing;


TEST_CASE("nhnf examples") {
  FiringMap m;
  m.firings.push_back({3, 10});
  const FiringMap maps[] = {m};
  auto d = nhnf(maps, 25, 250.0);
  CHECK(d.features == 1);
  CHECK(d.bins == 25);
  CHECK(d.at(0, 0) == doctest::Approx(0.004).epsilon(1e-15));
  for (std::size_t b = 1; b < 25; ++b) CHECK(d.at(0, b) == 0.0);

  const FiringMap empty[] = {FiringMap{}};
  for (double v : nhnf(empty, 25, 250.0).values) CHECK(v == 0.0);

  FiringMap many;
  for (int n = 0; n < 250; n += 7) many.firings.push_back({n, 1 + n % 200});
  const FiringMap two[] = {many, m};
  const auto h1 = nhnf(two, 25, 250.0), h2 = nhnf(two, 25, 500.0);
  REQUIRE(h1.values.size() == 50);
  for (std::size_t i = 0; i < h1.values.size(); ++i) CHECK(h2.values[i] == doctest::Approx(h1.values[i] / 2.0));
  // Neuron 249 lands in the last bin.
  FiringMap last;
  last.firings.push_back({249, 5});
  const FiringMap lm[] = {last};
  CHECK(nhnf(lm, 25, 100.0).at(0, 24) == doctest::Approx(0.01));
}

TEST_CASE("png extraction") {
  CHECK(extract_png(FiringMap{}).empty());
  FiringMap m;
  m.firings = {{5, 1}, {2, 2}, {9, 3}};
  const auto g = extract_png(m);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == NeuronSet{5});
  CHECK(g[1] == NeuronSet{2});
  CHECK(g[2] == NeuronSet{9});
  m.firings = {{1, 4}, {7, 4}, {3, 9}};
  const auto h = extract_png(m);
  REQUIRE(h.size() == 2);
  CHECK(h[0] == NeuronSet{1, 7});
}

TEST_CASE("jaccard examples") {
  CHECK(jaccard({4, 7}, {4, 7}) == 1.0);
  CHECK(jaccard({4, 7}, {9, 12}) == 0.0);
  CHECK(jaccard({4}, {4, 7, 9}) == 1.0);  // containment
  CHECK(jaccard({1, 2, 3}, {2, 3, 4}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(jaccard({}, {1}), ConfigError);
}

TEST_CASE("lcs similarity examples") {
  const PngGroup p{{1, 2}, {3, 4}, {5, 6}}, q{{1, 2}, {5, 6}};
  CHECK(lcs_length(p, q, 0.9) == 2);
  CHECK(lcs_similarity(p, q, 0.9) == 1.0);
  CHECK(lcs_similarity(p, p, 0.9) == 1.0);
  CHECK(lcs_similarity(PackedPng(p), PackedPng(q), 0.9) == 1.0);
  CHECK_THROWS_AS(lcs_similarity(p, PngGroup{}, 0.9), ConfigError);
}

TEST_CASE("lcs similarity equals brute-force subsequence enumeration") {
  std::mt19937_64 rng(derive_seed(31, 1));
  std::uniform_int_distribution<std::size_t> len(1, 8);
  const double eps_values[] = {0.3, 0.5, 0.9, 1.0};
  for (int pair = 0; pair < 500; ++pair) {
    const auto p = random_group(rng, len(rng), 6);
    const auto q = random_group(rng, len(rng), 6);
    const double eps = eps_values[pair % 4];
    const auto truth = brute_lcs(p, q, eps);
    const double sigma = static_cast<double>(truth) / static_cast<double>(std::min(p.size(), q.size()));
    CHECK(lcs_length(p, q, eps) == truth);
    CHECK(lcs_similarity(p, q, eps) == sigma);
    CHECK(lcs_similarity(PackedPng(p), PackedPng(q), eps) == sigma);
  }
}

TEST_CASE("bit-parallel lcs agrees with the quadratic programme on long groups") {
  std::mt19937_64 rng(derive_seed(32, 1));
  std::uniform_int_distribution<std::size_t> len(1, 300);
  for (int pair = 0; pair < 60; ++pair) {
    const auto p = random_group(rng, len(rng), 12);
    const auto q = random_group(rng, len(rng), 12);
    CHECK(lcs_similarity(PackedPng(p), PackedPng(q), 0.5) == lcs_similarity(p, q, 0.5));
  }
}
