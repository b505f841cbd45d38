#include "spiketurn/features.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace spiketurn {

std::string to_string(FilterId id) {
  switch (id) {
    case FilterId::Identity: return "identity";
    case FilterId::Deriv: return "deriv";
    case FilterId::DerivOfGaussian: return "deriv_of_gaussian";
    case FilterId::LaplacianOfGaussian: return "laplacian_of_gaussian";
    case FilterId::Gabor1: return "gabor1";
    case FilterId::Gabor2: return "gabor2";
  }
  return "unknown";
}

FilterId filter_from_string(const std::string& name) {
  for (FilterId id : kAllFilters)
    if (to_string(id) == name) return id;
  throw ConfigError("unknown filter '" + name + "'");
}

namespace {

std::vector<double> gaussian_taps(double sigma) {
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> g(2 * half + 1);
  for (int i = -half; i <= half; ++i) g[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));
  return g;
}

}  // namespace

std::vector<double> filter_kernel(FilterId id, double sample_hz) {
  switch (id) {
    case FilterId::Identity:
      return {1.0};
    case FilterId::Deriv:
      return {-0.5, 0.0, 0.5};
    case FilterId::DerivOfGaussian: {
      const double sigma = 2.0;
      auto k = gaussian_taps(sigma);
      const int half = static_cast<int>(k.size() / 2);
      double gain = 0.0;
      for (int i = -half; i <= half; ++i) {
        k[i + half] *= i / (sigma * sigma);
        gain += k[i + half] * i;
      }
      for (double& v : k) v /= gain;
      return k;
    }
    case FilterId::LaplacianOfGaussian: {
      const double sigma = 2.0;
      auto k = gaussian_taps(sigma);
      const int half = static_cast<int>(k.size() / 2);
      for (int i = -half; i <= half; ++i)
        k[i + half] *= (static_cast<double>(i) * i / (sigma * sigma) - 1.0) / (sigma * sigma);
      const double mean = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size());
      double gain = 0.0;
      for (int i = -half; i <= half; ++i) {
        k[i + half] -= mean;
        gain += k[i + half] * 0.5 * i * i;
      }
      for (double& v : k) v /= gain;
      return k;
    }
    case FilterId::Gabor1:
    case FilterId::Gabor2: {
      const double sigma = 3.0;
      const double freq_hz = id == FilterId::Gabor1 ? 1.0 : 3.0;
      auto k = gaussian_taps(sigma);
      const double mass = std::accumulate(k.begin(), k.end(), 0.0);
      const int half = static_cast<int>(k.size() / 2);
      for (int i = -half; i <= half; ++i)
        k[i + half] *= std::cos(2.0 * std::numbers::pi * freq_hz * i / sample_hz) / mass;
      return k;
    }
  }
  throw ConfigError("unknown filter id");
}

std::vector<double> correlate_replicate(std::span<const double> series, std::span<const double> kernel) {
  const auto n = static_cast<std::ptrdiff_t>(series.size());
  const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> out(series.size(), 0.0);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(kernel.size()); ++k) {
      const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(t + k - half, 0, n - 1);
      acc += kernel[k] * series[src];
    }
    out[t] = acc;
  }
  return out;
}

std::vector<double> encode(std::span<const double> series, FilterId id, double sample_hz) {
  if (id == FilterId::Identity) return {series.begin(), series.end()};
  const auto kernel = filter_kernel(id, sample_hz);
  return correlate_replicate(series, kernel);
}

std::array<std::vector<double>, kFilterCount> filter_bank_encode(std::span<const double> series, double sample_hz) {
  std::array<std::vector<double>, kFilterCount> out;
  for (std::size_t f = 0; f < kFilterCount; ++f) out[f] = encode(series, kAllFilters[f], sample_hz);
  return out;
}

void FeatureSpec::validate() const {
  if (selected.empty()) throw ConfigError("feature spec must select at least one feature");
  if (chi2_scores.size() != selected.size()) throw ConfigError("feature spec scores do not match selection");
  std::set<FeatureRef> unique(selected.begin(), selected.end());
  if (unique.size() != selected.size()) throw ConfigError("feature spec contains duplicate features");
  if (!std::is_sorted(chi2_scores.begin(), chi2_scores.end(), std::greater<>()))
    throw ConfigError("feature spec scores must be sorted descending");
}

std::vector<double> feature_series(const ObservationMatrix& x, const FeatureRef& feature) {
  if (feature.channel >= x.cols) throw DataError("feature channel index out of range");
  return encode(x.column(feature.channel), feature.filter, x.sample_hz);
}

namespace {

double linear_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

double chi2_statistic(std::span<const double> values, std::span<const int> labels, std::size_t bins) {
  if (values.size() != labels.size()) throw ConfigError("chi2: values and labels differ in length");
  if (values.empty() || bins < 2) throw ConfigError("chi2: need values and at least two bins");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges(bins - 1);
  for (std::size_t k = 1; k < bins; ++k) edges[k - 1] = linear_quantile(sorted, static_cast<double>(k) / bins);

  std::vector<std::array<double, 2>> table(bins, {0.0, 0.0});
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bin = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    table[bin][labels[i] ? 1 : 0] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  std::array<double, 2> col{0.0, 0.0};
  for (const auto& row : table) {
    col[0] += row[0];
    col[1] += row[1];
  }
  double stat = 0.0;
  for (const auto& row : table) {
    const double row_total = row[0] + row[1];
    for (int c = 0; c < 2; ++c) {
      const double expected = row_total * col[c] / n;
      if (expected > 0.0) stat += (row[c] - expected) * (row[c] - expected) / expected;
    }
  }
  return stat;
}

FeatureSpec chi2_rank(const Corpus& corpus, std::size_t num_features, std::size_t bins) {
  const std::size_t m = corpus.n_channels();
  if (corpus.count_label(0) == 0 || corpus.count_label(1) == 0)
    throw DataError("chi2_rank requires both classes in the corpus");
  if (num_features < 1 || num_features > kFilterCount * m)
    throw ConfigError("num_features must lie in [1, 6 * channels]");

  std::vector<int> labels;
  for (const auto& ev : corpus.events) labels.insert(labels.end(), ev.observation.rows, ev.label());

  struct Scored {
    FeatureRef ref;
    double score;
  };
  std::vector<Scored> scored;
  for (std::size_t c = 0; c < m; ++c) {
    std::array<std::vector<double>, kFilterCount> pooled;
    for (const auto& ev : corpus.events) {
      auto enc = filter_bank_encode(ev.observation.column(c), ev.observation.sample_hz);
      for (std::size_t f = 0; f < kFilterCount; ++f) pooled[f].insert(pooled[f].end(), enc[f].begin(), enc[f].end());
    }
    for (std::size_t f = 0; f < kFilterCount; ++f)
      scored.push_back({{c, kAllFilters[f]}, chi2_statistic(pooled[f], labels, bins)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  FeatureSpec spec;
  for (std::size_t i = 0; i < num_features; ++i) {
    spec.selected.push_back(scored[i].ref);
    spec.chi2_scores.push_back(scored[i].score);
  }
  return spec;
}

}  // namespace spiketurn
