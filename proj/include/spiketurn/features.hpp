#pragma once

#include "spiketurn/dataset.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spiketurn {

enum class FilterId { Identity = 0, Deriv, DerivOfGaussian, LaplacianOfGaussian, Gabor1, Gabor2 };

inline constexpr std::size_t kFilterCount = 6;
inline constexpr std::array<FilterId, kFilterCount> kAllFilters{
    FilterId::Identity,            FilterId::Deriv,  FilterId::DerivOfGaussian,
    FilterId::LaplacianOfGaussian, FilterId::Gabor1, FilterId::Gabor2};

std::string to_string(FilterId id);
FilterId filter_from_string(const std::string& name);

// 1-D correlation kernel of odd width, centred on the middle tap.
//   Identity             delta
//   Deriv                [-1, 0, 1] / 2
//   DerivOfGaussian      d/dt Gaussian, sigma 2 samples, +-3 sigma, unit ramp gain
//   LaplacianOfGaussian  d2/dt2 Gaussian, sigma 2 samples, zero sum, unit parabola gain
//   Gabor1 / Gabor2      unit-mass Gaussian, sigma 3 samples, times cos at 1 Hz / 3 Hz
std::vector<double> filter_kernel(FilterId id, double sample_hz = 20.0);

// out[t] = sum_k kernel[k] * x[t + k - half], with edge replication outside [0, L).
std::vector<double> correlate_replicate(std::span<const double> series, std::span<const double> kernel);

std::vector<double> encode(std::span<const double> series, FilterId id, double sample_hz = 20.0);
std::array<std::vector<double>, kFilterCount> filter_bank_encode(std::span<const double> series,
                                                                 double sample_hz = 20.0);

struct FeatureRef {
  std::size_t channel{0};
  FilterId filter{FilterId::Identity};

  auto operator<=>(const FeatureRef&) const = default;
};

struct FeatureSpec {
  std::vector<FeatureRef> selected;
  std::vector<double> chi2_scores;  // descending, parallel to `selected`

  std::size_t size() const { return selected.size(); }
  void validate() const;
  bool operator==(const FeatureSpec&) const = default;
};

// Encoded series of one selected feature for an observation.
std::vector<double> feature_series(const ObservationMatrix& x, const FeatureRef& feature);

// Chi-squared statistic of the (quantile bin x label) contingency table. Bin
// edges are the 1/Q, ..., (Q-1)/Q linear-interpolated quantiles of `values`.
double chi2_statistic(std::span<const double> values, std::span<const int> labels, std::size_t bins = 10);

// Scores every (channel, filter) pair over all samples of all events and keeps
// the top `num_features`, ties broken by (channel, filter) order.
FeatureSpec chi2_rank(const Corpus& corpus, std::size_t num_features, std::size_t bins = 10);

}  // namespace spiketurn
