#pragma once

#include "spiketurn/snn.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace spiketurn {

// m x B time-normalized firing histogram, row-major (one row per feature map).
struct NhnfDescriptor {
  std::size_t features{0};
  std::size_t bins{0};
  double simulated_ms{0.0};
  std::vector<double> values;

  double at(std::size_t i, std::size_t b) const { return values[i * bins + b]; }
};

// h[i, b] = (# firings of map i by neurons in [b N / B, (b + 1) N / B)) / t_effective.
NhnfDescriptor nhnf(std::span<const FiringMap> maps, std::size_t bins, double t_effective);

void write_descriptor_csv(const NhnfDescriptor& d, const std::filesystem::path& path);

using NeuronSet = std::vector<int>;  // sorted, unique

// Co-firing sequence: the set of neurons firing in each millisecond that has
// at least one firing, in time order.
using PngGroup = std::vector<NeuronSet>;

PngGroup extract_png(const FiringMap& map);

// |A n B| / |A u B|, except that containment (A in B or B in A) scores 1.
double jaccard(const NeuronSet& a, const NeuronSet& b);

// Tokens match iff jaccard >= j_eps. Returns LCS(P, Q) / min(|P|, |Q|).
double lcs_similarity(const PngGroup& p, const PngGroup& q, double j_eps);

// Length of the longest common subsequence under the thresholded-Jaccard
// match relation (quadratic dynamic programme).
std::size_t lcs_length(const PngGroup& p, const PngGroup& q, double j_eps);

// Bitset form of a PNG group for repeated comparisons against templates.
// Every token is a 256-bit neuron mask; an inverted index maps each neuron to
// the bitset of positions whose token contains it.
class PackedPng {
public:
  PackedPng() = default;
  explicit PackedPng(const PngGroup& group);

  std::size_t size() const { return sizes_.size(); }

private:
  friend double lcs_similarity(const PackedPng& p, const PackedPng& q, double j_eps);
  std::size_t words() const { return (sizes_.size() + 63) / 64; }

  std::vector<std::array<std::uint64_t, 4>> masks_;
  std::vector<int> sizes_;
  std::vector<int> neurons_;         // token members, concatenated
  std::vector<std::size_t> offsets_;  // token j owns neurons_[offsets_[j], offsets_[j + 1])
  std::vector<std::uint64_t> index_;  // 256 x words()
};

// Same value as lcs_similarity on the unpacked groups; bit-parallel LCS.
double lcs_similarity(const PackedPng& p, const PackedPng& q, double j_eps);

}  // namespace spiketurn
