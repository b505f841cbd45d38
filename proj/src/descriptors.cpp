#include "spiketurn/descriptors.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <bit>
#include <fstream>

namespace spiketurn {

NhnfDescriptor nhnf(std::span<const FiringMap> maps, std::size_t bins, double t_effective) {
  if (bins == 0) throw ConfigError("nhnf: bins must be positive");
  if (!(t_effective >= 1.0)) throw ConfigError("nhnf: effective duration must be at least 1 ms");
  NhnfDescriptor d;
  d.features = maps.size();
  d.bins = bins;
  d.simulated_ms = t_effective;
  d.values.assign(maps.size() * bins, 0.0);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto n = static_cast<std::size_t>(maps[i].n_neurons);
    if (n % bins != 0) throw ConfigError("nhnf: neuron count must be divisible by the bin count");
    const std::size_t per_bin = n / bins;
    for (const auto& f : maps[i].firings) d.values[i * bins + static_cast<std::size_t>(f.neuron) / per_bin] += 1.0;
  }
  for (double& v : d.values) v /= t_effective;
  return d;
}

void write_descriptor_csv(const NhnfDescriptor& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write descriptor file " + path.string());
  out.precision(17);
  for (std::size_t b = 0; b < d.bins; ++b) out << (b ? "," : "") << b;
  out << '\n';
  for (std::size_t i = 0; i < d.features; ++i) {
    for (std::size_t b = 0; b < d.bins; ++b) out << (b ? "," : "") << d.at(i, b);
    out << '\n';
  }
}

PngGroup extract_png(const FiringMap& map) {
  PngGroup group;
  int current_t = -1;
  for (const auto& f : map.firings) {
    if (f.time_ms != current_t) {
      group.emplace_back();
      current_t = f.time_ms;
    }
    group.back().push_back(f.neuron);
  }
  for (auto& set : group) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return group;
}

namespace {

bool jaccard_match(std::size_t inter, std::size_t size_a, std::size_t size_b, double j_eps) {
  if (inter == size_a || inter == size_b) return true;
  return static_cast<double>(inter) / static_cast<double>(size_a + size_b - inter) >= j_eps;
}

std::size_t intersection_size(const NeuronSet& a, const NeuronSet& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

void check_groups(std::size_t p, std::size_t q, double j_eps) {
  if (p == 0 || q == 0) throw ConfigError("lcs_similarity: PNG groups must be non-empty");
  if (!(j_eps > 0.0 && j_eps <= 1.0)) throw ConfigError("lcs_similarity: j_eps must lie in (0, 1]");
}

}  // namespace

double jaccard(const NeuronSet& a, const NeuronSet& b) {
  if (a.empty() || b.empty()) throw ConfigError("jaccard: sets must be non-empty");
  const std::size_t inter = intersection_size(a, b);
  if (inter == a.size() || inter == b.size()) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::size_t lcs_length(const PngGroup& p, const PngGroup& q, double j_eps) {
  std::vector<std::size_t> prev(q.size() + 1, 0), cur(q.size() + 1, 0);
  for (std::size_t i = 1; i <= p.size(); ++i) {
    for (std::size_t j = 1; j <= q.size(); ++j) {
      const auto& a = p[i - 1];
      const auto& b = q[j - 1];
      const bool match = !a.empty() && !b.empty() && jaccard_match(intersection_size(a, b), a.size(), b.size(), j_eps);
      cur[j] = match ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[q.size()];
}

double lcs_similarity(const PngGroup& p, const PngGroup& q, double j_eps) {
  check_groups(p.size(), q.size(), j_eps);
  return static_cast<double>(lcs_length(p, q, j_eps)) / static_cast<double>(std::min(p.size(), q.size()));
}

PackedPng::PackedPng(const PngGroup& group) {
  masks_.reserve(group.size());
  sizes_.reserve(group.size());
  offsets_.push_back(0);
  for (const auto& set : group) {
    std::array<std::uint64_t, 4> mask{};
    for (int n : set) {
      if (n < 0 || n >= 256) throw ConfigError("PackedPng: neuron index must be below 256");
      mask[n >> 6] |= std::uint64_t{1} << (n & 63);
      neurons_.push_back(n);
    }
    masks_.push_back(mask);
    sizes_.push_back(static_cast<int>(set.size()));
    offsets_.push_back(neurons_.size());
  }
  const std::size_t w = words();
  index_.assign(256 * w, 0);
  for (std::size_t i = 0; i < group.size(); ++i)
    for (int n : group[i]) index_[static_cast<std::size_t>(n) * w + (i >> 6)] |= std::uint64_t{1} << (i & 63);
}

double lcs_similarity(const PackedPng& p, const PackedPng& q, double j_eps) {
  check_groups(p.size(), q.size(), j_eps);
  // Bit-parallel LCS (Allison-Dix / Hyyro): bit i of V tracks row i of the DP
  // column differences; valid for any match relation. Only positions of p that
  // share a neuron with the current token of q can match.
  const std::size_t n = p.size();
  const std::size_t words = p.words();
  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  std::vector<std::uint64_t> match(words);
  for (std::size_t j = 0; j < q.size(); ++j) {
    std::fill(match.begin(), match.end(), 0);
    const auto& qm = q.masks_[j];
    const auto qs = static_cast<std::size_t>(q.sizes_[j]);
    for (std::size_t k = q.offsets_[j]; k < q.offsets_[j + 1]; ++k) {
      const std::uint64_t* row = p.index_.data() + static_cast<std::size_t>(q.neurons_[k]) * words;
      for (std::size_t w = 0; w < words; ++w) match[w] |= row[w];
    }
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t candidates = match[w];
      while (candidates) {
        const std::size_t i = w * 64 + static_cast<std::size_t>(std::countr_zero(candidates));
        candidates &= candidates - 1;
        const auto& pm = p.masks_[i];
        const auto inter = static_cast<std::size_t>(std::popcount(pm[0] & qm[0]) + std::popcount(pm[1] & qm[1]) +
                                                    std::popcount(pm[2] & qm[2]) + std::popcount(pm[3] & qm[3]));
        if (!jaccard_match(inter, static_cast<std::size_t>(p.sizes_[i]), qs, j_eps))
          match[w] &= ~(std::uint64_t{1} << (i & 63));
      }
    }
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & match[w];
      const std::uint64_t partial = v[w] + u;
      const std::uint64_t sum = partial + carry;
      carry = (partial < v[w] || sum < partial) ? 1 : 0;
      v[w] = sum | (v[w] & ~u);
    }
  }
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!((v[i >> 6] >> (i & 63)) & 1)) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(std::min(p.size(), q.size()));
}

}  // namespace spiketurn
