#pragma once

#include "spiketurn/dataset.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace spiketurn {

// Binary confusion counts with class 1 as the positive class.
struct Confusion {
  std::size_t tp{0};
  std::size_t fp{0};
  std::size_t fn{0};
  std::size_t tn{0};

  void add(int truth, int pred);
  std::size_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& o);
  bool operator==(const Confusion&) const = default;
};

Confusion confusion(std::span<const int> truth, std::span<const int> pred, int positive = 1);

// Harmonic mean of precision and recall. 0 when tp = 0 (this includes the
// empty case tp = fp = fn = 0); 1 when tp > 0 and fp = fn = 0.
double f1(std::size_t tp, std::size_t fp, std::size_t fn);
inline double f1(const Confusion& c) { return f1(c.tp, c.fp, c.fn); }

// sum_c n_c F1_c / sum_c n_c.
double weighted_f1(std::span<const Confusion> per_class, std::span<const std::size_t> class_sizes);

// One-vs-rest weighted F1 over classes 1..n_classes, weighted by true counts.
double weighted_f1(std::span<const int> truth, std::span<const int> pred, int n_classes);

// tau grid 0.1, 0.2, ..., 1.0.
std::vector<double> default_taus();

struct EarlyCurve {
  std::vector<double> taus;
  std::vector<double> f1_values;
  double auc{0.0};
};

// Left-Riemann sum with step 0.1 over the ten points of default_taus().
double auc(std::span<const double> f1_values);
double auc(const EarlyCurve& curve);
EarlyCurve make_curve(std::vector<double> f1_values);

// Lower of the two middle elements for even lengths.
double median(std::span<const double> values);
// median(|v - median(v)|).
double mad(std::span<const double> values);
// "0.932 ± 0.010".
std::string format_median_mad(std::span<const double> values, int decimals = 3);

double cohen_kappa(std::span<const int> a, std::span<const int> b);

struct Fold {
  std::string held_out_subject;
  Corpus train;
  Corpus test;
};

// One fold per subject (in first-appearance order); events and object trials
// of that subject form the test split.
std::vector<Fold> loso_split(const Corpus& corpus);

}  // namespace spiketurn
