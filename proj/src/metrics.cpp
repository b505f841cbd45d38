#include "spiketurn/metrics.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace spiketurn {

void Confusion::add(int truth, int pred) {
  if (truth == 1) (pred == 1 ? tp : fn)++;
  else (pred == 1 ? fp : tn)++;
}

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

Confusion confusion(std::span<const int> truth, std::span<const int> pred, int positive) {
  if (truth.size() != pred.size()) throw DataError("confusion: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) c.add(truth[i] == positive ? 1 : 0, pred[i] == positive ? 1 : 0);
  return c;
}

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * p * r / (p + r);
}

double weighted_f1(std::span<const Confusion> per_class, std::span<const std::size_t> class_sizes) {
  if (per_class.empty() || per_class.size() != class_sizes.size())
    throw DataError("weighted_f1: need one size per class");
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    num += static_cast<double>(class_sizes[c]) * f1(per_class[c]);
    den += static_cast<double>(class_sizes[c]);
  }
  if (den == 0.0) throw DataError("weighted_f1: all classes are empty");
  return num / den;
}

double weighted_f1(std::span<const int> truth, std::span<const int> pred, int n_classes) {
  std::vector<Confusion> per;
  std::vector<std::size_t> sizes;
  for (int c = 1; c <= n_classes; ++c) {
    per.push_back(confusion(truth, pred, c));
    sizes.push_back(static_cast<std::size_t>(std::count(truth.begin(), truth.end(), c)));
  }
  return weighted_f1(per, sizes);
}

std::vector<double> default_taus() {
  std::vector<double> t;
  for (int i = 1; i <= 10; ++i) t.push_back(i / 10.0);
  return t;
}

double auc(std::span<const double> f1_values) {
  if (f1_values.size() != 10) throw DataError("auc needs F1 at all ten tau points");
  double s = 0.0;
  for (double v : f1_values) s += v;
  return 0.1 * s;
}

double auc(const EarlyCurve& curve) {
  if (curve.taus.size() != curve.f1_values.size()) throw DataError("curve: taus and F1 values differ in length");
  return auc(curve.f1_values);
}

EarlyCurve make_curve(std::vector<double> f1_values) {
  EarlyCurve c;
  c.taus = default_taus();
  c.f1_values = std::move(f1_values);
  c.auc = auc(c);
  return c;
}

double median(std::span<const double> values) {
  if (values.empty()) throw DataError("median of empty input");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t k = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

double mad(std::span<const double> values) {
  const double m = median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return median(dev);
}

std::string format_median_mad(std::span<const double> values, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, median(values), decimals, mad(values));
  return buf;
}

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("cohen_kappa: length mismatch");
  if (a.empty()) throw DataError("cohen_kappa: empty input");
  const double n = static_cast<double>(a.size());
  std::map<int, std::pair<double, double>> marg;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marg[a[i]].first += 1.0;
    marg[b[i]].second += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, m] : marg) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

std::vector<Fold> loso_split(const Corpus& corpus) {
  if (corpus.subjects.size() < 2) throw DataError("leave-one-subject-out needs at least 2 subjects");
  std::vector<Fold> folds;
  for (const auto& s : corpus.subjects) {
    Fold f;
    f.held_out_subject = s;
    for (const auto& e : corpus.events) (e.subject_id == s ? f.test : f.train).events.push_back(e);
    for (const auto& t : corpus.trials) (t.subject_id == s ? f.test : f.train).trials.push_back(t);
    f.train.index_subjects();
    f.test.index_subjects();
    folds.push_back(std::move(f));
  }
  return folds;
}

}  // namespace spiketurn
