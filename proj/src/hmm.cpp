#include "spiketurn/hmm.hpp"

#include "spiketurn/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace spiketurn {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Shifts each row of log_emission by its max and exponentiates. Returns false
// if some step has no possible state.
bool scaled_emission(std::span<const double> log_emission, std::size_t s, std::vector<double>& e,
                     std::vector<double>& shift) {
  const std::size_t t_len = log_emission.size() / s;
  e.resize(log_emission.size());
  shift.resize(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const auto row = log_emission.subspan(t * s, s);
    const double m = *std::max_element(row.begin(), row.end());
    if (m == kNegInf) return false;
    if (!std::isfinite(m)) throw NumericalError("non-finite emission log-probability");
    shift[t] = m;
    for (std::size_t j = 0; j < s; ++j) e[t * s + j] = std::exp(row[j] - m);
  }
  return true;
}

// Scaled forward pass; alpha rows sum to 1. Returns the log-likelihood.
double forward_pass(std::span<const double> pi, std::span<const double> a, const std::vector<double>& e,
                    const std::vector<double>& shift, std::size_t s, std::vector<double>& alpha,
                    std::vector<double>& scale) {
  const std::size_t t_len = shift.size();
  alpha.assign(t_len * s, 0.0);
  scale.assign(t_len, 0.0);
  double ll = 0.0;
  for (std::size_t t = 0; t < t_len; ++t) {
    double c = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
      double v;
      if (t == 0) {
        v = pi[j];
      } else {
        v = 0.0;
        for (std::size_t i = 0; i < s; ++i) v += alpha[(t - 1) * s + i] * a[i * s + j];
      }
      v *= e[t * s + j];
      alpha[t * s + j] = v;
      c += v;
    }
    if (c <= 0.0) return kNegInf;
    for (std::size_t j = 0; j < s; ++j) alpha[t * s + j] /= c;
    scale[t] = c;
    ll += std::log(c) + shift[t];
  }
  return ll;
}

void check_model(std::span<const double> pi, std::span<const double> a, std::size_t s) {
  if (s == 0 || pi.size() != s || a.size() != s * s) throw DataError("hmm: parameter shapes do not match");
}

void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DataError(std::string("hmm: negative or non-finite ") + what);
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DataError(std::string("hmm: ") + what + " row does not sum to 1");
}

std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (auto& v : p) {
    v = ex(rng) + 1e-3;
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

// Normalizes `counts` into `row`; leaves `row` unchanged if the counts are all zero.
void normalize_into(std::span<const double> counts, std::span<double> row) {
  const double sum = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (sum <= 0.0) return;
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = counts[k] / sum;
}

// Deterministic train/validation split used to rank restarts.
void split_for_validation(std::size_t n, double fraction, std::uint64_t seed, std::vector<std::size_t>& train,
                          std::vector<std::size_t>& valid) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_valid = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n < 5 || n_valid == 0) {
    train.assign(idx.begin(), idx.end());
    std::sort(train.begin(), train.end());
    valid = train;
    return;
  }
  valid.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_valid));
  train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end());
  std::sort(valid.begin(), valid.end());
  std::sort(train.begin(), train.end());
}

// Restart ranking: more validation sequences with finite likelihood first,
// then the larger summed log-likelihood over those.
struct ValidationScore {
  std::size_t finite{0};
  double total{0.0};

  void add(double ll) {
    if (ll == kNegInf) return;
    ++finite;
    total += ll;
  }
  bool better_than(const ValidationScore& o) const {
    return finite != o.finite ? finite > o.finite : total > o.total;
  }
};

}  // namespace

double forward_log_likelihood(std::span<const double> pi, std::span<const double> a,
                              std::span<const double> log_emission, std::size_t n_states) {
  check_model(pi, a, n_states);
  if (log_emission.empty()) return 0.0;
  std::vector<double> e, shift, alpha, scale;
  if (!scaled_emission(log_emission, n_states, e, shift)) return kNegInf;
  return forward_pass(pi, a, e, shift, n_states, alpha, scale);
}

Posteriors forward_backward(std::span<const double> pi, std::span<const double> a,
                            std::span<const double> log_emission, std::size_t s) {
  check_model(pi, a, s);
  Posteriors post;
  post.xi_sum.assign(s * s, 0.0);
  if (log_emission.empty()) return post;
  std::vector<double> e, shift, alpha, scale;
  if (!scaled_emission(log_emission, s, e, shift)) {
    post.log_likelihood = kNegInf;
    return post;
  }
  post.log_likelihood = forward_pass(pi, a, e, shift, s, alpha, scale);
  if (post.log_likelihood == kNegInf) return post;

  const std::size_t t_len = shift.size();
  std::vector<double> beta(t_len * s, 1.0);
  for (std::size_t t = t_len - 1; t-- > 0;) {
    for (std::size_t i = 0; i < s; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < s; ++j) v += a[i * s + j] * e[(t + 1) * s + j] * beta[(t + 1) * s + j];
      beta[t * s + i] = v / scale[t + 1];
    }
  }
  post.gamma.resize(t_len * s);
  for (std::size_t t = 0; t < t_len; ++t) {
    double norm = 0.0;
    for (std::size_t i = 0; i < s; ++i) norm += alpha[t * s + i] * beta[t * s + i];
    for (std::size_t i = 0; i < s; ++i) post.gamma[t * s + i] = alpha[t * s + i] * beta[t * s + i] / norm;
  }
  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    double norm = 0.0;
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        norm += alpha[t * s + i] * a[i * s + j] * e[(t + 1) * s + j] * beta[(t + 1) * s + j];
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        post.xi_sum[i * s + j] += alpha[t * s + i] * a[i * s + j] * e[(t + 1) * s + j] * beta[(t + 1) * s + j] / norm;
  }
  return post;
}

// ---------------------------------------------------------------- discrete

DiscreteHmm DiscreteHmm::uniform(std::size_t n_states, std::size_t n_symbols) {
  DiscreteHmm m;
  m.n_states = n_states;
  m.n_symbols = n_symbols;
  m.pi.assign(n_states, 1.0 / static_cast<double>(n_states));
  m.a.assign(n_states * n_states, 1.0 / static_cast<double>(n_states));
  m.b.assign(n_states * n_symbols, 1.0 / static_cast<double>(n_symbols));
  return m;
}

DiscreteHmm DiscreteHmm::random(std::size_t n_states, std::size_t n_symbols, std::mt19937_64& rng) {
  if (n_states == 0 || n_symbols == 0) throw ConfigError("hmm needs at least one state and one symbol");
  DiscreteHmm m;
  m.n_states = n_states;
  m.n_symbols = n_symbols;
  m.pi = random_distribution(n_states, rng);
  for (std::size_t i = 0; i < n_states; ++i) {
    const auto row = random_distribution(n_states, rng);
    m.a.insert(m.a.end(), row.begin(), row.end());
  }
  for (std::size_t i = 0; i < n_states; ++i) {
    const auto row = random_distribution(n_symbols, rng);
    m.b.insert(m.b.end(), row.begin(), row.end());
  }
  return m;
}

namespace {

std::vector<double> discrete_log_emission(const DiscreteHmm& m, std::span<const int> obs) {
  std::vector<double> le(obs.size() * m.n_states);
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t] < 0 || static_cast<std::size_t>(obs[t]) >= m.n_symbols)
      throw DataError("hmm: symbol " + std::to_string(obs[t]) + " outside the emission alphabet");
    for (std::size_t s = 0; s < m.n_states; ++s) le[t * m.n_states + s] = std::log(m.b[s * m.n_symbols + obs[t]]);
  }
  return le;
}

}  // namespace

double DiscreteHmm::log_likelihood(std::span<const int> obs) const {
  return forward_log_likelihood(pi, a, discrete_log_emission(*this, obs), n_states);
}

Posteriors DiscreteHmm::posteriors(std::span<const int> obs) const {
  return forward_backward(pi, a, discrete_log_emission(*this, obs), n_states);
}

void DiscreteHmm::validate() const {
  if (pi.size() != n_states || a.size() != n_states * n_states || b.size() != n_states * n_symbols)
    throw DataError("hmm: parameter shapes do not match");
  check_distribution(pi, "initial distribution");
  for (std::size_t i = 0; i < n_states; ++i) {
    check_distribution(std::span(a).subspan(i * n_states, n_states), "transition");
    check_distribution(std::span(b).subspan(i * n_symbols, n_symbols), "emission");
  }
}

json DiscreteHmm::to_json() const {
  return {{"n_states", n_states}, {"n_symbols", n_symbols}, {"pi", pi}, {"a", a}, {"b", b}};
}

DiscreteHmm DiscreteHmm::from_json(const json& j) {
  DiscreteHmm m;
  m.n_states = j.at("n_states").get<std::size_t>();
  m.n_symbols = j.at("n_symbols").get<std::size_t>();
  m.pi = j.at("pi").get<std::vector<double>>();
  m.a = j.at("a").get<std::vector<double>>();
  m.b = j.at("b").get<std::vector<double>>();
  m.validate();
  return m;
}

DiscreteFit baum_welch_run(const std::vector<std::vector<int>>& sequences, DiscreteHmm model, int max_iterations,
                           double tolerance) {
  if (sequences.empty()) throw DataError("baum_welch: no training sequences");
  const std::size_t s = model.n_states, k = model.n_symbols;
  DiscreteFit fit;
  for (int it = 0;; ++it) {
    std::vector<double> pi_acc(s, 0.0), a_acc(s * s, 0.0), b_acc(s * k, 0.0);
    double ll = 0.0;
    for (const auto& seq : sequences) {
      const auto post = model.posteriors(seq);
      ll += post.log_likelihood;
      if (post.log_likelihood == kNegInf || seq.empty()) continue;
      for (std::size_t i = 0; i < s; ++i) pi_acc[i] += post.gamma[i];
      for (std::size_t i = 0; i < s * s; ++i) a_acc[i] += post.xi_sum[i];
      for (std::size_t t = 0; t < seq.size(); ++t)
        for (std::size_t i = 0; i < s; ++i) b_acc[i * k + static_cast<std::size_t>(seq[t])] += post.gamma[t * s + i];
    }
    fit.trace.push_back(ll);
    if (it > 0 && ll - fit.trace[fit.trace.size() - 2] < tolerance) break;
    if (it >= max_iterations) break;
    normalize_into(pi_acc, model.pi);
    for (std::size_t i = 0; i < s; ++i) {
      normalize_into(std::span(a_acc).subspan(i * s, s), std::span(model.a).subspan(i * s, s));
      normalize_into(std::span(b_acc).subspan(i * k, k), std::span(model.b).subspan(i * k, k));
    }
  }
  fit.model = std::move(model);
  return fit;
}

DiscreteHmm baum_welch(const std::vector<std::vector<int>>& sequences, std::size_t n_symbols,
                       const EmConfig& config, std::uint64_t seed) {
  if (sequences.empty()) throw DataError("baum_welch: no training sequences");
  if (config.n_states < 1 || config.restarts < 1) throw ConfigError("hmm: n_states and restarts must be >= 1");
  std::vector<std::size_t> tr, va;
  split_for_validation(sequences.size(), config.validation_fraction, seed, tr, va);
  std::vector<std::vector<int>> train;
  for (auto i : tr) train.push_back(sequences[i]);

  DiscreteHmm best;
  ValidationScore best_score;
  for (int r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 1, static_cast<std::uint64_t>(r)));
    auto fit = baum_welch_run(train, DiscreteHmm::random(static_cast<std::size_t>(config.n_states), n_symbols, rng),
                              config.max_iterations, config.tolerance);
    ValidationScore score;
    for (auto i : va) score.add(fit.model.log_likelihood(sequences[i]));
    if (r == 0 || score.better_than(best_score)) {
      best = std::move(fit.model);
      best_score = score;
    }
  }
  return best;
}

// ---------------------------------------------------------------- gaussian

std::vector<double> GaussianHmm::log_emission(const FrameSequence& seq) const {
  if (seq.dim != dim) throw DataError("gaussian hmm: frame dimension mismatch");
  std::vector<double> le(seq.length * n_states);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> norm(n_states, 0.0);
  for (std::size_t s = 0; s < n_states; ++s)
    for (std::size_t d = 0; d < dim; ++d) norm[s] += log2pi + std::log(variance[s * dim + d]);
  for (std::size_t t = 0; t < seq.length; ++t) {
    const auto x = seq.frame(t);
    for (std::size_t s = 0; s < n_states; ++s) {
      double q = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double diff = x[d] - mean[s * dim + d];
        q += diff * diff / variance[s * dim + d];
      }
      le[t * n_states + s] = -0.5 * (norm[s] + q);
    }
  }
  return le;
}

double GaussianHmm::log_likelihood(const FrameSequence& seq) const {
  return forward_log_likelihood(pi, a, log_emission(seq), n_states);
}

void GaussianHmm::validate() const {
  if (pi.size() != n_states || a.size() != n_states * n_states || mean.size() != n_states * dim ||
      variance.size() != n_states * dim)
    throw DataError("gaussian hmm: parameter shapes do not match");
  check_distribution(pi, "initial distribution");
  for (std::size_t i = 0; i < n_states; ++i) check_distribution(std::span(a).subspan(i * n_states, n_states), "transition");
  for (double v : variance)
    if (!(v > 0.0) || !std::isfinite(v)) throw DataError("gaussian hmm: variances must be positive");
}

json GaussianHmm::to_json() const {
  return {{"n_states", n_states}, {"dim", dim},           {"pi", pi},
          {"a", a},               {"mean", mean},        {"variance", variance},
          {"variance_floor", variance_floor}};
}

GaussianHmm GaussianHmm::from_json(const json& j) {
  GaussianHmm m;
  m.n_states = j.at("n_states").get<std::size_t>();
  m.dim = j.at("dim").get<std::size_t>();
  m.pi = j.at("pi").get<std::vector<double>>();
  m.a = j.at("a").get<std::vector<double>>();
  m.mean = j.at("mean").get<std::vector<double>>();
  m.variance = j.at("variance").get<std::vector<double>>();
  m.variance_floor = j.at("variance_floor").get<double>();
  m.validate();
  return m;
}

GaussianHmm random_gaussian_hmm(const std::vector<FrameSequence>& sequences, std::size_t n_states,
                                double variance_floor, std::mt19937_64& rng) {
  if (sequences.empty()) throw DataError("gaussian hmm: no training sequences");
  const std::size_t dim = sequences.front().dim;
  std::vector<double> sum(dim, 0.0), sq(dim, 0.0);
  std::size_t frames = 0;
  for (const auto& seq : sequences) {
    if (seq.dim != dim) throw DataError("gaussian hmm: frame dimension mismatch");
    for (std::size_t t = 0; t < seq.length; ++t) {
      for (std::size_t d = 0; d < dim; ++d) sum[d] += seq.frame(t)[d];
      ++frames;
    }
  }
  if (frames == 0) throw DataError("gaussian hmm: training sequences are empty");
  for (auto& v : sum) v /= static_cast<double>(frames);
  for (const auto& seq : sequences)
    for (std::size_t t = 0; t < seq.length; ++t)
      for (std::size_t d = 0; d < dim; ++d) sq[d] += (seq.frame(t)[d] - sum[d]) * (seq.frame(t)[d] - sum[d]);

  GaussianHmm m;
  m.n_states = n_states;
  m.dim = dim;
  m.variance_floor = variance_floor;
  m.pi = random_distribution(n_states, rng);
  for (std::size_t i = 0; i < n_states; ++i) {
    const auto row = random_distribution(n_states, rng);
    m.a.insert(m.a.end(), row.begin(), row.end());
  }
  std::uniform_int_distribution<std::size_t> pick(0, frames - 1);
  for (std::size_t s = 0; s < n_states; ++s) {
    std::size_t f = pick(rng);
    for (const auto& seq : sequences) {
      if (f < seq.length) {
        const auto x = seq.frame(f);
        m.mean.insert(m.mean.end(), x.begin(), x.end());
        break;
      }
      f -= seq.length;
    }
    for (std::size_t d = 0; d < dim; ++d)
      m.variance.push_back(std::max(sq[d] / static_cast<double>(frames), variance_floor));
  }
  return m;
}

GaussianFit gaussian_baum_welch_run(const std::vector<FrameSequence>& sequences, GaussianHmm model,
                                    int max_iterations, double tolerance) {
  if (sequences.empty()) throw DataError("gaussian baum_welch: no training sequences");
  const std::size_t s = model.n_states, dim = model.dim;
  GaussianFit fit;
  for (int it = 0;; ++it) {
    std::vector<double> pi_acc(s, 0.0), a_acc(s * s, 0.0), occ(s, 0.0), m_acc(s * dim, 0.0);
    std::vector<Posteriors> posts;
    posts.reserve(sequences.size());
    double ll = 0.0;
    for (const auto& seq : sequences) {
      posts.push_back(forward_backward(model.pi, model.a, model.log_emission(seq), s));
      const auto& post = posts.back();
      ll += post.log_likelihood;
      if (post.log_likelihood == kNegInf || seq.length == 0) continue;
      for (std::size_t i = 0; i < s; ++i) pi_acc[i] += post.gamma[i];
      for (std::size_t i = 0; i < s * s; ++i) a_acc[i] += post.xi_sum[i];
      for (std::size_t t = 0; t < seq.length; ++t) {
        const auto x = seq.frame(t);
        for (std::size_t i = 0; i < s; ++i) {
          const double g = post.gamma[t * s + i];
          occ[i] += g;
          for (std::size_t d = 0; d < dim; ++d) m_acc[i * dim + d] += g * x[d];
        }
      }
    }
    if (!std::isfinite(ll)) throw NumericalError("gaussian baum_welch: training log-likelihood is not finite");
    fit.trace.push_back(ll);
    if (it > 0 && ll - fit.trace[fit.trace.size() - 2] < tolerance) break;
    if (it >= max_iterations) break;

    // Variances around the new means, in a second pass for accuracy.
    std::vector<double> new_mean = model.mean;
    for (std::size_t i = 0; i < s; ++i)
      if (occ[i] > 0.0)
        for (std::size_t d = 0; d < dim; ++d) new_mean[i * dim + d] = m_acc[i * dim + d] / occ[i];
    std::vector<double> v_acc(s * dim, 0.0);
    for (std::size_t n = 0; n < sequences.size(); ++n) {
      const auto& seq = sequences[n];
      const auto& post = posts[n];
      if (post.log_likelihood == kNegInf) continue;
      for (std::size_t t = 0; t < seq.length; ++t) {
        const auto x = seq.frame(t);
        for (std::size_t i = 0; i < s; ++i) {
          const double g = post.gamma[t * s + i];
          for (std::size_t d = 0; d < dim; ++d) {
            const double diff = x[d] - new_mean[i * dim + d];
            v_acc[i * dim + d] += g * diff * diff;
          }
        }
      }
    }
    normalize_into(pi_acc, model.pi);
    for (std::size_t i = 0; i < s; ++i) {
      normalize_into(std::span(a_acc).subspan(i * s, s), std::span(model.a).subspan(i * s, s));
      if (occ[i] <= 0.0) continue;
      for (std::size_t d = 0; d < dim; ++d)
        model.variance[i * dim + d] = std::max(v_acc[i * dim + d] / occ[i], model.variance_floor);
    }
    model.mean = std::move(new_mean);
  }
  fit.model = std::move(model);
  return fit;
}

GaussianHmm gaussian_baum_welch(const std::vector<FrameSequence>& sequences, const EmConfig& config,
                                double variance_floor, std::uint64_t seed) {
  if (sequences.empty()) throw DataError("gaussian baum_welch: no training sequences");
  if (config.n_states < 1 || config.restarts < 1) throw ConfigError("hmm: n_states and restarts must be >= 1");
  std::vector<std::size_t> tr, va;
  split_for_validation(sequences.size(), config.validation_fraction, seed, tr, va);
  std::vector<FrameSequence> train;
  for (auto i : tr) train.push_back(sequences[i]);

  GaussianHmm best;
  ValidationScore best_score;
  for (int r = 0; r < config.restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 1, static_cast<std::uint64_t>(r)));
    auto init = random_gaussian_hmm(train, static_cast<std::size_t>(config.n_states), variance_floor, rng);
    auto fit = gaussian_baum_welch_run(train, std::move(init), config.max_iterations, config.tolerance);
    ValidationScore score;
    for (auto i : va) score.add(fit.model.log_likelihood(sequences[i]));
    if (r == 0 || score.better_than(best_score)) {
      best = std::move(fit.model);
      best_score = score;
    }
  }
  return best;
}

}  // namespace spiketurn
