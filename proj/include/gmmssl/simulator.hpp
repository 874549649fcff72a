// Seeded simulation of iterative self-training on the binary Gaussian
// mixture X | Y ~ N(Y mu, sigma^2 I_d), Y uniform on {-1, +1}.
//
// Per trial: theta_0 is the labelled-sample mean of Y X; each later round
// draws a fresh batch of m points, labels it with sgn(theta_{t-1}^T x) and
// refits. In reuse mode the refit also carries the labelled set with weight
// n / (n + m).
//
// run_trials never materializes a batch. The loss is quadratic in theta, so
// the empirical risk of the refit parameter follows from the batch sums of
// Yhat X and |X|^2. Randomness is drawn in exactly the order used by
// sample_labelled, so a trial can be replayed through the reference
// functions below from the same streams.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gmmssl/evolution.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/specfn.hpp"

namespace gmmssl {

using ModelParam = std::vector<double>;

struct LabelledSample {
  std::span<const double> x;
  int y = 1;
};

/// Samples stored row-major in one buffer.
class SampleSet {
 public:
  explicit SampleSet(int d) : d_(d) {
    if (d < 1) throw std::invalid_argument("SampleSet: d must be >= 1");
  }
  int dim() const { return d_; }
  std::size_t size() const { return ys_.size(); }
  bool empty() const { return ys_.empty(); }
  void push_back(std::span<const double> x, int y) {
    if (static_cast<int>(x.size()) != d_) throw std::invalid_argument("SampleSet: wrong dimension");
    if (y != 1 && y != -1) throw std::invalid_argument("SampleSet: label must be +1 or -1");
    xs_.insert(xs_.end(), x.begin(), x.end());
    ys_.push_back(y);
  }
  LabelledSample operator[](std::size_t i) const {
    return {std::span<const double>(xs_.data() + i * d_, static_cast<std::size_t>(d_)), ys_[i]};
  }

 private:
  int d_;
  std::vector<double> xs_;
  std::vector<int> ys_;
};

enum class TrainingMode { fresh, reuse };
enum class PopulationRiskMethod { analytic, mc };

struct TrialConfig {
  MixtureParams params{0.6, 50, 10, 1000, 20, 0.0};
  std::vector<double> mu;  // empty means the first standard basis vector
  TrainingMode mode = TrainingMode::fresh;
  int trials = 2000;
  std::uint64_t seed = 1;
  PopulationRiskMethod population_risk = PopulationRiskMethod::analytic;
  int test_size = 10'000;  // mc population risk only

  std::vector<double> resolved_mu() const {
    if (!mu.empty()) return mu;
    std::vector<double> e(static_cast<std::size_t>(params.d), 0.0);
    e[0] = 1.0;
    return e;
  }

  void validate() const {
    params.validate();
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (population_risk == PopulationRiskMethod::mc && test_size < 2) {
      throw std::invalid_argument("test_size must be >= 2");
    }
    if (!mu.empty()) {
      if (static_cast<int>(mu.size()) != params.d) {
        throw std::invalid_argument("mu must have d entries");
      }
      double norm_sq = 0.0;
      for (double v : mu) norm_sq += v * v;
      if (!(std::abs(std::sqrt(norm_sq) - 1.0) <= 1e-12)) {
        throw std::invalid_argument("mu must be a unit vector");
      }
    }
  }
};

/// Per-trial record over t = 0..tau. pseudo_err[0] is NaN: no pseudo-labels
/// exist in the initial round.
struct TrialTrace {
  std::vector<double> rho;
  std::vector<double> train_risk;
  std::vector<double> pop_risk;
  std::vector<double> gen;
  std::vector<double> pseudo_err;
};

struct SummaryStat {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

struct AggregateRow {
  int t = 0;
  SummaryStat gen;
  SummaryStat rho;
  SummaryStat pseudo_err;
  double train_risk_mean = 0.0;
  double pop_risk_mean = 0.0;
};

struct SimulationResult {
  TrialConfig config;
  std::vector<TrialTrace> traces;
  std::vector<AggregateRow> rows;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm_sq(std::span<const double> a) { return dot(a, a); }

// Draws one (x, y) into x in the canonical order: label, then coordinates.
inline int draw_point(std::span<const double> mu, double sigma, RandomStream& rng,
                      std::span<double> x) {
  const int y = rng.sign();
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = y * mu[k] + sigma * rng.normal();
  return y;
}

inline double correlation(std::span<const double> theta, std::span<const double> mu) {
  const double len = std::sqrt(norm_sq(theta));
  if (len == 0.0) throw DegenerateInputError("correlation of the zero vector is undefined");
  return std::clamp(dot(theta, mu) / len, -1.0, 1.0);
}

// Mean loss over a set from its sums: S = sum of (label * x), Q = sum |x|^2.
inline double risk_from_sums(double loss_const, double sigma, std::size_t count,
                             std::span<const double> theta, std::span<const double> label_sum,
                             double sq_sum) {
  const double c = static_cast<double>(count);
  const double spread = sq_sum - 2.0 * dot(theta, label_sum) + c * norm_sq(theta);
  return loss_const + spread / (2.0 * sigma * sigma * c);
}

inline SummaryStat summarize_column(const std::vector<double>& v) {
  SummaryStat s;
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / n;
  if (v.size() < 2) {
    s.stderr_mean = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stderr_mean = std::sqrt(ss / (n - 1.0) / n);
  return s;
}

inline int worker_count(int jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  int workers = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("GMM_SSL_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) workers = cap;
  }
  return std::max(1, std::min(workers, jobs));
}

}  // namespace detail

/// log(2 (2 pi)^{d/2} sigma^d), the minimum of the loss.
inline double loss_constant(double sigma, int d) {
  return std::numbers::ln2 + 0.5 * d * std::log(2.0 * std::numbers::pi) + d * std::log(sigma);
}

inline SampleSet sample_labelled(int n, std::span<const double> mu, double sigma,
                                 RandomStream& rng) {
  if (n < 0) throw std::invalid_argument("sample_labelled: n must be >= 0");
  SampleSet out(static_cast<int>(mu.size()));
  std::vector<double> x(mu.size());
  for (int i = 0; i < n; ++i) {
    const int y = detail::draw_point(mu, sigma, rng, x);
    out.push_back(x, y);
  }
  return out;
}

inline ModelParam erm_initial(const SampleSet& samples) {
  if (samples.empty()) throw std::invalid_argument("erm_initial: empty sample set");
  ModelParam theta(static_cast<std::size_t>(samples.dim()), 0.0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const LabelledSample s = samples[i];
    for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += s.y * s.x[k];
  }
  for (double& v : theta) v /= static_cast<double>(samples.size());
  return theta;
}

/// sgn(theta^T x) with sgn(0) = +1.
inline int pseudo_label(std::span<const double> theta, std::span<const double> x) {
  if (detail::norm_sq(theta) == 0.0) throw DegenerateInputError("pseudo_label: zero parameter");
  return detail::dot(theta, x) >= 0.0 ? 1 : -1;
}

/// Copies of the points in `batch` carrying pseudo-labels from theta.
inline SampleSet pseudo_label_set(std::span<const double> theta, const SampleSet& batch) {
  SampleSet out(batch.dim());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto s = batch[i];
    out.push_back(s.x, pseudo_label(theta, s.x));
  }
  return out;
}

inline ModelParam erm_refine(const SampleSet& pseudo_batch) {
  if (pseudo_batch.empty()) throw std::invalid_argument("erm_refine: empty batch");
  return erm_initial(pseudo_batch);
}

/// Minimizer of the weighted risk w L(labelled) + (1 - w) L(batch) at
/// w = n / (n + m): (sum_l Y X + sum Yhat X) / (n + m).
inline ModelParam erm_refine_reuse(const SampleSet& labelled, const SampleSet& pseudo_batch) {
  if (pseudo_batch.empty()) throw std::invalid_argument("erm_refine_reuse: empty batch");
  if (labelled.dim() != pseudo_batch.dim()) {
    throw std::invalid_argument("erm_refine_reuse: dimension mismatch");
  }
  ModelParam theta(static_cast<std::size_t>(labelled.dim()), 0.0);
  for (const SampleSet* set : {&labelled, &pseudo_batch}) {
    for (std::size_t i = 0; i < set->size(); ++i) {
      const auto s = (*set)[i];
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] += s.y * s.x[k];
    }
  }
  const double total = static_cast<double>(labelled.size() + pseudo_batch.size());
  for (double& v : theta) v /= total;
  return theta;
}

inline double loss(std::span<const double> theta, std::span<const double> x, int y, double sigma) {
  double dist = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = x[k] - y * theta[k];
    dist += r * r;
  }
  return loss_constant(sigma, static_cast<int>(x.size())) + dist / (2.0 * sigma * sigma);
}

inline double population_risk(std::span<const double> theta, std::span<const double> mu,
                              double sigma) {
  double dist = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) dist += (theta[k] - mu[k]) * (theta[k] - mu[k]);
  const double d = static_cast<double>(mu.size());
  return loss_constant(sigma, static_cast<int>(mu.size())) +
         (dist + sigma * sigma * d) / (2.0 * sigma * sigma);
}

struct RiskEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Population risk estimated on a fresh test set drawn from `rng`.
inline RiskEstimate population_risk_mc(std::span<const double> theta, std::span<const double> mu,
                                       double sigma, int test_size, RandomStream& rng) {
  if (test_size < 2) throw std::invalid_argument("population_risk_mc: test_size must be >= 2");
  std::vector<double> x(mu.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < test_size; ++i) {
    const int y = detail::draw_point(mu, sigma, rng, x);
    const double l = loss(theta, x, y, sigma);
    sum += l;
    sum_sq += l * l;
  }
  const double n = test_size;
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

/// w * L(labelled) + (1 - w) * L(pseudo). An empty side forces its weight to 0.
inline double empirical_risk(std::span<const double> theta, const SampleSet& labelled,
                             const SampleSet& pseudo, double w, double sigma) {
  if (labelled.empty() && pseudo.empty()) {
    throw std::invalid_argument("empirical_risk: both sample sets are empty");
  }
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("empirical_risk: w must lie in [0,1]");
  if (pseudo.empty()) w = 1.0;
  if (labelled.empty()) w = 0.0;
  auto mean_loss = [&](const SampleSet& set) {
    double s = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i) s += loss(theta, set[i].x, set[i].y, sigma);
    return s / static_cast<double>(set.size());
  };
  double risk = 0.0;
  if (w > 0.0) risk += w * mean_loss(labelled);
  if (w < 1.0) risk += (1.0 - w) * mean_loss(pseudo);
  return risk;
}

inline Probability bayes_error(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("bayes_error: sigma must be positive");
  return q_function(1.0 / sigma);
}

/// Stream addresses used by one trial.
inline std::uint64_t labelled_stream(int trial) {
  return stream_id(static_cast<std::uint32_t>(trial), 0u);
}
inline std::uint64_t batch_stream(int trial, int t) {
  return stream_id(static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(t));
}
inline std::uint64_t test_stream(int trial, int t) {
  return stream_id(static_cast<std::uint32_t>(trial), 0x80000000u | static_cast<std::uint32_t>(t));
}

/// One self-training trial.
inline TrialTrace run_trial(const TrialConfig& cfg, int trial) {
  const MixtureParams& p = cfg.params;
  const std::vector<double> mu = cfg.resolved_mu();
  const auto d = static_cast<std::size_t>(p.d);
  const double sigma = p.sigma;
  const double lc = loss_constant(sigma, p.d);
  const int tau = p.tau;

  TrialTrace tr;
  for (auto* v : {&tr.rho, &tr.train_risk, &tr.pop_risk, &tr.gen, &tr.pseudo_err}) {
    v->assign(static_cast<std::size_t>(tau) + 1, 0.0);
  }
  auto population = [&](const ModelParam& theta, int t) {
    if (cfg.population_risk == PopulationRiskMethod::analytic) {
      return population_risk(theta, mu, sigma);
    }
    RandomStream test_rng(cfg.seed, test_stream(trial, t));
    return population_risk_mc(theta, mu, sigma, cfg.test_size, test_rng).estimate;
  };

  std::vector<double> x(d);
  // Labelled round.
  std::vector<double> lab_sum(d, 0.0);
  double lab_sq = 0.0;
  {
    RandomStream rng(cfg.seed, labelled_stream(trial));
    for (int i = 0; i < p.n; ++i) {
      const int y = detail::draw_point(mu, sigma, rng, x);
      for (std::size_t k = 0; k < d; ++k) lab_sum[k] += y * x[k];
      lab_sq += detail::norm_sq(x);
    }
  }
  ModelParam theta(d);
  for (std::size_t k = 0; k < d; ++k) theta[k] = lab_sum[k] / p.n;
  tr.rho[0] = detail::correlation(theta, mu);
  tr.train_risk[0] = detail::risk_from_sums(lc, sigma, p.n, theta, lab_sum, lab_sq);
  tr.pop_risk[0] = population(theta, 0);
  tr.gen[0] = tr.pop_risk[0] - tr.train_risk[0];
  tr.pseudo_err[0] = std::numeric_limits<double>::quiet_NaN();

  const double w = cfg.mode == TrainingMode::reuse ? p.reuse_weight() : 0.0;
  std::vector<double> batch_sum(d);
  for (int t = 1; t <= tau; ++t) {
    if (detail::norm_sq(theta) == 0.0) throw DegenerateInputError("run_trial: zero parameter");
    RandomStream rng(cfg.seed, batch_stream(trial, t));
    std::fill(batch_sum.begin(), batch_sum.end(), 0.0);
    double batch_sq = 0.0;
    int wrong = 0;
    for (int j = 0; j < p.m; ++j) {
      const int y = detail::draw_point(mu, sigma, rng, x);
      const int y_hat = detail::dot(theta, x) >= 0.0 ? 1 : -1;
      wrong += (y_hat != y);
      for (std::size_t k = 0; k < d; ++k) batch_sum[k] += y_hat * x[k];
      batch_sq += detail::norm_sq(x);
    }
    if (cfg.mode == TrainingMode::fresh) {
      for (std::size_t k = 0; k < d; ++k) theta[k] = batch_sum[k] / p.m;
      tr.train_risk[t] = detail::risk_from_sums(lc, sigma, p.m, theta, batch_sum, batch_sq);
    } else {
      for (std::size_t k = 0; k < d; ++k) theta[k] = (lab_sum[k] + batch_sum[k]) / (p.n + p.m);
      tr.train_risk[t] =
          w * detail::risk_from_sums(lc, sigma, p.n, theta, lab_sum, lab_sq) +
          (1.0 - w) * detail::risk_from_sums(lc, sigma, p.m, theta, batch_sum, batch_sq);
    }
    tr.rho[t] = detail::correlation(theta, mu);
    tr.pop_risk[t] = population(theta, t);
    tr.gen[t] = tr.pop_risk[t] - tr.train_risk[t];
    tr.pseudo_err[t] = static_cast<double>(wrong) / p.m;
  }
  return tr;
}

/// Runs every trial (on up to GMM_SSL_THREADS workers) and aggregates per t.
/// Traces land in index-addressed slots and are reduced in trial order, so
/// the result does not depend on the worker count.
inline SimulationResult run_trials(const TrialConfig& cfg) {
  cfg.validate();
  SimulationResult res;
  res.config = cfg;
  res.traces.resize(static_cast<std::size_t>(cfg.trials));
  const int workers = detail::worker_count(cfg.trials);
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int id) {
    try {
      for (int i = next++; i < cfg.trials; i = next++) {
        res.traces[static_cast<std::size_t>(i)] = run_trial(cfg, i);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(id)] = std::current_exception();
      next = cfg.trials;
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int id = 0; id < workers; ++id) pool.emplace_back(work, id);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const int tau = cfg.params.tau;
  std::vector<double> column(static_cast<std::size_t>(cfg.trials));
  auto stat = [&](auto member, int t) {
    for (int i = 0; i < cfg.trials; ++i) {
      column[static_cast<std::size_t>(i)] =
          (res.traces[static_cast<std::size_t>(i)].*member)[static_cast<std::size_t>(t)];
    }
    return detail::summarize_column(column);
  };
  for (int t = 0; t <= tau; ++t) {
    AggregateRow row;
    row.t = t;
    row.gen = stat(&TrialTrace::gen, t);
    row.rho = stat(&TrialTrace::rho, t);
    row.pseudo_err = stat(&TrialTrace::pseudo_err, t);
    row.train_risk_mean = stat(&TrialTrace::train_risk, t).mean;
    row.pop_risk_mean = stat(&TrialTrace::pop_risk, t).mean;
    res.rows.push_back(row);
  }
  return res;
}

}  // namespace gmmssl
