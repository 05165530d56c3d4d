#pragma once

#include "sgwmbdl/dataset.hpp"
#include "sgwmbdl/neuralkit.hpp"

namespace sgwmbdl {

enum class MulticlassMode { Samme, PaperBinary };
enum class CategoryWeightsMode { Recurring, InitOnly, Off };

struct WeightDistribution {
  std::vector<double> w;
};

inline void validate(const WeightDistribution& d) {
  double sum = 0.0;
  for (double v : d.w) {
    if (!(v >= 0.0)) throw std::invalid_argument("WeightDistribution: negative weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("WeightDistribution: weights sum to " + std::to_string(sum));
}

inline WeightDistribution init_weights(int n_samples) {
  if (n_samples < 1) throw std::invalid_argument("init_weights: need at least one sample");
  return {std::vector<double>(n_samples, 1.0 / n_samples)};
}

// W(c) = total / (num_classes * count(c)); all 1 on balanced data.
inline std::vector<double> category_weights(const std::vector<int>& labels, int num_classes) {
  if (labels.empty()) throw std::invalid_argument("category_weights: empty labels");
  std::vector<double> counts(num_classes, 0.0);
  for (int y : labels) {
    if (y < 0 || y >= num_classes) throw std::invalid_argument("category_weights: bad label");
    counts[y] += 1.0;
  }
  std::vector<double> out(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0.0)
      throw std::invalid_argument("category_weights: class " + std::to_string(c) + " absent");
    out[c] = static_cast<double>(labels.size()) / (num_classes * counts[c]);
  }
  return out;
}

inline WeightDistribution apply_category_weights(WeightDistribution dist,
                                                 const std::vector<int>& labels,
                                                 const std::vector<double>& class_weights) {
  if (dist.w.size() != labels.size())
    throw std::invalid_argument("apply_category_weights: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < dist.w.size(); ++i) sum += (dist.w[i] *= class_weights[labels[i]]);
  if (!(sum > 0.0))
    throw std::invalid_argument("apply_category_weights: all weights vanished");
  for (auto& v : dist.w) v /= sum;
  return dist;
}

// Soft-voted CNN + FCN pair; both nets emit num_classes softmax probabilities.
struct WeakClassifier {
  Net cnn;
  Net fcn;
  int num_classes = 0;
};

inline std::vector<double> soft_vote(std::span<const double> p_cnn,
                                     std::span<const double> p_fcn) {
  if (p_cnn.size() != p_fcn.size()) throw std::invalid_argument("soft_vote: length mismatch");
  std::vector<double> out(p_cnn.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (p_cnn[i] + p_fcn[i]);
  return out;
}

inline std::vector<double> weak_probs(const WeakClassifier& clf, const std::vector<double>& x) {
  return soft_vote(clf.cnn.infer(x), clf.fcn.infer(x));
}

inline int argmax_lowest(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline int weak_predict(const WeakClassifier& clf, const std::vector<double>& x) {
  return argmax_lowest(weak_probs(clf, x));
}

// e_o = sum_k w_k * 1[G_o(x_k) != y_k].
inline double weighted_error(const WeakClassifier& clf, const Dataset& data,
                             const WeightDistribution& dist) {
  if (dist.w.size() != data.samples.size())
    throw std::invalid_argument("weighted_error: distribution size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    if (weak_predict(clf, data.samples[i].features) != data.samples[i].label) e += dist.w[i];
  return e;
}

// alpha_o = 1/2 ln((1-e)/e) [+ 1/2 ln(K-1) in SAMME mode].
inline double classifier_weight(double error, int num_classes, MulticlassMode mode) {
  const double e = std::clamp(error, 1e-10, 1.0 - 1e-10);
  double alpha = 0.5 * std::log((1.0 - e) / e);
  if (mode == MulticlassMode::Samme) alpha += 0.5 * std::log(num_classes - 1.0);
  return alpha;
}

// Margin form: w' = w * exp(-alpha) if correct else w * exp(+alpha), then
// normalized by Z_o. Returns the updated distribution and Z_o.
inline std::pair<WeightDistribution, double> update_weights(const WeightDistribution& dist,
                                                            double alpha,
                                                            const std::vector<int>& predictions,
                                                            const std::vector<int>& labels) {
  if (dist.w.size() != predictions.size() || dist.w.size() != labels.size())
    throw std::invalid_argument("update_weights: size mismatch");
  WeightDistribution out;
  out.w.resize(dist.w.size());
  double z = 0.0;
  for (std::size_t i = 0; i < dist.w.size(); ++i)
    z += (out.w[i] = dist.w[i] * std::exp(predictions[i] == labels[i] ? -alpha : alpha));
  for (auto& v : out.w) v /= z;
  return {std::move(out), z};
}

struct BoostConfig {
  int rounds = 10;
  TrainConfig weak_train{0.3, 40, 32, 1};
  MulticlassMode mode = MulticlassMode::Samme;
  CategoryWeightsMode cw_mode = CategoryWeightsMode::Recurring;
};

namespace boost_detail {

// Weighted sampling with replacement by inverse CDF.
inline std::vector<std::size_t> weighted_bootstrap(const WeightDistribution& dist,
                                                   std::size_t count, std::mt19937_64& rng) {
  std::vector<double> cdf(dist.w.size());
  std::partial_sum(dist.w.begin(), dist.w.end(), cdf.begin());
  std::uniform_real_distribution<double> u(0.0, cdf.back());
  std::vector<std::size_t> picks(count);
  for (auto& p : picks) {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u(rng));
    p = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
  }
  return picks;
}

}  // namespace boost_detail

// Draws a weighted bootstrap of size H and trains the CNN/FCN pair on it
// with softmax cross-entropy SGD.
inline WeakClassifier train_weak(const Dataset& data, const WeightDistribution& dist,
                                 const TrainConfig& cfg) {
  if (data.samples.empty()) throw std::invalid_argument("train_weak: empty data");
  validate(dist);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0xb00ULL));
  const auto picks = boost_detail::weighted_bootstrap(dist, data.samples.size(), rng);
  Mat x(picks.size(), data.feature_dim);
  std::vector<int> y(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto& s = data.samples[picks[i]];
    std::copy(s.features.begin(), s.features.end(), x.row(i).begin());
    y[i] = s.label;
  }
  WeakClassifier clf;
  clf.num_classes = data.num_classes;
  clf.cnn = make_cnn_classifier(data.feature_dim, data.num_classes, mix_seed(cfg.seed, 1));
  clf.fcn = make_fcn_classifier(data.feature_dim, data.num_classes, mix_seed(cfg.seed, 2));
  TrainConfig c = cfg;
  c.seed = mix_seed(cfg.seed, 3);
  train_classifier(clf.cnn, x, y, c);
  c.seed = mix_seed(cfg.seed, 4);
  train_classifier(clf.fcn, x, y, c);
  return clf;
}

// Strong classifier F(x): rounds of (weak classifier, vote weight alpha_o).
struct Ensemble {
  struct Round {
    WeakClassifier clf;
    double alpha = 0.0;
  };
  std::vector<Round> rounds;
  int num_classes = 0;
};

// score(c) = sum_o alpha_o * p_o(c|x); label by argmax, lowest index wins ties.
inline std::pair<int, std::vector<double>> predict(const Ensemble& ens,
                                                   const std::vector<double>& x) {
  if (ens.rounds.empty()) throw std::invalid_argument("predict: empty ensemble");
  std::vector<double> score(ens.num_classes, 0.0);
  for (const auto& round : ens.rounds) {
    const auto p = weak_probs(round.clf, x);
    for (int c = 0; c < ens.num_classes; ++c) score[c] += round.alpha * p[c];
  }
  return {argmax_lowest(score), std::move(score)};
}

struct BoostTrace {
  std::vector<double> errors;
  std::vector<double> alphas;
  std::vector<double> z_factors;
  int skipped_rounds = 0;
  double train_error = 0.0;
};

// Category-weighted multiclass AdaBoost. Rounds at or above the chance bar
// ((K-1)/K in SAMME mode, 1/2 in binary mode) are retrained up to 3 times
// with fresh seeds, then skipped.
inline Ensemble train_adaboost(const Dataset& data, const BoostConfig& cfg,
                               BoostTrace* trace = nullptr) {
  if (cfg.rounds < 1) throw std::invalid_argument("train_adaboost: rounds must be >= 1");
  const int K = data.num_classes;
  const std::size_t n = data.samples.size();
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = data.samples[i].label;

  std::vector<double> class_w;
  if (cfg.cw_mode != CategoryWeightsMode::Off) class_w = category_weights(labels, K);

  WeightDistribution dist = init_weights(static_cast<int>(n));
  if (cfg.cw_mode != CategoryWeightsMode::Off)
    dist = apply_category_weights(std::move(dist), labels, class_w);

  const double chance_bar = cfg.mode == MulticlassMode::Samme ? (K - 1.0) / K : 0.5;
  Ensemble ens;
  ens.num_classes = K;
  for (int o = 0; o < cfg.rounds; ++o) {
    WeakClassifier clf;
    std::vector<int> preds(n);
    double e = 1.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      TrainConfig wc = cfg.weak_train;
      wc.seed = mix_seed(cfg.weak_train.seed, static_cast<std::uint64_t>(o),
                         static_cast<std::uint64_t>(attempt));
      clf = train_weak(data, dist, wc);
      e = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        preds[i] = weak_predict(clf, data.samples[i].features);
        if (preds[i] != labels[i]) e += dist.w[i];
      }
      if (e < chance_bar) break;
    }
    if (e >= chance_bar) {
      if (trace) ++trace->skipped_rounds;
      continue;
    }
    const double alpha = classifier_weight(e, K, cfg.mode);
    auto [next, z] = update_weights(dist, alpha, preds, labels);
    dist = std::move(next);
    if (cfg.cw_mode == CategoryWeightsMode::Recurring)
      dist = apply_category_weights(std::move(dist), labels, class_w);
    validate(dist);
    ens.rounds.push_back({std::move(clf), alpha});
    if (trace) {
      trace->errors.push_back(e);
      trace->alphas.push_back(alpha);
      trace->z_factors.push_back(z);
    }
  }
  if (ens.rounds.empty())
    throw std::runtime_error("train_adaboost: no usable rounds (all at or above chance)");
  if (trace) {
    int wrong = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (predict(ens, data.samples[i].features).first != labels[i]) ++wrong;
    trace->train_error = static_cast<double>(wrong) / static_cast<double>(n);
  }
  return ens;
}

// Ensemble checkpoint: magic, round count, per round alpha + the two nets.
inline void save_ensemble(const Ensemble& ens, std::ostream& os) {
  ckpt::put_magic(os);
  ckpt::put_u32(os, static_cast<std::uint32_t>(ens.num_classes));
  ckpt::put_u32(os, static_cast<std::uint32_t>(ens.rounds.size()));
  for (const auto& r : ens.rounds) {
    ckpt::put_f64(os, &r.alpha, 1);
    save_net(r.clf.cnn, os);
    save_net(r.clf.fcn, os);
  }
}

inline Ensemble load_ensemble(std::istream& is) {
  ckpt::get_magic(is);
  Ensemble ens;
  ens.num_classes = static_cast<int>(ckpt::get_u32(is));
  const auto rounds = ckpt::get_u32(is);
  for (std::uint32_t i = 0; i < rounds; ++i) {
    Ensemble::Round r;
    ckpt::get_f64(is, &r.alpha, 1);
    r.clf.cnn = load_net(is);
    r.clf.fcn = load_net(is);
    r.clf.num_classes = ens.num_classes;
    ens.rounds.push_back(std::move(r));
  }
  return ens;
}

inline void save_ensemble_file(const Ensemble& ens, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_ensemble_file: cannot open " + path);
  save_ensemble(ens, os);
}

inline Ensemble load_ensemble_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_ensemble_file: cannot open " + path);
  return load_ensemble(is);
}

}  // namespace sgwmbdl
