#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include "sgwmbdl/boosting.hpp"
#include "sgwmbdl/lle.hpp"
#include "sgwmbdl/metrics.hpp"
#include "sgwmbdl/saegan.hpp"
#include "sgwmbdl/synthgen.hpp"
#include "sgwmbdl/wavelet.hpp"

namespace sgwmbdl {

enum class Variant { Full, NoSg, NoW, NoM, NoB };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoSg: return "no_sg";
    case Variant::NoW: return "no_w";
    case Variant::NoM: return "no_m";
    default: return "no_b";
  }
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::Full, Variant::NoSg, Variant::NoW, Variant::NoM, Variant::NoB})
    if (s == variant_name(v)) return v;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

// Declared search grid for k-fold model selection.
struct GridSpec {
  std::vector<double> w_hard{0.3, 0.5, 0.7};
  std::vector<int> k_neighbors{10};
  std::vector<std::string> lambda{"universal"};
};

struct PipelineConfig {
  SynthConfig synth;
  int stride = 16;
  WaveletFilter filter = WaveletFilter::Db4;
  int levels = 4;
  ThresholdPlan plan;
  LleConfig lle;
  SaeGanConfig saegan;
  int target_per_class = 126;
  BoostConfig boost;
  int kfold_k = 5;
  double train_fraction = 0.2;
  int repeats = 10;
  std::uint64_t seed = 12345;
  bool single_learner_baselines = true;
  GridSpec grid;
};

// ---- key=value config files ----

namespace config_detail {

inline double parse_num(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw std::invalid_argument("config: bad numeric value '" + v + "' for " + key);
  }
}

inline long long parse_int(const std::string& v, const std::string& key) {
  const double x = parse_num(v, key);
  if (x != std::floor(x)) throw std::invalid_argument("config: expected integer for " + key);
  return static_cast<long long>(x);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: expected true/false for " + key);
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

inline void apply_lambda(ThresholdPlan& plan, const std::string& v, const std::string& key) {
  if (v == "universal") {
    plan.strategy = LambdaStrategy::Universal;
    plan.fixed_lambda = 0.0;
  } else {
    plan.strategy = LambdaStrategy::Fixed;
    plan.fixed_lambda = parse_num(v, key);
  }
}

}  // namespace config_detail

inline void apply_config_kv(PipelineConfig& c, const std::string& key, const std::string& v) {
  using namespace config_detail;
  if (key == "synth.samples_per_class_per_field")
    c.synth.samples_per_class_per_field = static_cast<int>(parse_int(v, key));
  else if (key == "synth.signal_len") c.synth.signal_len = static_cast<int>(parse_int(v, key));
  else if (key == "synth.noise_std") c.synth.noise_std = parse_num(v, key);
  else if (key == "synth.seed") c.synth.seed = static_cast<std::uint64_t>(parse_int(v, key));
  else if (key == "stride") c.stride = static_cast<int>(parse_int(v, key));
  else if (key == "wavelet.filter") {
    if (v == "haar") c.filter = WaveletFilter::Haar;
    else if (v == "db4") c.filter = WaveletFilter::Db4;
    else throw std::invalid_argument("config: wavelet.filter must be haar or db4");
  } else if (key == "wavelet.levels") c.levels = static_cast<int>(parse_int(v, key));
  else if (key == "wavelet.lambda") apply_lambda(c.plan, v, key);
  else if (key == "wavelet.w_hard") c.plan.w_hard = parse_num(v, key);
  else if (key == "wavelet.w_soft") c.plan.w_soft = parse_num(v, key);
  else if (key == "lle.k_neighbors") c.lle.k_neighbors = static_cast<int>(parse_int(v, key));
  else if (key == "lle.target_dim") c.lle.target_dim = static_cast<int>(parse_int(v, key));
  else if (key == "lle.reg_scale") c.lle.reg_scale = parse_num(v, key);
  else if (key == "saegan.latent_dim") c.saegan.latent_dim = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.gen_hidden") c.saegan.gen_hidden = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.disc_hidden")
    c.saegan.disc_hidden = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.sparsity_target") c.saegan.sparsity_target = parse_num(v, key);
  else if (key == "saegan.sparsity_weight") c.saegan.sparsity_weight = parse_num(v, key);
  else if (key == "saegan.freeze_sae") c.saegan.freeze_sae = parse_bool(v, key);
  else if (key == "saegan.sae_train.learning_rate")
    c.saegan.sae_train.learning_rate = parse_num(v, key);
  else if (key == "saegan.sae_train.epochs")
    c.saegan.sae_train.epochs = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.sae_train.batch_size")
    c.saegan.sae_train.batch_size = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.gan_train.learning_rate")
    c.saegan.gan_train.learning_rate = parse_num(v, key);
  else if (key == "saegan.gan_train.epochs")
    c.saegan.gan_train.epochs = static_cast<int>(parse_int(v, key));
  else if (key == "saegan.gan_train.batch_size")
    c.saegan.gan_train.batch_size = static_cast<int>(parse_int(v, key));
  else if (key == "target_per_class") c.target_per_class = static_cast<int>(parse_int(v, key));
  else if (key == "boost.rounds") c.boost.rounds = static_cast<int>(parse_int(v, key));
  else if (key == "boost.multiclass_mode") {
    if (v == "samme") c.boost.mode = MulticlassMode::Samme;
    else if (v == "paper_binary") c.boost.mode = MulticlassMode::PaperBinary;
    else throw std::invalid_argument("config: boost.multiclass_mode must be samme|paper_binary");
  } else if (key == "boost.category_weights") {
    if (v == "recurring") c.boost.cw_mode = CategoryWeightsMode::Recurring;
    else if (v == "init_only") c.boost.cw_mode = CategoryWeightsMode::InitOnly;
    else if (v == "off") c.boost.cw_mode = CategoryWeightsMode::Off;
    else
      throw std::invalid_argument(
          "config: boost.category_weights must be recurring|init_only|off");
  } else if (key == "boost.weak_train.learning_rate")
    c.boost.weak_train.learning_rate = parse_num(v, key);
  else if (key == "boost.weak_train.epochs")
    c.boost.weak_train.epochs = static_cast<int>(parse_int(v, key));
  else if (key == "boost.weak_train.batch_size")
    c.boost.weak_train.batch_size = static_cast<int>(parse_int(v, key));
  else if (key == "kfold_k") c.kfold_k = static_cast<int>(parse_int(v, key));
  else if (key == "train_fraction") c.train_fraction = parse_num(v, key);
  else if (key == "repeats") c.repeats = static_cast<int>(parse_int(v, key));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(v, key));
  else if (key == "single_learner_baselines")
    c.single_learner_baselines = parse_bool(v, key);
  else if (key == "grid.w_hard") {
    c.grid.w_hard.clear();
    for (const auto& s : split_list(v)) c.grid.w_hard.push_back(parse_num(s, key));
  } else if (key == "grid.k_neighbors") {
    c.grid.k_neighbors.clear();
    for (const auto& s : split_list(v))
      c.grid.k_neighbors.push_back(static_cast<int>(parse_int(s, key)));
  } else if (key == "grid.lambda") {
    c.grid.lambda = split_list(v);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r' || line.back() == '\t'))
      line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: missing '=' at line " + std::to_string(line_no));
    apply_config_kv(cfg, line.substr(start, eq - start), line.substr(eq + 1));
  }
  return cfg;
}

inline PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream os;
  const auto num = [](double v) { return format_double(v); };
  os << "synth.samples_per_class_per_field=" << c.synth.samples_per_class_per_field << "\n";
  os << "synth.signal_len=" << c.synth.signal_len << "\n";
  os << "synth.noise_std=" << num(c.synth.noise_std) << "\n";
  os << "synth.seed=" << c.synth.seed << "\n";
  os << "stride=" << c.stride << "\n";
  os << "wavelet.filter=" << (c.filter == WaveletFilter::Haar ? "haar" : "db4") << "\n";
  os << "wavelet.levels=" << c.levels << "\n";
  os << "wavelet.lambda="
     << (c.plan.strategy == LambdaStrategy::Universal ? std::string("universal")
                                                      : num(c.plan.fixed_lambda))
     << "\n";
  os << "wavelet.w_hard=" << num(c.plan.w_hard) << "\n";
  os << "wavelet.w_soft=" << num(c.plan.w_soft) << "\n";
  os << "lle.k_neighbors=" << c.lle.k_neighbors << "\n";
  os << "lle.target_dim=" << c.lle.target_dim << "\n";
  os << "lle.reg_scale=" << num(c.lle.reg_scale) << "\n";
  os << "saegan.latent_dim=" << c.saegan.latent_dim << "\n";
  os << "saegan.gen_hidden=" << c.saegan.gen_hidden << "\n";
  os << "saegan.disc_hidden=" << c.saegan.disc_hidden << "\n";
  os << "saegan.sparsity_target=" << num(c.saegan.sparsity_target) << "\n";
  os << "saegan.sparsity_weight=" << num(c.saegan.sparsity_weight) << "\n";
  os << "saegan.freeze_sae=" << (c.saegan.freeze_sae ? "true" : "false") << "\n";
  os << "saegan.sae_train.learning_rate=" << num(c.saegan.sae_train.learning_rate) << "\n";
  os << "saegan.sae_train.epochs=" << c.saegan.sae_train.epochs << "\n";
  os << "saegan.sae_train.batch_size=" << c.saegan.sae_train.batch_size << "\n";
  os << "saegan.gan_train.learning_rate=" << num(c.saegan.gan_train.learning_rate) << "\n";
  os << "saegan.gan_train.epochs=" << c.saegan.gan_train.epochs << "\n";
  os << "saegan.gan_train.batch_size=" << c.saegan.gan_train.batch_size << "\n";
  os << "target_per_class=" << c.target_per_class << "\n";
  os << "boost.rounds=" << c.boost.rounds << "\n";
  os << "boost.multiclass_mode="
     << (c.boost.mode == MulticlassMode::Samme ? "samme" : "paper_binary") << "\n";
  os << "boost.category_weights="
     << (c.boost.cw_mode == CategoryWeightsMode::Recurring
             ? "recurring"
             : c.boost.cw_mode == CategoryWeightsMode::InitOnly ? "init_only" : "off")
     << "\n";
  os << "boost.weak_train.learning_rate=" << num(c.boost.weak_train.learning_rate) << "\n";
  os << "boost.weak_train.epochs=" << c.boost.weak_train.epochs << "\n";
  os << "boost.weak_train.batch_size=" << c.boost.weak_train.batch_size << "\n";
  os << "kfold_k=" << c.kfold_k << "\n";
  os << "train_fraction=" << num(c.train_fraction) << "\n";
  os << "repeats=" << c.repeats << "\n";
  os << "seed=" << c.seed << "\n";
  os << "single_learner_baselines=" << (c.single_learner_baselines ? "true" : "false") << "\n";
  os << "grid.w_hard=";
  for (std::size_t i = 0; i < c.grid.w_hard.size(); ++i)
    os << (i ? "," : "") << num(c.grid.w_hard[i]);
  os << "\n";
  os << "grid.k_neighbors=";
  for (std::size_t i = 0; i < c.grid.k_neighbors.size(); ++i)
    os << (i ? "," : "") << c.grid.k_neighbors[i];
  os << "\n";
  os << "grid.lambda=";
  for (std::size_t i = 0; i < c.grid.lambda.size(); ++i) os << (i ? "," : "") << c.grid.lambda[i];
  os << "\n";
  return os.str();
}

// ---- PCA (ablation arm for LLE) ----

// Center, project onto the top-d principal directions; output column signs
// follow the same first-significant-entry-positive rule as lle_reduce.
inline Mat pca_reduce(const Mat& points, int d) {
  const int n = static_cast<int>(points.rows);
  const int dim = static_cast<int>(points.cols);
  if (d < 1 || d >= dim) throw std::invalid_argument("pca_reduce: d must lie in [1, input dim)");
  if (n < 2) throw std::invalid_argument("pca_reduce: need at least 2 points");
  Eigen::MatrixXd x = lle_detail::to_eigen(points);
  x.rowwise() -= x.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  Eigen::MatrixXd y = x * svd.matrixV().leftCols(d);
  lle_detail::fix_column_signs(y);
  Mat out(n, d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) out(r, c) = y(r, c);
  return out;
}

// ---- orchestration ----

enum class Provenance { RealTrain, RealTest, Generated };

struct StageRecord {
  std::string stage;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

struct RepeatDiagnostics {
  double train_error = 0.0;
  double z_product = 1.0;
  int skipped_rounds = 0;
};

struct PipelineResult {
  std::vector<RunReport> reports;
  std::vector<RunReport> cnn_reports;
  std::vector<RunReport> fcn_reports;
  std::vector<RepeatDiagnostics> diagnostics;
  std::string best_params;
  std::vector<StageRecord> stage_log;
  std::vector<std::string> written_files;
};

namespace pipeline_detail {

// Seed stream tags.
inline constexpr std::uint64_t kSynth = 1, kSplit = 2, kSae = 3, kGan = 4, kGen = 5,
                               kSelect = 6, kBoost = 7, kCnnBase = 8, kFcnBase = 9;

struct Pool {
  Mat x;
  std::vector<int> y;
  std::vector<Provenance> tag;
};

inline void validate_config(const PipelineConfig& c) {
  validate(c.synth);
  if (c.stride < 1) throw std::invalid_argument("pipeline: stride must be >= 1");
  if (c.levels < 1) throw std::invalid_argument("pipeline: wavelet levels must be >= 1");
  validate(c.plan);
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw std::invalid_argument("pipeline: train_fraction must lie in (0,1)");
  if (c.kfold_k < 2) throw std::invalid_argument("pipeline: kfold_k must be >= 2");
  if (c.repeats < 1) throw std::invalid_argument("pipeline: repeats must be >= 1");
  if (c.boost.rounds < 1) throw std::invalid_argument("pipeline: boost.rounds must be >= 1");
  validate(c.boost.weak_train);
  validate(c.saegan.sae_train);
  validate(c.saegan.gan_train);
  if (c.grid.w_hard.empty() || c.grid.k_neighbors.empty() || c.grid.lambda.empty())
    throw std::invalid_argument("pipeline: empty parameter grid");
  for (double w : c.grid.w_hard)
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("pipeline: grid.w_hard entries must lie in [0,1]");
}

inline ThresholdPlan make_plan(const std::string& lambda_spec, double w_hard) {
  ThresholdPlan p;
  config_detail::apply_lambda(p, lambda_spec, "grid.lambda");
  p.w_hard = w_hard;
  p.w_soft = 1.0 - w_hard;
  validate(p);
  return p;
}

// Round-robin over classes so in-order k-folds stay class-balanced.
inline Pool interleave_classes(const std::vector<Mat>& per_class_x,
                               const std::vector<std::vector<Provenance>>& per_class_tag) {
  const int k = static_cast<int>(per_class_x.size());
  Pool pool;
  std::size_t total = 0, cols = 0;
  for (const auto& m : per_class_x) {
    total += m.rows;
    cols = m.cols;
  }
  pool.x = Mat(total, cols);
  pool.y.reserve(total);
  std::size_t row = 0;
  for (std::size_t i = 0; row < total; ++i)
    for (int c = 0; c < k; ++c)
      if (i < per_class_x[c].rows) {
        std::copy(per_class_x[c].row(i).begin(), per_class_x[c].row(i).end(),
                  pool.x.row(row).begin());
        pool.y.push_back(c);
        pool.tag.push_back(per_class_tag[c][i]);
        ++row;
      }
  return pool;
}

inline Mat denoise_rows(const Mat& x, WaveletFilter filter, int levels,
                        const ThresholdPlan& plan) {
  Mat out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto d = denoise(x.row(r), filter, levels, plan);
    std::copy(d.begin(), d.end(), out.row(r).begin());
  }
  return out;
}

// Min-max rescale columns to [0,1] (constant columns to 0) so the reduced
// coordinates are on the scale the classifiers expect.
inline void rescale_columns(Mat& m) {
  for (std::size_t c = 0; c < m.cols; ++c) {
    double lo = m(0, c), hi = m(0, c);
    for (std::size_t r = 1; r < m.rows; ++r) {
      lo = std::min(lo, m(r, c));
      hi = std::max(hi, m(r, c));
    }
    for (std::size_t r = 0; r < m.rows; ++r)
      m(r, c) = hi > lo ? (m(r, c) - lo) / (hi - lo) : 0.0;
  }
}

inline Dataset pool_to_dataset(const Mat& x, const std::vector<int>& y, int num_classes) {
  std::vector<FusedSample> samples(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    samples[r].label = y[r];
    samples[r].features.assign(x.row(r).begin(), x.row(r).end());
  }
  return make_dataset(std::move(samples), num_classes);
}

inline std::vector<int> predict_dataset(const Ensemble& ens, const Dataset& ds) {
  std::vector<int> preds(ds.samples.size());
  for (std::size_t i = 0; i < ds.samples.size(); ++i)
    preds[i] = predict(ens, ds.samples[i].features).first;
  return preds;
}

// End-to-end consistency of the logged shape chain.
inline void validate_stage_log(const std::vector<StageRecord>& log, int stride, int target_dim) {
  const auto find = [&](const std::string& name) -> const StageRecord& {
    for (const auto& rec : log)
      if (rec.stage == name) return rec;
    throw std::runtime_error("stage log: missing stage " + name);
  };
  const auto &raw = find("raw"), &fuse = find("fuse"), &sampled = find("interval_sample"),
             &norm = find("normalize"), &train = find("split_train"),
             &test = find("split_test"), &aug = find("augmented_train"),
             &reduced = find("reduced_test");
  const bool ok = fuse.rows * 2 == raw.rows && fuse.cols == 2 * raw.cols &&
                  sampled.rows == fuse.rows &&
                  sampled.cols == (fuse.cols + stride - 1) / static_cast<std::size_t>(stride) &&
                  norm.rows == sampled.rows && norm.cols == sampled.cols &&
                  train.rows + test.rows == norm.rows && train.cols == norm.cols &&
                  test.cols == norm.cols && aug.cols == static_cast<std::size_t>(target_dim) &&
                  reduced.cols == aug.cols && reduced.rows == test.rows;
  if (!ok) throw std::runtime_error("stage log: shape chain inconsistent");
}

}  // namespace pipeline_detail

// Runs the full modeling chain. With an empty `raw`, a synthetic dataset is
// generated from cfg.synth with the master seed. Reports (and ensemble
// checkpoints) are written under out_dir unless it is empty.
inline PipelineResult run_pipeline(const PipelineConfig& cfg_in,
                                   const std::vector<RawSample>& raw_in, Variant variant,
                                   const std::string& out_dir) {
  using namespace pipeline_detail;
  PipelineConfig cfg = cfg_in;
  validate_config(cfg);
  PipelineResult result;
  const auto log_stage = [&](const std::string& name, std::size_t rows, std::size_t cols) {
    result.stage_log.push_back({name, rows, cols});
  };
  // Any stage failure aborts with the stage name prepended to the cause.
  const auto at_stage = [](const char* stage, auto&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("stage ") + stage + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string("stage ") + stage + ": " + e.what());
    }
  };

  // Ablation arms adjust the stage plan, never the data path around it.
  if (variant == Variant::NoW) cfg.grid.w_hard = {0.0};
  if (variant == Variant::NoM) cfg.grid.k_neighbors = {cfg.lle.k_neighbors};
  if (variant == Variant::NoB) {
    cfg.boost.cw_mode = CategoryWeightsMode::Off;
    cfg.boost.mode = MulticlassMode::Samme;
  }

  std::vector<RawSample> raw = raw_in;
  if (raw.empty()) {
    SynthConfig sc = cfg.synth;
    sc.seed = mix_seed(cfg.seed, kSynth);
    raw = generate_dataset(sc);
  }
  log_stage("raw", raw.size(), raw.front().values.size());

  // Step 2: fuse the two physical fields, sample at intervals, normalize.
  auto fused = at_stage("fuse", [&] { return fuse_generated(raw); });
  log_stage("fuse", fused.size(), fused.front().features.size());
  at_stage("interval_sample", [&] {
    for (auto& f : fused) f.features = interval_sample(f.features, cfg.stride);
  });
  log_stage("interval_sample", fused.size(), fused.front().features.size());

  int num_classes = 0;
  for (const auto& f : fused) num_classes = std::max(num_classes, f.label + 1);
  const Dataset normalized = at_stage(
      "normalize", [&] { return normalize_minmax(make_dataset(std::move(fused), num_classes)); });
  log_stage("normalize", normalized.samples.size(), normalized.feature_dim);

  // Hold the test side out before any augmentation.
  auto [train_ds, test_ds] = at_stage("split_train_test", [&] {
    return split_train_test(normalized, cfg.train_fraction, mix_seed(cfg.seed, kSplit));
  });
  log_stage("split_train", train_ds.samples.size(), train_ds.feature_dim);
  log_stage("split_test", test_ds.samples.size(), test_ds.feature_dim);
  const int dim = train_ds.feature_dim;

  std::vector<Mat> class_real(num_classes);
  at_stage("train_pool", [&] {
    std::vector<std::vector<const FusedSample*>> rows(num_classes);
    for (const auto& s : train_ds.samples) rows[s.label].push_back(&s);
    for (int c = 0; c < num_classes; ++c) {
      class_real[c] = Mat(rows[c].size(), dim);
      for (std::size_t i = 0; i < rows[c].size(); ++i)
        std::copy(rows[c][i]->features.begin(), rows[c][i]->features.end(),
                  class_real[c].row(i).begin());
      if (cfg.target_per_class < static_cast<int>(rows[c].size()))
        throw std::invalid_argument("target_per_class below real class size");
    }
  });

  // Data generation module: one SAE-GAN per fault class, trained only on
  // RealTrain rows (the held-out test side never reaches the GAN).
  std::vector<SaeGanModel> gan(variant == Variant::NoSg ? 0 : num_classes);
  if (variant != Variant::NoSg) {
    for (int c = 0; c < num_classes; ++c) {
      SaeGanConfig gc = cfg.saegan;
      gc.sae_train.seed = mix_seed(cfg.seed, kSae, static_cast<std::uint64_t>(c));
      gc.gan_train.seed = mix_seed(cfg.seed, kGan, static_cast<std::uint64_t>(c));
      gan[c] = at_stage("saegan_train", [&] { return train_saegan(class_real[c], gc).model; });
    }
    log_stage("saegan_train", num_classes, dim);
  }

  const auto build_pool = [&](std::uint64_t gen_tag) {
    std::vector<Mat> xs(num_classes);
    std::vector<std::vector<Provenance>> tags(num_classes);
    for (int c = 0; c < num_classes; ++c) {
      const auto n_real = class_real[c].rows;
      const int extra =
          variant == Variant::NoSg ? 0 : cfg.target_per_class - static_cast<int>(n_real);
      xs[c] = Mat(n_real + extra, dim);
      std::copy(class_real[c].data.begin(), class_real[c].data.end(), xs[c].data.begin());
      tags[c].assign(n_real, Provenance::RealTrain);
      if (extra > 0) {
        const Mat g = generate_samples(
            gan[c], extra, mix_seed(cfg.seed, kGen, static_cast<std::uint64_t>(c), gen_tag));
        std::copy(g.data.begin(), g.data.end(), xs[c].data.begin() + n_real * dim);
        tags[c].insert(tags[c].end(), extra, Provenance::Generated);
      }
    }
    return interleave_classes(xs, tags);
  };

  // Denoise + reduce over the union of the (augmented) training pool and the
  // held-out test features. LLE has no out-of-sample map, so the reduction is
  // transductive; see the report notes.
  const auto preprocess = [&](const Pool& pool, const ThresholdPlan& plan, int k_nbrs) {
    Mat all(pool.x.rows + test_ds.samples.size(), dim);
    std::copy(pool.x.data.begin(), pool.x.data.end(), all.data.begin());
    for (std::size_t i = 0; i < test_ds.samples.size(); ++i)
      std::copy(test_ds.samples[i].features.begin(), test_ds.samples[i].features.end(),
                all.row(pool.x.rows + i).begin());
    Mat denoised =
        at_stage("denoise", [&] { return denoise_rows(all, cfg.filter, cfg.levels, plan); });
    Mat reduced;
    if (variant == Variant::NoM) {
      reduced = at_stage("pca_reduce", [&] { return pca_reduce(denoised, cfg.lle.target_dim); });
    } else {
      LleConfig lc = cfg.lle;
      lc.k_neighbors = k_nbrs;
      reduced = at_stage("lle_reduce", [&] { return lle_reduce(denoised, lc).embedding; });
    }
    rescale_columns(reduced);
    Mat train_x(pool.x.rows, reduced.cols);
    std::copy(reduced.data.begin(), reduced.data.begin() + train_x.data.size(),
              train_x.data.begin());
    Mat test_x(test_ds.samples.size(), reduced.cols);
    std::copy(reduced.data.begin() + train_x.data.size(), reduced.data.end(),
              test_x.data.begin());
    std::vector<int> test_y(test_ds.samples.size());
    for (std::size_t i = 0; i < test_y.size(); ++i) test_y[i] = test_ds.samples[i].label;
    return std::make_pair(pool_to_dataset(train_x, pool.y, num_classes),
                          pool_to_dataset(test_x, test_y, num_classes));
  };

  // Step 6/9: exhaustive grid search scored by k-fold validation accuracy.
  // The fold count clamps to the smallest class in the selection pool (the
  // un-augmented no_sg arm cannot support the full k).
  const Pool selection_pool = build_pool(0x5e1ec7ULL);
  int select_k = cfg.kfold_k;
  {
    std::vector<int> counts(num_classes, 0);
    for (int y : selection_pool.y) ++counts[y];
    select_k = std::min(select_k, *std::min_element(counts.begin(), counts.end()));
  }
  double best_score = -1.0;
  std::string best_lambda = cfg.grid.lambda.front();
  double best_w = cfg.grid.w_hard.front();
  int best_k = cfg.grid.k_neighbors.front();
  std::uint64_t grid_index = 0;
  const bool run_selection =
      select_k >= 2 &&
      cfg.grid.lambda.size() * cfg.grid.w_hard.size() * cfg.grid.k_neighbors.size() > 1;
  if (run_selection) {
    for (const auto& lambda_spec : cfg.grid.lambda)
      for (double w_hard : cfg.grid.w_hard)
        for (int k_nbrs : cfg.grid.k_neighbors) {
          const ThresholdPlan plan = make_plan(lambda_spec, w_hard);
          const auto [sel_train, sel_test] = preprocess(selection_pool, plan, k_nbrs);
          (void)sel_test;
          double score = 0.0;
          int fold_index = 0;
          for (const auto& [ftrain, fval] : kfold(sel_train, select_k)) {
            BoostConfig bc = cfg.boost;
            bc.weak_train.seed = mix_seed(cfg.seed, kSelect, grid_index,
                                          static_cast<std::uint64_t>(fold_index++));
            const Ensemble ens = train_adaboost(ftrain, bc);
            const auto preds = predict_dataset(ens, fval);
            std::vector<int> truth(fval.samples.size());
            for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = fval.samples[i].label;
            score += evaluate(preds, truth, num_classes).accuracy;
          }
          score /= select_k;
          if (score > best_score) {
            best_score = score;
            best_lambda = lambda_spec;
            best_w = w_hard;
            best_k = k_nbrs;
          }
          ++grid_index;
        }
  }
  {
    std::ostringstream os;
    os << "wavelet.lambda=" << best_lambda << ";wavelet.w_hard=" << format_double(best_w)
       << ";lle.k_neighbors=" << best_k;
    if (run_selection)
      os << ";kfold_accuracy=" << format_double(best_score) << ";folds=" << select_k;
    else
      os << ";selection=skipped";
    result.best_params = os.str();
  }
  log_stage("grid_select", grid_index, 1);

  const std::string config_echo = serialize_config(cfg_in);
  const std::string notes =
      "lle reduction is transductive over train+test features (paper procedure); "
      "test samples never reach the SAE-GAN";

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  const auto write_report = [&](const RunReport& r, const std::string& variant_label,
                                int repeat) {
    if (out_dir.empty()) return;
    const auto path = std::filesystem::path(out_dir) /
                      ("report_" + variant_label + "_" + std::to_string(repeat) + ".json");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("pipeline: cannot write " + path.string());
    os << report_to_json(r).dump(2) << "\n";
    result.written_files.push_back(path.string());
  };

  // Step 10 + repeats: fresh generation noise and weak-learner seeds per
  // repeat, split held fixed.
  const ThresholdPlan best_plan = make_plan(best_lambda, best_w);
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    const Pool pool =
        variant == Variant::NoSg ? build_pool(0) : build_pool(static_cast<std::uint64_t>(rep) + 1);
    for (std::size_t i = 0; i < pool.tag.size(); ++i)
      if (pool.tag[i] == Provenance::RealTest)
        throw std::runtime_error("pipeline: test sample leaked into training pool");
    const auto [final_train, final_test] = preprocess(pool, best_plan, best_k);
    if (rep == 0) {
      log_stage("augmented_train", final_train.samples.size(), final_train.feature_dim);
      log_stage("reduced_test", final_test.samples.size(), final_test.feature_dim);
    }

    BoostConfig bc = cfg.boost;
    bc.weak_train.seed = mix_seed(cfg.seed, kBoost, static_cast<std::uint64_t>(rep));
    BoostTrace trace;
    const Ensemble ens =
        at_stage("boosting", [&] { return train_adaboost(final_train, bc, &trace); });

    std::vector<int> truth(final_test.samples.size());
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = final_test.samples[i].label;
    RunReport report = evaluate(predict_dataset(ens, final_test), truth, num_classes);
    report.variant = variant_name(variant);
    report.seed = static_cast<long long>(bc.weak_train.seed);
    report.config_echo = config_echo;
    report.notes = notes;
    write_report(report, variant_name(variant), rep);
    result.reports.push_back(std::move(report));

    double zprod = 1.0;
    for (double z : trace.z_factors) zprod *= z;
    result.diagnostics.push_back({trace.train_error, zprod, trace.skipped_rounds});

    if (!out_dir.empty()) {
      const auto path = std::filesystem::path(out_dir) /
                        ("ensemble_" + std::string(variant_name(variant)) + "_" +
                         std::to_string(rep) + ".bin");
      save_ensemble_file(ens, path.string());
      result.written_files.push_back(path.string());
    }

    // Single weak learners on the same preprocessed data.
    if (cfg.single_learner_baselines && variant == Variant::Full) {
      Mat x(final_train.samples.size(), final_train.feature_dim);
      std::vector<int> y(final_train.samples.size());
      for (std::size_t i = 0; i < x.rows; ++i) {
        const auto& s = final_train.samples[i];
        std::copy(s.features.begin(), s.features.end(), x.row(i).begin());
        y[i] = s.label;
      }
      const auto eval_single = [&](Net net, std::uint64_t seed_tag,
                                   const std::string& label) {
        TrainConfig tc = cfg.boost.weak_train;
        tc.seed = mix_seed(cfg.seed, seed_tag, static_cast<std::uint64_t>(rep), 1);
        train_classifier(net, x, y, tc);
        std::vector<int> preds(final_test.samples.size());
        for (std::size_t i = 0; i < preds.size(); ++i)
          preds[i] = argmax_lowest(net.infer(final_test.samples[i].features));
        RunReport r = evaluate(preds, truth, num_classes);
        r.variant = label;
        r.seed = static_cast<long long>(tc.seed);
        r.config_echo = config_echo;
        r.notes = notes;
        write_report(r, label, rep);
        return r;
      };
      result.cnn_reports.push_back(eval_single(
          make_cnn_classifier(final_train.feature_dim, num_classes,
                              mix_seed(cfg.seed, kCnnBase, static_cast<std::uint64_t>(rep))),
          kCnnBase, "cnn_only"));
      result.fcn_reports.push_back(eval_single(
          make_fcn_classifier(final_train.feature_dim, num_classes,
                              mix_seed(cfg.seed, kFcnBase, static_cast<std::uint64_t>(rep))),
          kFcnBase, "fcn_only"));
    }
  }

  validate_stage_log(result.stage_log, cfg.stride, cfg.lle.target_dim);

  if (!out_dir.empty()) {
    nlohmann::json summary;
    summary["variant"] = variant_name(variant);
    summary["aggregate"] = aggregate_to_json(aggregate(result.reports));
    summary["best_params"] = result.best_params;
    summary["config"] = config_echo;
    const auto path = std::filesystem::path(out_dir) /
                      ("summary_" + std::string(variant_name(variant)) + ".json");
    std::ofstream os(path);
    os << summary.dump(2) << "\n";
    result.written_files.push_back(path.string());
  }
  return result;
}

// Spec variants: no_sg skips augmentation, no_w locks soft-only denoising,
// no_m swaps LLE for PCA, no_b strips category weighting; full == run_pipeline.
inline PipelineResult ablate(const PipelineConfig& cfg, Variant variant,
                             const std::vector<RawSample>& raw, const std::string& out_dir) {
  return run_pipeline(cfg, raw, variant, out_dir);
}

}  // namespace sgwmbdl
