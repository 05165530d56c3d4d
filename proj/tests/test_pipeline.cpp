#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <random>

#include "sgwmbdl/pipeline.hpp"

using namespace sgwmbdl;

namespace {

// Small enough to run the whole chain in seconds while keeping the class
// structure alive through interval sampling.
PipelineConfig tiny_config() {
  PipelineConfig cfg;
  cfg.synth.samples_per_class_per_field = 10;
  cfg.synth.signal_len = 1024;
  cfg.synth.noise_std = 0.1;
  cfg.stride = 16;  // fused 2048 -> 128 features
  cfg.levels = 3;
  cfg.lle.k_neighbors = 8;
  cfg.lle.target_dim = 8;
  cfg.saegan.latent_dim = 8;
  cfg.saegan.gen_hidden = 12;
  cfg.saegan.disc_hidden = 12;
  cfg.saegan.sae_train = {0.02, 40, 4, 1};
  cfg.saegan.gan_train = {0.02, 30, 4, 1};
  cfg.target_per_class = 24;
  cfg.boost.rounds = 2;
  cfg.boost.weak_train = {0.3, 12, 16, 1};
  cfg.kfold_k = 2;
  cfg.repeats = 2;
  cfg.seed = 2024;
  cfg.single_learner_baselines = false;
  cfg.grid.w_hard = {0.5};
  cfg.grid.k_neighbors = {8};
  cfg.grid.lambda = {"universal"};
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config serialization round trips through the parser") {
  PipelineConfig cfg = tiny_config();
  cfg.plan.strategy = LambdaStrategy::Fixed;
  cfg.plan.fixed_lambda = 0.25;
  cfg.boost.cw_mode = CategoryWeightsMode::InitOnly;
  cfg.filter = WaveletFilter::Haar;
  cfg.grid.w_hard = {0.3, 0.5, 0.7};
  const std::string text = serialize_config(cfg);
  const PipelineConfig back = parse_config_text(text);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("config parser rejects unknown keys and bad values") {
  CHECK_THROWS_WITH_AS(parse_config_text("no_such_key=1\n"), doctest::Contains("unknown key"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("stride=abc\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text("stride 4\n"), std::invalid_argument);
  const auto cfg = parse_config_text("# comment only\n\nstride=4\n");
  CHECK(cfg.stride == 4);
}

TEST_CASE("variant names round trip") {
  for (Variant v : {Variant::Full, Variant::NoSg, Variant::NoW, Variant::NoM, Variant::NoB})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("bogus"), std::invalid_argument);
}

TEST_CASE("pca_reduce recovers an exact low-dimensional subspace") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Mat z(30, 2);
  for (auto& v : z.data) v = g(rng);
  Mat basis(2, 6);
  for (auto& v : basis.data) v = g(rng);
  Mat x(30, 6);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 6; ++j) {
      double s = 1.5;  // nonzero mean, removed by centering
      for (int k = 0; k < 2; ++k) s += z(i, k) * basis(k, j);
      x(i, j) = s;
    }
  const Mat y = pca_reduce(x, 2);

  // projection of centered data has zero mean
  for (int c = 0; c < 2; ++c) {
    double mean = 0.0;
    for (int i = 0; i < 30; ++i) mean += y(i, c);
    CHECK(std::abs(mean / 30.0) < 1e-10);
  }

  // top-2 projection captures all variance of rank-2 data
  Eigen::MatrixXd xe(30, 6);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 6; ++j) xe(i, j) = x(i, j);
  xe.rowwise() -= xe.colwise().mean();
  double fro_x = xe.squaredNorm(), fro_y = 0.0;
  for (double v : y.data) fro_y += v * v;
  CHECK(fro_y == doctest::Approx(fro_x).epsilon(1e-10));

  CHECK_THROWS_AS(pca_reduce(x, 6), std::invalid_argument);
}

// Dense covariance eigendecomposition oracle for the SVD route.
TEST_CASE("pca_reduce matches the covariance eigen-decomposition oracle") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Mat x(20, 6);
  for (auto& v : x.data) v = g(rng);
  const Mat y = pca_reduce(x, 3);

  Eigen::MatrixXd xe(20, 6);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 6; ++j) xe(i, j) = x(i, j);
  xe.rowwise() -= xe.colwise().mean();
  const Eigen::MatrixXd cov = xe.transpose() * xe / 19.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::MatrixXd proj = xe * es.eigenvectors().rightCols(3).rowwise().reverse();
  for (int c = 0; c < 3; ++c) {  // align the oracle's sign to the library rule
    for (int r = 0; r < 20; ++r)
      if (std::abs(proj(r, c)) > 1e-12) {
        if (proj(r, c) < 0) proj.col(c) = -proj.col(c);
        break;
      }
  }
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 3; ++c) CHECK(y(r, c) == doctest::Approx(proj(r, c)).epsilon(1e-8));
}

TEST_CASE("tiny end-to-end run: counts, reports, and determinism") {
  const auto cfg = tiny_config();
  const auto out1 = std::filesystem::temp_directory_path() / "sgwmbdl_run1";
  const auto out2 = std::filesystem::temp_directory_path() / "sgwmbdl_run2";
  std::filesystem::remove_all(out1);
  std::filesystem::remove_all(out2);

  const auto r1 = run_pipeline(cfg, {}, Variant::Full, out1.string());
  CHECK(r1.reports.size() == 2);
  for (const auto& rep : r1.reports) {
    CHECK(rep.variant == "full");
    CHECK(rep.confusion.total() == 64);  // 80 fused samples split 2:8
  }
  // augmented pool: 8 classes at target_per_class each
  bool found_aug = false;
  for (const auto& rec : r1.stage_log)
    if (rec.stage == "augmented_train") {
      CHECK(rec.rows == 8 * 24);
      CHECK(rec.cols == cfg.lle.target_dim);
      found_aug = true;
    }
  CHECK(found_aug);
  for (const auto& d : r1.diagnostics) CHECK(d.train_error <= d.z_product + 1e-12);

  const auto r2 = run_pipeline(cfg, {}, Variant::Full, out2.string());
  REQUIRE(r1.written_files.size() == r2.written_files.size());
  for (std::size_t i = 0; i < r1.written_files.size(); ++i)
    CHECK(slurp(r1.written_files[i]) == slurp(r2.written_files[i]));

  // reports parse back and match the in-memory run
  const auto loaded = report_from_json(
      nlohmann::json::parse(slurp((out1 / "report_full_0.json").string())));
  CHECK(loaded.accuracy == r1.reports[0].accuracy);

  std::filesystem::remove_all(out1);
  std::filesystem::remove_all(out2);
}

TEST_CASE("no_sg keeps the training pool at its real size") {
  auto cfg = tiny_config();
  cfg.repeats = 1;
  const auto r = run_pipeline(cfg, {}, Variant::NoSg, "");
  bool found = false;
  for (const auto& rec : r.stage_log)
    if (rec.stage == "augmented_train") {
      CHECK(rec.rows == 16);  // 2 per class, no generation
      found = true;
    }
  CHECK(found);
  CHECK(r.reports[0].variant == "no_sg");
}

TEST_CASE("ablate(full) equals run_pipeline under the same seed") {
  auto cfg = tiny_config();
  cfg.repeats = 1;
  const auto a = run_pipeline(cfg, {}, Variant::Full, "");
  const auto b = ablate(cfg, Variant::Full, {}, "");
  REQUIRE(a.reports.size() == b.reports.size());
  CHECK(a.reports[0].accuracy == b.reports[0].accuracy);
  CHECK(report_to_json(a.reports[0]).dump() == report_to_json(b.reports[0]).dump());
}

TEST_CASE("single-learner baselines ride on the same preprocessed data") {
  auto cfg = tiny_config();
  cfg.repeats = 1;
  cfg.single_learner_baselines = true;
  const auto r = run_pipeline(cfg, {}, Variant::Full, "");
  CHECK(r.cnn_reports.size() == 1);
  CHECK(r.fcn_reports.size() == 1);
  CHECK(r.cnn_reports[0].variant == "cnn_only");
  CHECK(r.fcn_reports[0].confusion.total() == 64);
}

TEST_CASE("every ablation variant completes with its own label") {
  auto cfg = tiny_config();
  cfg.repeats = 1;
  for (Variant v : {Variant::NoW, Variant::NoM, Variant::NoB}) {
    const auto r = ablate(cfg, v, {}, "");
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].variant == variant_name(v));
    CHECK(r.reports[0].confusion.total() == 64);
    if (v == Variant::NoW)  // soft-only denoising locks the hard weight at 0
      CHECK(r.best_params.find("wavelet.w_hard=0;") != std::string::npos);
  }
}

TEST_CASE("stage errors surface with the stage name and cause") {
  auto cfg = tiny_config();
  cfg.target_per_class = 1;  // below the real per-class train count
  CHECK_THROWS_WITH_AS(run_pipeline(cfg, {}, Variant::Full, ""),
                       doctest::Contains("stage train_pool"), std::invalid_argument);
}

}  // TEST_SUITE
