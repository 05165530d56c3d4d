#include <doctest.h>

#include <cmath>

#include "sgwmbdl/synthgen.hpp"

using namespace sgwmbdl;

namespace {

double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("generation is deterministic per (label, field, index, seed)") {
  SynthConfig cfg;
  cfg.signal_len = 256;
  cfg.noise_std = 0.0;
  const auto a = generate_class_signal(2, FieldId::FieldI, 0, cfg);
  const auto b = generate_class_signal(2, FieldId::FieldI, 0, cfg);
  CHECK(a.values == b.values);

  cfg.noise_std = 0.3;
  const auto c = generate_class_signal(2, FieldId::FieldI, 3, cfg);
  const auto d = generate_class_signal(2, FieldId::FieldI, 3, cfg);
  CHECK(c.values == d.values);
  cfg.seed += 1;
  const auto e = generate_class_signal(2, FieldId::FieldI, 3, cfg);
  CHECK(c.values != e.values);
}

TEST_CASE("classes are separated at zero noise") {
  SynthConfig cfg;
  cfg.signal_len = 512;
  cfg.noise_std = 0.0;
  const auto a = generate_class_signal(0, FieldId::FieldI, 0, cfg);
  const auto b = generate_class_signal(4, FieldId::FieldI, 0, cfg);
  CHECK(euclid(a.values, b.values) > 0.0);
}

TEST_CASE("label range is enforced") {
  SynthConfig cfg;
  CHECK_THROWS_AS(generate_class_signal(8, FieldId::FieldI, 0, cfg), std::invalid_argument);
  CHECK_THROWS_AS(generate_class_signal(-1, FieldId::FieldI, 0, cfg), std::invalid_argument);
}

TEST_CASE("dataset counts follow the 8 x 2 x n layout") {
  SynthConfig cfg;
  cfg.signal_len = 64;
  CHECK(generate_dataset(cfg).size() == 160);
  cfg.samples_per_class_per_field = 1;
  CHECK(generate_dataset(cfg).size() == 16);
}

TEST_CASE("index pairing yields 10 fused samples per class") {
  SynthConfig cfg;
  cfg.signal_len = 64;
  const auto fused = fuse_generated(generate_dataset(cfg));
  CHECK(fused.size() == 80);
  std::vector<int> counts(8, 0);
  for (const auto& f : fused) {
    ++counts[f.label];
    CHECK(f.features.size() == 128);
  }
  for (int c = 0; c < 8; ++c) CHECK(counts[c] == 10);
}

// Brute-force distance statistics over the whole generated set.
TEST_CASE("between-class distances exceed within-class distances at noise 0.1") {
  SynthConfig cfg;
  cfg.signal_len = 1024;
  cfg.noise_std = 0.1;
  cfg.samples_per_class_per_field = 4;
  const auto raw = generate_dataset(cfg);
  double within = 0.0, between = 0.0;
  long long n_within = 0, n_between = 0;
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
      if (raw[i].field_id != raw[j].field_id) continue;
      const double d = euclid(raw[i].values, raw[j].values);
      if (raw[i].label == raw[j].label) {
        within += d;
        ++n_within;
      } else {
        between += d;
        ++n_between;
      }
    }
  within /= static_cast<double>(n_within);
  between /= static_cast<double>(n_between);
  CHECK(between > within);
}

// Sanity oracle: nearest centroid classifies noiseless data perfectly.
TEST_CASE("nearest-centroid achieves 100% training accuracy at zero noise") {
  SynthConfig cfg;
  cfg.signal_len = 256;
  cfg.noise_std = 0.0;
  cfg.samples_per_class_per_field = 3;
  const auto fused = fuse_generated(generate_dataset(cfg));
  std::vector<std::vector<double>> centroids(8, std::vector<double>(fused[0].features.size(), 0.0));
  std::vector<int> counts(8, 0);
  for (const auto& f : fused) {
    for (std::size_t j = 0; j < f.features.size(); ++j) centroids[f.label][j] += f.features[j];
    ++counts[f.label];
  }
  for (int c = 0; c < 8; ++c)
    for (auto& v : centroids[c]) v /= counts[c];
  for (const auto& f : fused) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 8; ++c) {
      const double d = euclid(f.features, centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    CHECK(best == f.label);
  }
}

}  // TEST_SUITE
