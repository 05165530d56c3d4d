#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "sgwmbdl/dataset.hpp"

using namespace sgwmbdl;

namespace {

Dataset toy_dataset(int per_class, int classes, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<FusedSample> s;
  for (int c = 0; c < classes; ++c)
    for (int i = 0; i < per_class; ++i) {
      FusedSample f;
      f.label = c;
      for (int d = 0; d < dim; ++d) f.features.push_back(u(rng));
      s.push_back(std::move(f));
    }
  return make_dataset(std::move(s), classes);
}

std::multiset<std::vector<double>> feature_multiset(const Dataset& d) {
  std::multiset<std::vector<double>> out;
  for (const auto& s : d.samples) out.insert(s.features);
  return out;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("fuse_fields concatenates in field order and keeps the label") {
  RawSample a{3, FieldId::FieldI, {1, 2}};
  RawSample b{3, FieldId::FieldII, {3}};
  const auto f = fuse_fields(a, b);
  CHECK(f.label == 3);
  CHECK(f.features == std::vector<double>{1, 2, 3});

  RawSample a5{0, FieldId::FieldI, {1, 2, 3}};
  RawSample b5{0, FieldId::FieldII, {4, 5}};
  CHECK(fuse_fields(a5, b5).features.size() == 5);
}

TEST_CASE("fuse_fields rejects label mismatch and empty vectors") {
  RawSample a{0, FieldId::FieldI, {1}};
  RawSample b{1, FieldId::FieldII, {2}};
  CHECK_THROWS_WITH_AS(fuse_fields(a, b), doctest::Contains("label mismatch"),
                       std::invalid_argument);
  RawSample empty{0, FieldId::FieldII, {}};
  RawSample a0{0, FieldId::FieldI, {1}};
  CHECK_THROWS_AS(fuse_fields(a0, empty), std::invalid_argument);
}

TEST_CASE("interval_sample index arithmetic") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(interval_sample(v, 2) == std::vector<double>{1, 3, 5, 7, 9});
  CHECK(interval_sample(v, 1) == v);
  const std::vector<double> v7{0, 1, 2, 3, 4, 5, 6};
  CHECK(interval_sample(v7, 3) == std::vector<double>{0, 3, 6});
  CHECK_THROWS_AS(interval_sample(v, 0), std::invalid_argument);
}

TEST_CASE("normalize_minmax maps columns to [0,1], constants to 0") {
  std::vector<FusedSample> s = {{0, {0, 4, 0}}, {0, {5, 4, 0.5}}, {1, {10, 4, 1}}};
  const auto d = normalize_minmax(make_dataset(s, 2));
  CHECK(d.samples[0].features == std::vector<double>{0, 0, 0});
  CHECK(d.samples[1].features == std::vector<double>{0.5, 0, 0.5});
  CHECK(d.samples[2].features == std::vector<double>{1, 0, 1});
}

TEST_CASE("normalize_minmax is idempotent") {
  const auto d = toy_dataset(5, 3, 7, 1);
  const auto once = normalize_minmax(d);
  const auto twice = normalize_minmax(once);
  for (std::size_t i = 0; i < once.samples.size(); ++i)
    for (int j = 0; j < once.feature_dim; ++j)
      CHECK(once.samples[i].features[j] == doctest::Approx(twice.samples[i].features[j])
                                               .epsilon(1e-15));
}

TEST_CASE("split_train_test stratifies with rounded per-class counts") {
  const auto d = toy_dataset(20, 8, 4, 2);  // 160 samples
  const auto [train, test] = split_train_test(d, 0.2, 7);
  CHECK(train.samples.size() == 32);
  CHECK(test.samples.size() == 128);
  std::vector<int> counts(8, 0);
  for (const auto& s : train.samples) ++counts[s.label];
  for (int c = 0; c < 8; ++c) CHECK(counts[c] == 4);

  const auto [t5, v5] = split_train_test(toy_dataset(10, 2, 3, 3), 0.5, 1);
  CHECK(t5.samples.size() == 10);
  CHECK(v5.samples.size() == 10);
}

TEST_CASE("split_train_test is a seed-deterministic permutation") {
  const auto d = toy_dataset(10, 4, 5, 4);
  const auto [a_train, a_test] = split_train_test(d, 0.3, 99);
  const auto [b_train, b_test] = split_train_test(d, 0.3, 99);
  CHECK(a_train.samples.size() == b_train.samples.size());
  for (std::size_t i = 0; i < a_train.samples.size(); ++i)
    CHECK(a_train.samples[i].features == b_train.samples[i].features);

  auto combined = feature_multiset(a_train);
  for (const auto& s : a_test.samples) combined.insert(s.features);
  CHECK(combined == feature_multiset(d));
}

TEST_CASE("split rejects undersized classes") {
  std::vector<FusedSample> s = {{0, {1.0}}, {1, {2.0}}, {1, {3.0}}};
  CHECK_THROWS_AS(split_train_test(make_dataset(s, 2), 0.5, 1), std::invalid_argument);
}

TEST_CASE("kfold partitions in index order") {
  auto d = toy_dataset(2, 2, 3, 5);  // 4 samples, labels 0,0,1,1
  const auto folds = kfold(d, 2);
  REQUIRE(folds.size() == 2);
  CHECK(folds[0].second.samples[0].features == d.samples[0].features);
  CHECK(folds[0].second.samples[1].features == d.samples[1].features);
  CHECK(folds[1].second.samples[0].features == d.samples[2].features);
  CHECK(folds[1].second.samples[1].features == d.samples[3].features);
}

TEST_CASE("kfold validation folds are disjoint and cover the dataset") {
  const auto d = toy_dataset(5, 2, 4, 6);  // 10 samples
  const auto folds = kfold(d, 5);
  std::multiset<std::vector<double>> all;
  for (const auto& [train, val] : folds) {
    CHECK(val.samples.size() == 2);
    CHECK(train.samples.size() == 8);
    for (const auto& s : val.samples) all.insert(s.features);
  }
  CHECK(all == feature_multiset(d));
  CHECK_THROWS_AS(kfold(d, 6), std::invalid_argument);  // classes have 5 samples
}

TEST_CASE("csv round trip preserves samples exactly") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<RawSample> samples;
  for (int c = 0; c < 8; ++c)
    for (int f = 0; f < 2; ++f)
      for (int i = 0; i < 10; ++i) {
        RawSample s{c, static_cast<FieldId>(f), {}};
        for (int t = 0; t < 6; ++t) s.values.push_back(g(rng) * 1e3);
        samples.push_back(std::move(s));
      }
  const auto path = std::filesystem::temp_directory_path() / "sgwmbdl_csv_test.csv";
  write_csv(samples, path.string());
  const auto back = read_csv(path.string());
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].label == samples[i].label);
    CHECK(back[i].field_id == samples[i].field_id);
    CHECK(back[i].values == samples[i].values);
  }
  std::filesystem::remove(path);
}

TEST_CASE("csv reader names the offending line") {
  const auto path = std::filesystem::temp_directory_path() / "sgwmbdl_csv_bad.csv";
  {
    std::ofstream os(path);
    os << "label,field_id,f0\n1,0,2.5\n1,0,oops\n";
  }
  CHECK_THROWS_WITH_AS(read_csv(path.string()), doctest::Contains("line 3"),
                       std::invalid_argument);
  {
    std::ofstream os(path);
    os << "";
  }
  CHECK_THROWS_WITH_AS(read_csv(path.string()), doctest::Contains("no header"),
                       std::invalid_argument);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
