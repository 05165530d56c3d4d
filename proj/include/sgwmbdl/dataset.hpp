#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <utility>

#include "sgwmbdl/common.hpp"

namespace sgwmbdl {

enum class FieldId { FieldI = 0, FieldII = 1 };

// One raw signal from one physical field.
struct RawSample {
  int label = 0;
  FieldId field_id = FieldId::FieldI;
  std::vector<double> values;
};

// Labeled feature vector after two-field fusion; unit of all pipeline stages.
struct FusedSample {
  int label = 0;
  std::vector<double> features;
};

struct Dataset {
  std::vector<FusedSample> samples;
  int num_classes = 0;
  int feature_dim = 0;
};

inline Dataset make_dataset(std::vector<FusedSample> samples, int num_classes) {
  if (samples.empty()) throw std::invalid_argument("make_dataset: empty sample list");
  Dataset d;
  d.feature_dim = static_cast<int>(samples.front().features.size());
  d.num_classes = num_classes;
  for (const auto& s : samples) {
    if (static_cast<int>(s.features.size()) != d.feature_dim)
      throw std::invalid_argument("make_dataset: inconsistent feature dimensions");
    if (s.label < 0 || s.label >= num_classes)
      throw std::invalid_argument("make_dataset: label " + std::to_string(s.label) +
                                  " outside [0," + std::to_string(num_classes) + ")");
  }
  d.samples = std::move(samples);
  return d;
}

inline FusedSample fuse_fields(const RawSample& a, const RawSample& b) {
  if (a.field_id != FieldId::FieldI || b.field_id != FieldId::FieldII)
    throw std::invalid_argument("fuse_fields: expects (FieldI, FieldII) in that order");
  if (a.label != b.label)
    throw std::invalid_argument("fuse_fields: label mismatch (" + std::to_string(a.label) +
                                " vs " + std::to_string(b.label) + ")");
  if (a.values.empty() || b.values.empty())
    throw std::invalid_argument("fuse_fields: empty value vector");
  if (!all_finite(a.values) || !all_finite(b.values))
    throw std::invalid_argument("fuse_fields: non-finite values");
  FusedSample f;
  f.label = a.label;
  f.features = a.values;
  f.features.insert(f.features.end(), b.values.begin(), b.values.end());
  return f;
}

inline std::vector<double> interval_sample(const std::vector<double>& features, int stride) {
  if (stride < 1) throw std::invalid_argument("interval_sample: stride must be >= 1");
  std::vector<double> out;
  out.reserve((features.size() + stride - 1) / stride);
  for (std::size_t i = 0; i < features.size(); i += static_cast<std::size_t>(stride))
    out.push_back(features[i]);
  return out;
}

// Per-column min-max scaling to [0,1]; constant columns map to 0.
inline Dataset normalize_minmax(const Dataset& data) {
  if (data.samples.empty()) throw std::invalid_argument("normalize_minmax: empty dataset");
  const int dim = data.feature_dim;
  std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
  std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
  for (const auto& s : data.samples) {
    if (!all_finite(s.features)) throw std::invalid_argument("normalize_minmax: non-finite input");
    for (int j = 0; j < dim; ++j) {
      lo[j] = std::min(lo[j], s.features[j]);
      hi[j] = std::max(hi[j], s.features[j]);
    }
  }
  Dataset out = data;
  for (auto& s : out.samples)
    for (int j = 0; j < dim; ++j) {
      const double range = hi[j] - lo[j];
      s.features[j] = range > 0.0 ? (s.features[j] - lo[j]) / range : 0.0;
    }
  return out;
}

// Stratified split; per-class train count = round(train_fraction * class size).
inline std::pair<Dataset, Dataset> split_train_test(const Dataset& data, double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("split_train_test: train_fraction must lie in (0,1)");
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.samples.size(); ++i)
    by_class[data.samples[i].label].push_back(i);

  std::vector<std::size_t> train_idx, test_idx;
  for (int c = 0; c < data.num_classes; ++c) {
    auto idx = by_class[c];
    if (!idx.empty() && idx.size() < 2)
      throw std::invalid_argument("split_train_test: class " + std::to_string(c) +
                                  " has fewer than 2 samples");
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::lround(train_fraction * static_cast<double>(idx.size())));
    std::sort(idx.begin(), idx.begin() + n_train);
    std::sort(idx.begin() + n_train, idx.end());
    train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + n_train);
    test_idx.insert(test_idx.end(), idx.begin() + n_train, idx.end());
  }

  auto pick = [&](const std::vector<std::size_t>& which) {
    std::vector<FusedSample> s;
    s.reserve(which.size());
    for (auto i : which) s.push_back(data.samples[i]);
    return make_dataset(std::move(s), data.num_classes);
  };
  return {pick(train_idx), pick(test_idx)};
}

// Contiguous folds in index order, no shuffling.
inline std::vector<std::pair<Dataset, Dataset>> kfold(const Dataset& data, int k) {
  if (k < 2) throw std::invalid_argument("kfold: k must be >= 2");
  std::vector<int> counts(data.num_classes, 0);
  for (const auto& s : data.samples) ++counts[s.label];
  for (int c = 0; c < data.num_classes; ++c)
    if (counts[c] > 0 && counts[c] < k)
      throw std::invalid_argument("kfold: class " + std::to_string(c) + " has " +
                                  std::to_string(counts[c]) + " samples, fewer than k");
  const std::size_t n = data.samples.size();
  std::vector<std::pair<Dataset, Dataset>> out;
  for (int f = 0; f < k; ++f) {
    const std::size_t begin = n * f / k;
    const std::size_t end = n * (f + 1) / k;
    std::vector<FusedSample> train, val;
    for (std::size_t i = 0; i < n; ++i)
      (i >= begin && i < end ? val : train).push_back(data.samples[i]);
    out.emplace_back(make_dataset(std::move(train), data.num_classes),
                     make_dataset(std::move(val), data.num_classes));
  }
  return out;
}

// CSV: header `label,field_id,f0,f1,...`, one raw sample per row, field_id as 0/1.
inline void write_csv(const std::vector<RawSample>& samples, const std::string& path) {
  if (samples.empty()) throw std::invalid_argument("write_csv: nothing to write");
  const std::size_t dim = samples.front().values.size();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << "label,field_id";
  for (std::size_t j = 0; j < dim; ++j) out << ",f" << j;
  out << "\n";
  for (const auto& s : samples) {
    if (s.values.size() != dim)
      throw std::invalid_argument("write_csv: inconsistent value lengths");
    out << s.label << ',' << static_cast<int>(s.field_id);
    for (double v : s.values) out << ',' << format_double(v);
    out << "\n";
  }
}

inline std::vector<RawSample> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw std::invalid_argument("read_csv: no header in " + path);
  std::size_t ncols = 1 + std::count(line.begin(), line.end(), ',');
  if (ncols < 3 || line.rfind("label,field_id,", 0) != 0)
    throw std::invalid_argument("read_csv: bad header in " + path);

  std::vector<RawSample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    RawSample s;
    std::size_t col = 0, pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      const std::string_view tok(line.data() + pos,
                                 (comma == std::string::npos ? line.size() : comma) - pos);
      const auto fail = [&](const char* what) {
        throw std::invalid_argument("read_csv: " + std::string(what) + " at line " +
                                    std::to_string(line_no) + " column " + std::to_string(col));
      };
      if (col == 0) {
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), s.label);
        if (ec != std::errc() || p != tok.data() + tok.size()) fail("bad label");
      } else if (col == 1) {
        int f = -1;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), f);
        if (ec != std::errc() || p != tok.data() + tok.size() || (f != 0 && f != 1)) fail("bad field_id");
        s.field_id = static_cast<FieldId>(f);
      } else {
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size()) fail("non-numeric feature");
        s.values.push_back(v);
      }
      ++col;
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (col != ncols)
      throw std::invalid_argument("read_csv: expected " + std::to_string(ncols) +
                                  " columns, got " + std::to_string(col) + " at line " +
                                  std::to_string(line_no));
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace sgwmbdl
