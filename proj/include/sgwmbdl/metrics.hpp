#pragma once

#include <json.hpp>

#include "sgwmbdl/common.hpp"

namespace sgwmbdl {

struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::vector<long long>> counts;  // rows = truth, cols = predicted

  long long total() const {
    long long t = 0;
    for (const auto& row : counts)
      for (long long v : row) t += v;
    return t;
  }
};

struct RunReport {
  double accuracy = 0.0;
  std::vector<double> precision;  // per class, 0/0 -> 0
  std::vector<double> recall;     // per-class accuracy
  ConfusionMatrix confusion;
  std::vector<int> empty_precision_classes;  // classes never predicted
  std::string config_echo;
  std::string variant;
  std::string notes;
  long long seed = 0;
};

inline RunReport evaluate(const std::vector<int>& predictions, const std::vector<int>& truth,
                          int num_classes) {
  if (predictions.size() != truth.size() || predictions.empty())
    throw std::invalid_argument("evaluate: prediction/truth length mismatch");
  RunReport r;
  r.confusion.num_classes = num_classes;
  r.confusion.counts.assign(num_classes, std::vector<long long>(num_classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predictions[i] < 0 ||
        predictions[i] >= num_classes)
      throw std::invalid_argument("evaluate: label outside [0,K)");
    ++r.confusion.counts[truth[i]][predictions[i]];
  }
  long long diag = 0;
  r.precision.assign(num_classes, 0.0);
  r.recall.assign(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    diag += r.confusion.counts[c][c];
    long long col = 0, row = 0;
    for (int k = 0; k < num_classes; ++k) {
      col += r.confusion.counts[k][c];
      row += r.confusion.counts[c][k];
    }
    if (col > 0)
      r.precision[c] = static_cast<double>(r.confusion.counts[c][c]) / col;
    else
      r.empty_precision_classes.push_back(c);
    if (row > 0) r.recall[c] = static_cast<double>(r.confusion.counts[c][c]) / row;
  }
  r.accuracy = static_cast<double>(diag) / static_cast<double>(truth.size());
  return r;
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

struct ReportAggregate {
  MeanStd accuracy;
  std::vector<MeanStd> precision;
  std::vector<MeanStd> recall;
  MeanStd macro_precision;
};

inline MeanStd mean_std(std::span<const double> v) { return {mean(v), sample_std(v)}; }

// Mean and sample standard deviation of every scalar metric over repeats.
inline ReportAggregate aggregate(const std::vector<RunReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  const int k = static_cast<int>(reports.front().precision.size());
  ReportAggregate agg;
  std::vector<double> acc, macro;
  for (const auto& r : reports) {
    if (static_cast<int>(r.precision.size()) != k)
      throw std::invalid_argument("aggregate: inconsistent class counts");
    acc.push_back(r.accuracy);
    macro.push_back(mean(r.precision));
  }
  agg.accuracy = mean_std(acc);
  agg.macro_precision = mean_std(macro);
  for (int c = 0; c < k; ++c) {
    std::vector<double> p, rec;
    for (const auto& r : reports) {
      p.push_back(r.precision[c]);
      rec.push_back(r.recall[c]);
    }
    agg.precision.push_back(mean_std(p));
    agg.recall.push_back(mean_std(rec));
  }
  return agg;
}

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["confusion"] = r.confusion.counts;
  j["empty_precision_classes"] = r.empty_precision_classes;
  j["seed"] = r.seed;
  j["config"] = r.config_echo;
  j["variant"] = r.variant;
  j["notes"] = r.notes;
  return j;
}

inline RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.precision = j.at("precision").get<std::vector<double>>();
  r.recall = j.at("recall").get<std::vector<double>>();
  r.confusion.counts = j.at("confusion").get<std::vector<std::vector<long long>>>();
  r.confusion.num_classes = static_cast<int>(r.confusion.counts.size());
  r.empty_precision_classes = j.at("empty_precision_classes").get<std::vector<int>>();
  r.seed = j.at("seed").get<long long>();
  r.config_echo = j.at("config").get<std::string>();
  r.variant = j.at("variant").get<std::string>();
  r.notes = j.at("notes").get<std::string>();
  return r;
}

inline nlohmann::json aggregate_to_json(const ReportAggregate& a) {
  nlohmann::json j;
  j["accuracy"] = {{"mean", a.accuracy.mean}, {"std", a.accuracy.stddev}};
  j["macro_precision"] = {{"mean", a.macro_precision.mean}, {"std", a.macro_precision.stddev}};
  auto list = [](const std::vector<MeanStd>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : v) out.push_back({{"mean", m.mean}, {"std", m.stddev}});
    return out;
  };
  j["precision"] = list(a.precision);
  j["recall"] = list(a.recall);
  return j;
}

}  // namespace sgwmbdl
