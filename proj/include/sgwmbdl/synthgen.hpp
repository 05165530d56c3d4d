#pragma once

#include <numbers>
#include <random>

#include "sgwmbdl/dataset.hpp"

namespace sgwmbdl {

inline constexpr int kNumFaultClasses = 8;

struct SynthConfig {
  int samples_per_class_per_field = 10;
  int signal_len = 4096;
  double noise_std = 0.1;
  std::uint64_t seed = 42;
};

inline void validate(const SynthConfig& cfg) {
  if (cfg.samples_per_class_per_field < 1)
    throw std::invalid_argument("SynthConfig: samples_per_class_per_field must be >= 1");
  if (cfg.signal_len < 64) throw std::invalid_argument("SynthConfig: signal_len must be >= 64");
  if (!(cfg.noise_std >= 0.0)) throw std::invalid_argument("SynthConfig: noise_std must be >= 0");
}

// Deterministic stand-in signal for one angular fault sector.
//
// signal = carrier + field-dependent chirp + damped impulse train + noise.
// The impulse train's phase offset is proportional to the sector center angle
// theta_c = (label + 0.5) * 45 deg, which is the only class-dependent term, so
// classes are separable at noise_std = 0 and overlap as noise grows.
inline RawSample generate_class_signal(int label, FieldId field, int sample_index,
                                       const SynthConfig& cfg) {
  validate(cfg);
  if (label < 0 || label >= kNumFaultClasses)
    throw std::invalid_argument("generate_class_signal: label must lie in [0,7]");
  if (sample_index < 0 || sample_index >= cfg.samples_per_class_per_field)
    throw std::invalid_argument("generate_class_signal: sample_index out of range");

  const int n = cfg.signal_len;
  const double theta_c = (label + 0.5) * 45.0;           // sector center, degrees
  const double period = n / 8.0;                          // impulse train period
  const double offset = period * theta_c / 360.0;
  const double decay = period / 4.0;
  const double burst_omega = 2.0 * std::numbers::pi * 4.0 / period;
  const double chirp_rate = field == FieldId::FieldI ? 24.0 : 48.0;

  std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(label),
                               static_cast<std::uint64_t>(field),
                               static_cast<std::uint64_t>(sample_index)));
  std::normal_distribution<double> gauss(0.0, 1.0);

  RawSample s;
  s.label = label;
  s.field_id = field;
  s.values.resize(n);
  for (int t = 0; t < n; ++t) {
    const double tau = static_cast<double>(t) / n;
    double v = 0.6 * std::sin(2.0 * std::numbers::pi * 4.0 * tau + 0.7);
    v += 0.5 * std::sin(2.0 * std::numbers::pi * (6.0 * tau + 0.5 * chirp_rate * tau * tau));
    for (int j = -1; j * period + offset < n; ++j) {
      const double u = t - (j * period + offset);
      if (u >= 0.0) v += std::exp(-u / decay) * std::cos(burst_omega * u);
    }
    s.values[t] = v + cfg.noise_std * gauss(rng);
  }
  return s;
}

// 8 classes x 2 fields x samples_per_class_per_field, grouped by class then
// field then index. Per-sample RNG streams make the order irrelevant.
inline std::vector<RawSample> generate_dataset(const SynthConfig& cfg) {
  validate(cfg);
  std::vector<RawSample> out;
  out.reserve(static_cast<std::size_t>(kNumFaultClasses) * 2 * cfg.samples_per_class_per_field);
  for (int label = 0; label < kNumFaultClasses; ++label)
    for (FieldId field : {FieldId::FieldI, FieldId::FieldII})
      for (int i = 0; i < cfg.samples_per_class_per_field; ++i)
        out.push_back(generate_class_signal(label, field, i, cfg));
  return out;
}

// Pair the i-th FieldI sample of each class with its i-th FieldII sample.
inline std::vector<FusedSample> fuse_generated(const std::vector<RawSample>& raw) {
  std::vector<std::vector<const RawSample*>> field1(kNumFaultClasses), field2(kNumFaultClasses);
  for (const auto& s : raw) {
    if (s.label < 0 || s.label >= kNumFaultClasses)
      throw std::invalid_argument("fuse_generated: label out of range");
    (s.field_id == FieldId::FieldI ? field1 : field2)[s.label].push_back(&s);
  }
  std::vector<FusedSample> fused;
  for (int c = 0; c < kNumFaultClasses; ++c) {
    if (field1[c].size() != field2[c].size())
      throw std::invalid_argument("fuse_generated: unbalanced fields for class " +
                                  std::to_string(c));
    for (std::size_t i = 0; i < field1[c].size(); ++i)
      fused.push_back(fuse_fields(*field1[c][i], *field2[c][i]));
  }
  return fused;
}

}  // namespace sgwmbdl
