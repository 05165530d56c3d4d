#pragma once

#include <array>
#include <cmath>
#include <span>

#include "sgwmbdl/common.hpp"

namespace sgwmbdl {

enum class WaveletFilter { Haar, Db4 };

enum class LambdaStrategy { Universal, Fixed };

struct ThresholdPlan {
  LambdaStrategy strategy = LambdaStrategy::Universal;
  double fixed_lambda = 0.0;
  double w_hard = 0.5;
  double w_soft = 0.5;
};

inline void validate(const ThresholdPlan& p) {
  if (!(p.w_hard >= 0.0 && p.w_soft >= 0.0 && std::abs(p.w_hard + p.w_soft - 1.0) < 1e-12))
    throw std::invalid_argument("ThresholdPlan: weights must be nonnegative and sum to 1");
  if (p.strategy == LambdaStrategy::Fixed && !(p.fixed_lambda >= 0.0))
    throw std::invalid_argument("ThresholdPlan: fixed lambda must be >= 0");
}

// Multilevel coefficient pyramid. details[0] is the coarsest detail band,
// details.back() the finest.
struct WaveletCoeffs {
  std::vector<double> approx;
  std::vector<std::vector<double>> details;
  int levels = 0;
  WaveletFilter filter_id = WaveletFilter::Db4;
  int original_len = 0;
};

namespace wavelet_detail {

// Orthonormal scaling coefficients, sum = sqrt(2).
inline std::span<const double> scaling_coeffs(WaveletFilter f) {
  static const std::array<double, 2> haar = {0.7071067811865476, 0.7071067811865476};
  static const std::array<double, 8> db4 = {
      0.23037781330885523,  0.7148465705525415,   0.6308807679295904,
      -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
      0.032883011666982945, -0.010597401784997278};
  return f == WaveletFilter::Haar ? std::span<const double>(haar) : std::span<const double>(db4);
}

struct FilterBank {
  std::vector<double> dec_lo, dec_hi, rec_lo, rec_hi;
  int len = 0;
};

inline FilterBank filter_bank(WaveletFilter f) {
  const auto h = scaling_coeffs(f);
  const int L = static_cast<int>(h.size());
  FilterBank fb;
  fb.len = L;
  fb.rec_lo.assign(h.begin(), h.end());
  fb.rec_hi.resize(L);
  for (int k = 0; k < L; ++k) fb.rec_hi[k] = (k % 2 ? -1.0 : 1.0) * h[L - 1 - k];
  fb.dec_lo.assign(fb.rec_lo.rbegin(), fb.rec_lo.rend());
  fb.dec_hi.assign(fb.rec_hi.rbegin(), fb.rec_hi.rend());
  return fb;
}

inline int coeff_len(int n, int L) { return (n + L - 1) / 2; }

// Half-sample symmetric extension by L-1 samples on both sides.
inline std::vector<double> sym_extend(std::span<const double> x, int pad) {
  const int n = static_cast<int>(x.size());
  std::vector<double> ext(n + 2 * pad);
  for (int i = 0; i < pad; ++i) ext[i] = x[pad - 1 - i];
  for (int i = 0; i < n; ++i) ext[pad + i] = x[i];
  for (int i = 0; i < pad; ++i) ext[pad + n + i] = x[n - 1 - i];
  return ext;
}

// One analysis step: convolve the extended signal with both decomposition
// filters and keep the even phase starting at index L.
inline void analysis_step(std::span<const double> x, const FilterBank& fb,
                          std::vector<double>& approx, std::vector<double>& detail) {
  const int n = static_cast<int>(x.size());
  const int L = fb.len;
  const auto ext = sym_extend(x, L - 1);
  const int c = coeff_len(n, L);
  approx.assign(c, 0.0);
  detail.assign(c, 0.0);
  for (int i = 0; i < c; ++i) {
    double lo = 0.0, hi = 0.0;
    const int base = L + 2 * i;
    for (int j = 0; j < L; ++j) {
      const double v = ext[base - j];
      lo += fb.dec_lo[j] * v;
      hi += fb.dec_hi[j] * v;
    }
    approx[i] = lo;
    detail[i] = hi;
  }
}

// One synthesis step: upsample, convolve with reconstruction filters, crop
// L-2 leading samples, and truncate to the target length.
inline std::vector<double> synthesis_step(std::span<const double> approx,
                                          std::span<const double> detail, const FilterBank& fb,
                                          int n_out) {
  const int c = static_cast<int>(approx.size());
  const int L = fb.len;
  std::vector<double> full(2 * c - 1 + L - 1, 0.0);
  for (int k = 0; k < c; ++k)
    for (int j = 0; j < L; ++j)
      full[2 * k + j] += fb.rec_lo[j] * approx[k] + fb.rec_hi[j] * detail[k];
  if (n_out > static_cast<int>(full.size()) - (L - 2))
    throw std::invalid_argument("idwt: inconsistent coefficient structure");
  return {full.begin() + (L - 2), full.begin() + (L - 2) + n_out};
}

// Approximation lengths at each level, index 0 = original signal.
inline std::vector<int> level_lengths(int original_len, int levels, int L) {
  std::vector<int> lens{original_len};
  for (int i = 0; i < levels; ++i) lens.push_back(coeff_len(lens.back(), L));
  return lens;
}

inline void check_structure(const WaveletCoeffs& c) {
  const auto fb_len = filter_bank(c.filter_id).len;
  if (c.levels < 1 || static_cast<int>(c.details.size()) != c.levels)
    throw std::invalid_argument("WaveletCoeffs: levels does not match detail count");
  const auto lens = level_lengths(c.original_len, c.levels, fb_len);
  if (static_cast<int>(c.approx.size()) != lens[c.levels])
    throw std::invalid_argument("WaveletCoeffs: approx length inconsistent with original_len");
  for (int lv = 0; lv < c.levels; ++lv) {
    // details[0] is the coarsest band, produced at analysis level `levels`.
    const int expect = lens[c.levels - lv];
    if (static_cast<int>(c.details[lv].size()) != expect)
      throw std::invalid_argument("WaveletCoeffs: detail band " + std::to_string(lv) +
                                  " has wrong length");
  }
}

}  // namespace wavelet_detail

inline WaveletCoeffs dwt(std::span<const double> signal, WaveletFilter filter, int levels) {
  using namespace wavelet_detail;
  const auto fb = filter_bank(filter);
  if (levels < 1) throw std::invalid_argument("dwt: levels must be >= 1");
  if (!all_finite(signal)) throw std::invalid_argument("dwt: non-finite input");
  WaveletCoeffs out;
  out.levels = levels;
  out.filter_id = filter;
  out.original_len = static_cast<int>(signal.size());
  out.details.resize(levels);
  std::vector<double> cur(signal.begin(), signal.end());
  for (int lv = 0; lv < levels; ++lv) {
    if (static_cast<int>(cur.size()) < fb.len)
      throw std::invalid_argument("dwt: signal too short for " + std::to_string(levels) +
                                  " levels");
    std::vector<double> a, d;
    analysis_step(cur, fb, a, d);
    out.details[levels - 1 - lv] = std::move(d);
    cur = std::move(a);
  }
  out.approx = std::move(cur);
  return out;
}

inline std::vector<double> idwt(const WaveletCoeffs& coeffs) {
  using namespace wavelet_detail;
  check_structure(coeffs);
  const auto fb = filter_bank(coeffs.filter_id);
  const auto lens = level_lengths(coeffs.original_len, coeffs.levels, fb.len);
  std::vector<double> cur = coeffs.approx;
  for (int lv = 0; lv < coeffs.levels; ++lv)
    cur = synthesis_step(cur, coeffs.details[lv], fb, lens[coeffs.levels - 1 - lv]);
  return cur;
}

// Soft rule: sgn(w) * (|w| - lambda) above the threshold, 0 below.
// Applies to detail bands only; the approximation passes through.
inline WaveletCoeffs soft_threshold(WaveletCoeffs coeffs, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("soft_threshold: lambda must be >= 0");
  for (auto& band : coeffs.details)
    for (auto& w : band) w = std::abs(w) >= lambda ? (w > 0 ? w - lambda : w + lambda) : 0.0;
  return coeffs;
}

// Hard rule: keep w above the threshold, 0 below.
inline WaveletCoeffs hard_threshold(WaveletCoeffs coeffs, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("hard_threshold: lambda must be >= 0");
  for (auto& band : coeffs.details)
    for (auto& w : band) w = std::abs(w) >= lambda ? w : 0.0;
  return coeffs;
}

// C = w_hard * C_h + w_soft * C_s, elementwise over approx and all details.
inline WaveletCoeffs merge_coefficients(const WaveletCoeffs& c_hard, const WaveletCoeffs& c_soft,
                                        const ThresholdPlan& plan) {
  validate(plan);
  wavelet_detail::check_structure(c_hard);
  if (c_hard.levels != c_soft.levels || c_hard.original_len != c_soft.original_len ||
      c_hard.filter_id != c_soft.filter_id)
    throw std::invalid_argument("merge_coefficients: structure mismatch");
  WaveletCoeffs out = c_hard;
  for (std::size_t i = 0; i < out.approx.size(); ++i)
    out.approx[i] = plan.w_hard * c_hard.approx[i] + plan.w_soft * c_soft.approx[i];
  for (int lv = 0; lv < out.levels; ++lv) {
    if (c_soft.details[lv].size() != c_hard.details[lv].size())
      throw std::invalid_argument("merge_coefficients: structure mismatch");
    for (std::size_t i = 0; i < out.details[lv].size(); ++i)
      out.details[lv][i] =
          plan.w_hard * c_hard.details[lv][i] + plan.w_soft * c_soft.details[lv][i];
  }
  return out;
}

// Universal threshold sigma * sqrt(2 ln N) with sigma estimated from the
// finest detail band as median(|d|) / 0.6745.
inline double estimate_lambda(const WaveletCoeffs& coeffs) {
  if (coeffs.details.empty() || coeffs.details.back().empty())
    throw std::invalid_argument("estimate_lambda: empty detail bands");
  std::vector<double> mags(coeffs.details.back().size());
  for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::abs(coeffs.details.back()[i]);
  const double sigma = median(std::move(mags)) / 0.6745;
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(coeffs.original_len)));
}

inline double resolve_lambda(const WaveletCoeffs& coeffs, const ThresholdPlan& plan) {
  return plan.strategy == LambdaStrategy::Fixed ? plan.fixed_lambda : estimate_lambda(coeffs);
}

// Merged soft/hard denoising: threshold both ways, blend per plan, reconstruct.
inline std::vector<double> denoise(std::span<const double> signal, WaveletFilter filter,
                                   int levels, const ThresholdPlan& plan) {
  validate(plan);
  const WaveletCoeffs coeffs = dwt(signal, filter, levels);
  const double lambda = resolve_lambda(coeffs, plan);
  return idwt(merge_coefficients(hard_threshold(coeffs, lambda),
                                 soft_threshold(coeffs, lambda), plan));
}

}  // namespace sgwmbdl
