// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <armadillo>
#include <complex>
#include <cstdint>

namespace dpdsim {

inline constexpr double kDbFloor = -300.0;  // clamp floor for all dB metrics

enum class Constellation { Qpsk, Qam16, Qam64 };

struct WaveformConfig {
  double sample_rate_hz = 40e6;
  double occupied_bandwidth_hz = 10e6;
  int oversampling_factor = 4;
  int num_symbols = 2048;
  Constellation constellation = Constellation::Qam16;
  std::uint64_t seed = 1;
  double carrier_frequency_hz = 3.5e9;  // metadata only, never used in DSP

  void validate() const;  // throws ConfigError
};

// Complex-baseband multichannel buffer: one row per logical path
// (users for s, antennas for x/y/z).
struct SignalFrame {
  arma::cx_mat streams;  // rows = paths, cols = samples
  double sample_rate_hz = 0.0;

  arma::uword num_paths() const { return streams.n_rows; }
  arma::uword length() const { return streams.n_cols; }
  bool is_finite() const { return streams.is_finite(); }
};

struct FreqInterval {
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

// Two-sided averaged periodogram. power_db is normalized so the mean over
// the chosen occupied band is 0 dB; ref_db restores the absolute density
// scale (raw dB = power_db + ref_db).
struct PsdEstimate {
  arma::vec freqs_hz;
  arma::vec power_db;
  int segment_length = 0;
  double overlap_fraction = 0.0;
  double ref_db = 0.0;
};

// Band-limited multicarrier frame: num_symbols QAM symbols per user mapped
// onto the occupied bins of one frame-length DFT grid. Unit average power
// per row, deterministic per seed.
SignalFrame gen_multicarrier(const WaveformConfig& cfg, int num_users);

// Gain-aligned normalized mean square error in dB. The reference is scaled
// by the least-squares complex scalar before comparison, so any common
// linear gain between test and reference is ignored. Clamped at kDbFloor.
double nmse_db(const arma::cx_vec& test, const arma::cx_vec& reference);

// Welch PSD, Hann window. inband selects the band whose mean is pinned to
// 0 dB; default (empty interval) pins the mean over the whole span.
PsdEstimate psd_welch(const arma::cx_vec& x, double sample_rate_hz,
                      int segment_length, double overlap_fraction,
                      FreqInterval inband = {0.0, 0.0});

// Mean linear power over `adjacent` relative to mean linear power over
// `inband`, in dB (the Fig.-2-style regrowth scalar). Clamped at kDbFloor.
double oob_ratio_db(const PsdEstimate& psd, FreqInterval inband,
                    FreqInterval adjacent);

double peak_to_average_db(const arma::cx_vec& x);

}  // namespace dpdsim
