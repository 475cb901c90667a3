// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpdsim/learning.hpp"

namespace dpdsim {

enum class SchemeKind { NoDpd, Conventional, Proposed };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::NoDpd;
  int order = 3;                      // K (ignored for no_dpd)
  std::optional<int> memory_depth;    // Q override; defaults to the shared one

  std::string tag() const;  // e.g. "no_dpd", "conventional_k9", "proposed_k3"
};

struct Seeds {
  std::uint64_t channel = 7;
  std::uint64_t training = 42;
  std::uint64_t evaluation = 43;
};

struct ScenarioConfig {
  int schema_version = 1;

  int num_antennas = 100;  // N_t
  int num_users = 10;      // M_r

  WaveformConfig waveform;

  SalehParams saleh;
  std::vector<std::complex<double>> pa_memory_taps = {{1.0, 0.0}, {0.2, 0.0}, {0.1, 0.0}};
  double crosstalk_db = -20.0;
  CrosstalkLocation crosstalk_location = CrosstalkLocation::PreAmplifier;
  double jitter_fraction = 0.05;
  // frames are scaled so peak |x| hits this fraction of the Saleh
  // saturation input 1/sqrt(beta_a)
  double drive_fraction = 0.9;

  double dpd_linear_gain = 1.0;  // G_0
  int memory_depth = 5;          // shared Q

  AdaptationKind adaptation = AdaptationKind::Lms;
  double lms_mu = 0.0;  // <= 0: auto
  int dpd_epochs = 1;
  int conventional_rounds = 10;
  double epsilon_db = -45.0;
  long max_iterations = 60;
  double precoder_mu = 0.25;
  int precoder_block = 1024;
  DpdFeedback feedback = DpdFeedback::Direct;
  bool refresh_between_updates = true;
  ErrorAggregation aggregation = ErrorAggregation::MaxOverUsers;

  Seeds seeds;

  int psd_segment_length = 2048;
  double psd_overlap = 0.5;
  int designated_antenna = -1;  // -1: middle antenna
  double noise_power = 0.0;     // receiver noise during evaluation

  std::vector<SchemeSpec> schemes;
  std::string output_dir = "out";

  void validate() const;  // throws ConfigError with the offending key path

  // The full reference scenario (Saleh defaults, 100x10, -20 dB crosstalk,
  // Q=5) with the standard scheme list.
  static ScenarioConfig reference();
};

ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& cfg);

// Everything derived from the seeds that is shared by all schemes of one
// scenario: channel, ZF precoder, PA bank, drive-scaled frames.
struct ScenarioContext {
  ScenarioConfig cfg;
  ChannelMatrix channel;
  PrecodingMatrix zf_precoder;  // P_0
  PaBank bank;
  SignalFrame train_symbols;
  SignalFrame eval_symbols;
};

ScenarioContext make_context(const ScenarioConfig& cfg);

struct ScenarioMetrics {
  arma::vec antenna_nmse_db;
  arma::vec user_nmse_db;
  double antenna_nmse_mean_db = 0.0;
  double antenna_nmse_max_db = 0.0;
  double user_nmse_mean_db = 0.0;
  double user_nmse_max_db = 0.0;
  double oob_ratio_db = 0.0;
  FlopReport flops;
  long iterations_used = 0;
  bool converged = true;
};

struct SchemeResult {
  SchemeSpec spec;
  ScenarioMetrics metrics;
  PsdEstimate psd;  // designated antenna PA output
  std::vector<double> error_history;
  DpdBank dpd;
  PrecodingMatrix precoder;
};

SchemeResult evaluate_scheme(const ScenarioContext& ctx, const SchemeSpec& spec);
std::vector<SchemeResult> evaluate(const ScenarioConfig& cfg);

// Mean of the two one-sided adjacent-channel ratios, with the adjacent
// bands starting one bin beyond the occupied-band edge.
double adjacent_band_ratio_db(const PsdEstimate& psd, double occupied_bandwidth_hz);

}  // namespace dpdsim
