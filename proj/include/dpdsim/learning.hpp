// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "dpdsim/mempoly.hpp"
#include "dpdsim/pa.hpp"
#include "dpdsim/precoding.hpp"
#include "dpdsim/signals.hpp"

namespace dpdsim {

// Per-antenna predistortion functions g_i sharing one target linear gain
// G_0 for the DPD-PA cascade (z_i = f_i(g_i(x_i)) = G_0 x_i).
struct DpdBank {
  std::vector<MemoryPolynomial> predistorters;
  double linear_gain = 1.0;  // G_0

  static DpdBank identity(arma::uword num_antennas, int order, int memory_depth,
                          double linear_gain = 1.0);
  arma::uword num_antennas() const { return predistorters.size(); }
  void validate() const;  // common (K, Q), finite coefficients
};

SignalFrame dpd_apply(const DpdBank& dpd, const SignalFrame& x);

enum class AdaptationKind { Lms, Ls };

// Which observation feeds the postdistorter adaptation in the refinement
// loop: each PA's own output, or the user-side feedback passed back through
// the adaptive precoder.
enum class DpdFeedback { Direct, ThroughChannel };

enum class ErrorAggregation { MaxOverUsers, MeanOverUsers };

struct AdaptReport {
  std::vector<double> round_error_db;  // mean over antennas, per round
};

struct ConventionalTrainConfig {
  AdaptationKind adaptation = AdaptationKind::Lms;
  double lms_mu = 0.0;  // <= 0: auto (0.5 / coefficient count)
  int lms_epochs_per_round = 1;
  int max_rounds = 10;
  double stall_tol_db = 0.1;  // stop when a round improves less than this
};

// Conventional per-PA indirect learning (one postdistorter per antenna,
// adapted independently from that PA's own input/output pair, then copied
// into the predistorter slot). Deliberately unaware of the channel, the
// precoder and the coupling between paths.
DpdBank train_conventional(const PaBank& bank, int order, int memory_depth,
                           const SignalFrame& training_frame, double linear_gain,
                           const ConventionalTrainConfig& cfg,
                           AdaptReport* report = nullptr);

struct RefinementConfig {
  AdaptationKind dpd_adaptation = AdaptationKind::Lms;
  double dpd_mu = 0.0;  // <= 0: auto
  int dpd_epochs_per_iteration = 1;
  double precoder_mu = 0.25;  // scaled by block input power inside the loop
  int precoder_block = 1024;
  bool refresh_between_updates = true;
  DpdFeedback feedback = DpdFeedback::Direct;
  ErrorAggregation aggregation = ErrorAggregation::MaxOverUsers;
};

// Iteration-m state of the successive refinement loop.
struct TrainingState {
  DpdBank dpd;               // G
  PrecodingMatrix precoder;  // P
  long iteration = 0;        // m
  std::vector<double> error_history;  // composite error per iteration, dB
  bool converged = false;
  double threshold_db = -45.0;  // epsilon
  long max_iterations = 0;
};

// Successive refinement: alternately adapt the DPD bank (indirect learning
// on the feedback observation) and the precoder (LMS mapping the received
// feedback onto the forward precoder output), starting from P = zf_pinv(H)
// and identity predistorters, until the composite per-user error drops
// below epsilon or max_iter is reached.
TrainingState successive_refinement(const ChannelMatrix& channel, const PaBank& bank,
                                    const SignalFrame& symbols, int order,
                                    int memory_depth, double epsilon_db,
                                    long max_iter, double linear_gain,
                                    const RefinementConfig& cfg);

}  // namespace dpdsim
