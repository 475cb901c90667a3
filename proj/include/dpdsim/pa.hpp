// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <armadillo>
#include <cstdint>
#include <vector>

#include "dpdsim/signals.hpp"

namespace dpdsim {

// Saleh static nonlinearity: A(r) = alpha_a r / (1 + beta_a r^2),
// Phi(r) = alpha_phi r^2 / (1 + beta_phi r^2).
struct SalehParams {
  double alpha_a = 2.0;
  double beta_a = 2.2;
  double alpha_phi = 2.0;
  double beta_phi = 1.0;

  void validate() const;  // betas must be strictly positive
  // input amplitude at which the AM/AM curve peaks
  double saturation_input() const { return 1.0 / std::sqrt(beta_a); }
  // peak output amplitude alpha_a / (2 sqrt(beta_a))
  double saturation_output() const { return alpha_a / (2.0 * std::sqrt(beta_a)); }
};

double saleh_amam(double r, const SalehParams& p);
double saleh_ampm(double r, const SalehParams& p);

// Hammerstein chain: static Saleh stage followed by a short FIR.
// Taps are normalized to unit DC gain (sum = 1) at construction.
struct PaModel {
  SalehParams saleh;
  arma::cx_vec memory_taps;

  static PaModel make(const SalehParams& saleh, const arma::cx_vec& raw_taps);
  static PaModel make_default(const SalehParams& saleh);  // taps [1, 0.2, 0.1] pre-normalization
};

arma::cx_vec pa_apply(const arma::cx_vec& x, const PaModel& pa);

enum class CrosstalkLocation { PreAmplifier, PostAmplifier };

// coupling at/below this is treated as off (exact identity matrix)
inline constexpr double kCrosstalkOffDb = -290.0;

struct PaBank {
  std::vector<PaModel> models;       // length N_t
  double crosstalk_coupling_db = -20.0;
  arma::cx_mat crosstalk_matrix;     // N_t x N_t, unit diagonal, tridiagonal
  CrosstalkLocation crosstalk_location = CrosstalkLocation::PreAmplifier;
  double jitter_fraction = 0.0;

  arma::uword num_antennas() const { return models.size(); }

  // jitter_fraction in [0, 0.2]: uniform +-fraction scatter on the Saleh
  // parameters per antenna, drawn from `seed`.
  static PaBank make(arma::uword num_antennas, const PaModel& base,
                     double crosstalk_db, double jitter_fraction,
                     std::uint64_t seed,
                     CrosstalkLocation location = CrosstalkLocation::PreAmplifier);
};

// Per-sample tridiagonal mix: out(:,n) = crosstalk_matrix * in(:,n).
SignalFrame crosstalk_apply(const SignalFrame& x, const PaBank& bank);

// Full bank pass. `emitted` is the signal leaving the array (what the
// channel sees); `pa_output` is each PA's own output (the per-antenna
// feedback observation). They are the same frame for pre-PA coupling.
struct BankSignals {
  SignalFrame emitted;
  SignalFrame pa_output;
};

BankSignals bank_forward_signals(const SignalFrame& x, const PaBank& bank);
SignalFrame bank_forward(const SignalFrame& x, const PaBank& bank);

}  // namespace dpdsim
