// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <armadillo>
#include <cstdint>

#include "dpdsim/signals.hpp"

namespace dpdsim {

struct ChannelMatrix {
  arma::cx_mat h;  // M_r x N_t
  arma::uword num_users() const { return h.n_rows; }
  arma::uword num_antennas() const { return h.n_cols; }
};

struct PrecodingMatrix {
  arma::cx_mat p;  // N_t x M_r
};

// i.i.d. CN(0,1) entries, full row rank verified, deterministic per seed.
ChannelMatrix gen_channel(arma::uword num_users, arma::uword num_antennas,
                          std::uint64_t seed);

// Minimum-Frobenius-norm right inverse P = H^H (H H^H)^{-1}; throws
// ConditioningError if cond(H H^H) > 1e12.
PrecodingMatrix zf_pinv(const ChannelMatrix& channel);

// x = P s, per sample.
SignalFrame precode(const PrecodingMatrix& precoder, const SignalFrame& s);

// r = H z plus complex AWGN of per-entry power noise_power (0 = exact
// product). The seed is only consumed when noise_power > 0.
SignalFrame apply_channel(const ChannelMatrix& channel, const SignalFrame& z,
                          double noise_power, std::uint64_t noise_seed = 0);

// Orthogonal projector onto null(H) (I - H^H (H H^H)^{-1} H); test utility
// for the precoder-family degrees-of-freedom witness.
arma::cx_mat null_space_projector(const ChannelMatrix& channel);

struct PrecoderLmsState {
  arma::cx_mat p;  // N_t x M_r
  double step_size = 0.0;
  long iteration = 0;
  double last_error_norm = 0.0;
};

// Memoryless spatial LMS: every row of P is an M_r-tap filter mapping the
// feedback streams r to that antenna's forward signal x_i.
//   E = X - P R;  P <- P + mu E R^H
PrecoderLmsState precoder_lms_step(const PrecoderLmsState& state,
                                   const arma::cx_mat& r_block,
                                   const arma::cx_mat& x_block);

}  // namespace dpdsim
