// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/precoding.hpp"

#include <stdexcept>

#include "dpdsim/errors.hpp"
#include "dpdsim/rng.hpp"

namespace dpdsim {

ChannelMatrix gen_channel(arma::uword num_users, arma::uword num_antennas,
                          std::uint64_t seed) {
  if (num_users < 1 || num_users >= num_antennas)
    throw ConfigError("gen_channel: need 1 <= M_r < N_t");

  for (int attempt = 0; attempt < 4; ++attempt) {
    ChannelMatrix ch;
    ch.h.set_size(num_users, num_antennas);
    for (arma::uword k = 0; k < num_users; ++k) {
      Rng rng(mix_seed(seed, 0xC4A21ULL + k + static_cast<std::uint64_t>(attempt) * 1000003ULL));
      for (arma::uword i = 0; i < num_antennas; ++i)
        ch.h(k, i) = rng.standard_complex_normal();
    }
    if (arma::rank(ch.h) == num_users) return ch;
  }
  throw std::runtime_error("gen_channel: failed to draw a full-row-rank channel");
}

PrecodingMatrix zf_pinv(const ChannelMatrix& channel) {
  const arma::cx_mat gram = channel.h * channel.h.t();  // M_r x M_r, Hermitian
  const double condition = arma::cond(gram);
  if (!(condition < 1e12))
    throw ConditioningError("zf_pinv: H H^H too ill-conditioned", condition);

  PrecodingMatrix pm;
  pm.p = channel.h.t() * arma::inv_sympd(gram);

  const arma::uword m = channel.num_users();
  const double defect =
      arma::norm(channel.h * pm.p - arma::cx_mat(arma::eye<arma::mat>(m, m), arma::mat(m, m, arma::fill::zeros)), "fro");
  if (!(defect <= 1e-8 * static_cast<double>(m)))
    throw ConditioningError("zf_pinv: ZF constraint residual too large", condition);
  return pm;
}

SignalFrame precode(const PrecodingMatrix& precoder, const SignalFrame& s) {
  if (precoder.p.n_cols != s.num_paths())
    throw std::invalid_argument("precode: P columns != user rows");
  SignalFrame x;
  x.sample_rate_hz = s.sample_rate_hz;
  x.streams = precoder.p * s.streams;
  return x;
}

SignalFrame apply_channel(const ChannelMatrix& channel, const SignalFrame& z,
                          double noise_power, std::uint64_t noise_seed) {
  if (channel.num_antennas() != z.num_paths())
    throw std::invalid_argument("apply_channel: H columns != antenna rows");
  if (noise_power < 0.0)
    throw std::invalid_argument("apply_channel: noise_power must be >= 0");

  SignalFrame r;
  r.sample_rate_hz = z.sample_rate_hz;
  r.streams = channel.h * z.streams;
  if (noise_power > 0.0) {
    const double scale = std::sqrt(noise_power);
    for (arma::uword k = 0; k < r.num_paths(); ++k) {
      Rng rng(mix_seed(noise_seed, 0xAD0BEULL + k));
      for (arma::uword n = 0; n < r.length(); ++n)
        r.streams(k, n) += scale * rng.standard_complex_normal();
    }
  }
  return r;
}

arma::cx_mat null_space_projector(const ChannelMatrix& channel) {
  const arma::cx_mat gram = channel.h * channel.h.t();
  const arma::uword nt = channel.num_antennas();
  arma::cx_mat eye_nt(arma::eye<arma::mat>(nt, nt), arma::mat(nt, nt, arma::fill::zeros));
  return eye_nt - channel.h.t() * arma::solve(gram, channel.h);
}

PrecoderLmsState precoder_lms_step(const PrecoderLmsState& state,
                                   const arma::cx_mat& r_block,
                                   const arma::cx_mat& x_block) {
  if (r_block.n_rows != state.p.n_cols)
    throw std::invalid_argument("precoder_lms_step: feedback rows != M_r");
  if (x_block.n_rows != state.p.n_rows)
    throw std::invalid_argument("precoder_lms_step: forward rows != N_t");
  if (r_block.n_cols != x_block.n_cols)
    throw std::invalid_argument("precoder_lms_step: block length mismatch");

  PrecoderLmsState next = state;
  const arma::cx_mat error = x_block - state.p * r_block;
  next.p = state.p + state.step_size * (error * r_block.t());
  next.last_error_norm = arma::norm(error, "fro");
  next.iteration = state.iteration + 1;
  if (!next.p.is_finite())
    throw DivergenceError("precoder_lms_step: weights diverged", next.iteration);
  return next;
}

}  // namespace dpdsim
