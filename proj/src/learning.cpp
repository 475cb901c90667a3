// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/learning.hpp"

#include <cmath>
#include <stdexcept>

#include "dpdsim/errors.hpp"

namespace dpdsim {

namespace {

// One indirect-learning adaptation of a single postdistorter: fit
// observation -> target on unit-rms-normalized regressor columns.
// Returns the final fit error in dB relative to the target energy.
double adapt_postdistorter(MemoryPolynomial& model, const arma::cx_vec& observation,
                           const arma::cx_vec& target, double mu, int epochs,
                           AdaptationKind kind) {
  const arma::cx_mat regressors = regressor_matrix(observation, model.order, model.memory_depth);
  const double target_energy = std::real(arma::cdot(target, target));

  // unit-rms columns keep both identification routes well conditioned
  // across polynomial orders; weights are rescaled back afterwards
  arma::vec scales(regressors.n_cols);
  arma::cx_mat normalized(regressors.n_rows, regressors.n_cols);
  for (arma::uword j = 0; j < regressors.n_cols; ++j) {
    double rms = arma::norm(regressors.col(j), 2) / std::sqrt(static_cast<double>(regressors.n_rows));
    if (rms < 1e-100) rms = 1.0;
    scales(j) = rms;
    normalized.col(j) = regressors.col(j) / rms;
  }
  const arma::cx_vec cx_scales(scales, arma::vec(scales.n_elem, arma::fill::zeros));

  double residual_energy;
  if (kind == AdaptationKind::Ls) {
    const LsFit fit = ls_fit(normalized, target);
    model.coeffs = fit.coeffs / cx_scales;
    residual_energy =
        std::pow(arma::norm(target - normalized * fit.coeffs, 2), 2);
  } else {
    LmsState state;
    state.weights = model.coeffs % cx_scales;
    if (mu > 0.0) {
      state.step_size = mu;
    } else {
      // largest per-sample regressor energy bounds the stable step: the
      // per-sample error map never expands while mu * ||r(n)||^2 < 2
      const arma::vec row_energy = arma::sum(arma::square(arma::abs(normalized)), 1);
      const double peak = row_energy.max();
      state.step_size = peak > 0.0 ? 0.5 / peak : 0.0;
    }
    for (int e = 0; e < epochs; ++e) state = lms_run_samples(state, normalized, target);
    model.coeffs = state.weights / cx_scales;
    residual_energy = state.last_error_norm * state.last_error_norm;
  }
  return std::max(10.0 * std::log10(std::max(residual_energy, 1e-300) /
                                    std::max(target_energy, 1e-300)),
                  kDbFloor);
}

// Adapt every antenna's postdistorter; returns the mean fit error in dB.
double adapt_dpd_bank(DpdBank& dpd, const SignalFrame& observation,
                      const SignalFrame& target, double mu, int epochs,
                      AdaptationKind kind) {
  double sum_db = 0.0;
  for (arma::uword i = 0; i < dpd.num_antennas(); ++i) {
    sum_db += adapt_postdistorter(dpd.predistorters[i],
                                  arma::strans(observation.streams.row(i)),
                                  arma::strans(target.streams.row(i)), mu, epochs, kind);
  }
  return sum_db / static_cast<double>(dpd.num_antennas());
}

double composite_user_error_db(const SignalFrame& received, const SignalFrame& symbols,
                               ErrorAggregation aggregation) {
  double worst = kDbFloor;
  double sum = 0.0;
  for (arma::uword k = 0; k < symbols.num_paths(); ++k) {
    const double e = nmse_db(arma::strans(received.streams.row(k)),
                             arma::strans(symbols.streams.row(k)));
    worst = std::max(worst, e);
    sum += e;
  }
  return aggregation == ErrorAggregation::MaxOverUsers
             ? worst
             : sum / static_cast<double>(symbols.num_paths());
}

}  // namespace

DpdBank DpdBank::identity(arma::uword num_antennas, int order, int memory_depth,
                          double linear_gain) {
  DpdBank bank;
  bank.linear_gain = linear_gain;
  bank.predistorters.reserve(num_antennas);
  for (arma::uword i = 0; i < num_antennas; ++i)
    bank.predistorters.push_back(MemoryPolynomial::identity(order, memory_depth));
  return bank;
}

void DpdBank::validate() const {
  if (predistorters.empty()) throw std::invalid_argument("dpd bank: empty");
  if (linear_gain <= 0.0) throw std::invalid_argument("dpd bank: G_0 must be positive");
  for (const auto& g : predistorters) {
    g.validate();
    if (g.order != predistorters.front().order ||
        g.memory_depth != predistorters.front().memory_depth)
      throw std::invalid_argument("dpd bank: predistorters must share (K, Q)");
  }
}

SignalFrame dpd_apply(const DpdBank& dpd, const SignalFrame& x) {
  if (x.num_paths() != dpd.num_antennas())
    throw std::invalid_argument("dpd_apply: row count != predistorter count");
  SignalFrame y;
  y.sample_rate_hz = x.sample_rate_hz;
  y.streams.set_size(x.num_paths(), x.length());
  for (arma::uword i = 0; i < x.num_paths(); ++i)
    y.streams.row(i) =
        arma::strans(mp_apply(arma::strans(x.streams.row(i)), dpd.predistorters[i]));
  return y;
}

DpdBank train_conventional(const PaBank& bank, int order, int memory_depth,
                           const SignalFrame& training_frame, double linear_gain,
                           const ConventionalTrainConfig& cfg, AdaptReport* report) {
  if (training_frame.num_paths() != bank.num_antennas())
    throw std::invalid_argument("train_conventional: frame rows != N_t");
  if (linear_gain <= 0.0) throw std::invalid_argument("train_conventional: G_0 must be positive");

  DpdBank dpd = DpdBank::identity(bank.num_antennas(), order, memory_depth, linear_gain);
  double prev_db = 0.0;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    const SignalFrame driven = dpd_apply(dpd, training_frame);
    const BankSignals sig = bank_forward_signals(driven, bank);
    SignalFrame observation;
    observation.sample_rate_hz = sig.pa_output.sample_rate_hz;
    observation.streams = sig.pa_output.streams / linear_gain;

    double round_db;
    try {
      round_db = adapt_dpd_bank(dpd, observation, driven, cfg.lms_mu,
                                cfg.lms_epochs_per_round, cfg.adaptation);
    } catch (const DivergenceError& e) {
      throw DivergenceError("train_conventional: divergence during round " +
                                std::to_string(round),
                            e.iteration());
    }
    if (report) report->round_error_db.push_back(round_db);
    if (round > 0 && prev_db - round_db < cfg.stall_tol_db) break;
    prev_db = round_db;
  }
  return dpd;
}

TrainingState successive_refinement(const ChannelMatrix& channel, const PaBank& bank,
                                    const SignalFrame& symbols, int order,
                                    int memory_depth, double epsilon_db,
                                    long max_iter, double linear_gain,
                                    const RefinementConfig& cfg) {
  if (epsilon_db >= 0.0)
    throw std::invalid_argument("successive_refinement: epsilon must be a negative dB value");
  if (max_iter < 1) throw std::invalid_argument("successive_refinement: max_iter >= 1");
  if (symbols.num_paths() != channel.num_users())
    throw std::invalid_argument("successive_refinement: symbol rows != M_r");
  if (bank.num_antennas() != channel.num_antennas())
    throw std::invalid_argument("successive_refinement: bank size != N_t");

  TrainingState state;
  state.threshold_db = epsilon_db;
  state.max_iterations = max_iter;
  state.precoder = zf_pinv(channel);
  state.dpd = DpdBank::identity(bank.num_antennas(), order, memory_depth, linear_gain);

  struct ForwardPass {
    SignalFrame x;  // precoder output
    SignalFrame y;  // DPD output (PA drive before coupling)
    BankSignals pa;
    SignalFrame r;  // user-side feedback, gain-normalized
  };
  const auto run_forward = [&](void) -> ForwardPass {
    ForwardPass fp;
    fp.x = precode(state.precoder, symbols);
    fp.y = dpd_apply(state.dpd, fp.x);
    fp.pa = bank_forward_signals(fp.y, bank);
    SignalFrame scaled;
    scaled.sample_rate_hz = fp.pa.emitted.sample_rate_hz;
    scaled.streams = fp.pa.emitted.streams / linear_gain;
    fp.r = apply_channel(channel, scaled, 0.0);
    return fp;
  };

  for (long m = 1; m <= max_iter; ++m) {
    // (a) forward pass, (b) feedback
    ForwardPass fp = run_forward();

    // (c) DPD update: per-antenna indirect learning on z' -> y
    SignalFrame z_prime;
    z_prime.sample_rate_hz = fp.y.sample_rate_hz;
    if (cfg.feedback == DpdFeedback::Direct) {
      z_prime.streams = fp.pa.pa_output.streams / linear_gain;
    } else {
      z_prime.streams = state.precoder.p * fp.r.streams;
    }
    try {
      adapt_dpd_bank(state.dpd, z_prime, fp.y, cfg.dpd_mu, cfg.dpd_epochs_per_iteration,
                     cfg.dpd_adaptation);
    } catch (const DivergenceError& e) {
      throw DivergenceError("successive_refinement: DPD update diverged at m=" +
                                std::to_string(m),
                            e.iteration());
    }

    if (cfg.refresh_between_updates) fp = run_forward();

    // (d) precoder update: LMS epoch mapping r -> x over the frame
    {
      PrecoderLmsState pstate;
      pstate.p = state.precoder.p;
      pstate.iteration = state.iteration;
      const arma::uword n = symbols.length();
      const arma::uword block = std::max<arma::uword>(1, static_cast<arma::uword>(cfg.precoder_block));
      for (arma::uword start = 0; start < n; start += block) {
        const arma::uword stop = std::min(n, start + block) - 1;
        const arma::cx_mat r_blk = fp.r.streams.cols(start, stop);
        const arma::cx_mat x_blk = fp.x.streams.cols(start, stop);
        // normalize the step by the block's feedback energy per user
        const double power = std::pow(arma::norm(r_blk, "fro"), 2) /
                             static_cast<double>(channel.num_users());
        pstate.step_size = power > 0.0 ? cfg.precoder_mu / power : 0.0;
        try {
          pstate = precoder_lms_step(pstate, r_blk, x_blk);
        } catch (const DivergenceError& e) {
          throw DivergenceError("successive_refinement: precoder update diverged at m=" +
                                    std::to_string(m),
                                e.iteration());
        }
      }
      state.precoder.p = pstate.p;
    }

    // (e) composite error on the refreshed chain
    const ForwardPass post = run_forward();
    const double err_db = composite_user_error_db(post.r, symbols, cfg.aggregation);
    state.error_history.push_back(err_db);
    state.iteration = m;
    if (err_db < epsilon_db) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace dpdsim
