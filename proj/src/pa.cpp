// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/pa.hpp"

#include <cmath>
#include <stdexcept>

#include "dpdsim/errors.hpp"
#include "dpdsim/rng.hpp"

namespace dpdsim {

void SalehParams::validate() const {
  if (beta_a <= 0.0 || beta_phi <= 0.0)
    throw ConfigError("saleh: beta_a and beta_phi must be > 0");
}

double saleh_amam(double r, const SalehParams& p) {
  if (r < 0.0) throw std::invalid_argument("saleh_amam: r must be >= 0");
  return p.alpha_a * r / (1.0 + p.beta_a * r * r);
}

double saleh_ampm(double r, const SalehParams& p) {
  if (r < 0.0) throw std::invalid_argument("saleh_ampm: r must be >= 0");
  return p.alpha_phi * r * r / (1.0 + p.beta_phi * r * r);
}

PaModel PaModel::make(const SalehParams& saleh, const arma::cx_vec& raw_taps) {
  saleh.validate();
  if (raw_taps.n_elem == 0) throw ConfigError("pa: memory_taps must be nonempty");
  const std::complex<double> dc = arma::sum(raw_taps);
  if (std::abs(dc) < 1e-12)
    throw ConfigError("pa: memory_taps sum to ~0, cannot normalize to unit DC gain");
  PaModel m;
  m.saleh = saleh;
  m.memory_taps = raw_taps / dc;
  return m;
}

PaModel PaModel::make_default(const SalehParams& saleh) {
  return make(saleh, arma::cx_vec{{1.0, 0.0}, {0.2, 0.0}, {0.1, 0.0}});
}

arma::cx_vec pa_apply(const arma::cx_vec& x, const PaModel& pa) {
  if (!x.is_finite()) throw std::invalid_argument("pa_apply: non-finite input");
  const arma::uword n = x.n_elem;
  arma::cx_vec stat(n);
  for (arma::uword i = 0; i < n; ++i) {
    const double r = std::abs(x(i));
    if (r == 0.0) {
      stat(i) = 0.0;
      continue;
    }
    const double amp = saleh_amam(r, pa.saleh);
    const double phase = std::arg(x(i)) + saleh_ampm(r, pa.saleh);
    stat(i) = std::polar(amp, phase);
  }
  if (pa.memory_taps.n_elem == 1) return pa.memory_taps(0) * stat;
  arma::cx_vec out(n, arma::fill::zeros);
  const arma::uword taps = pa.memory_taps.n_elem;
  for (arma::uword i = 0; i < n; ++i) {
    std::complex<double> acc = 0.0;
    const arma::uword qmax = std::min<arma::uword>(taps - 1, i);
    for (arma::uword q = 0; q <= qmax; ++q) acc += pa.memory_taps(q) * stat(i - q);
    out(i) = acc;
  }
  return out;
}

PaBank PaBank::make(arma::uword num_antennas, const PaModel& base,
                    double crosstalk_db, double jitter_fraction,
                    std::uint64_t seed, CrosstalkLocation location) {
  if (num_antennas == 0) throw ConfigError("pa bank: need at least one antenna");
  if (jitter_fraction < 0.0 || jitter_fraction > 0.2)
    throw ConfigError("pa bank: jitter_fraction must be in [0, 0.2]");

  PaBank bank;
  bank.crosstalk_coupling_db = crosstalk_db;
  bank.crosstalk_location = location;
  bank.jitter_fraction = jitter_fraction;
  bank.models.reserve(num_antennas);
  for (arma::uword i = 0; i < num_antennas; ++i) {
    SalehParams p = base.saleh;
    if (jitter_fraction > 0.0) {
      Rng rng(mix_seed(seed, 0xBA5EBA11ULL + i));
      auto scatter = [&](double v) { return v * (1.0 + jitter_fraction * (2.0 * rng.uniform() - 1.0)); };
      p.alpha_a = scatter(p.alpha_a);
      p.beta_a = scatter(p.beta_a);
      p.alpha_phi = scatter(p.alpha_phi);
      p.beta_phi = scatter(p.beta_phi);
    }
    PaModel m;
    m.saleh = p;
    m.memory_taps = base.memory_taps;  // already normalized
    bank.models.push_back(std::move(m));
  }

  bank.crosstalk_matrix.eye(num_antennas, num_antennas);
  if (crosstalk_db > kCrosstalkOffDb) {
    const double kappa = std::pow(10.0, crosstalk_db / 20.0);
    for (arma::uword i = 0; i + 1 < num_antennas; ++i) {
      bank.crosstalk_matrix(i, i + 1) = kappa;
      bank.crosstalk_matrix(i + 1, i) = kappa;
    }
  }
  return bank;
}

SignalFrame crosstalk_apply(const SignalFrame& x, const PaBank& bank) {
  const arma::uword nt = bank.num_antennas();
  if (x.num_paths() != nt)
    throw std::invalid_argument("crosstalk_apply: row count != N_t");
  SignalFrame out;
  out.sample_rate_hz = x.sample_rate_hz;
  if (bank.crosstalk_coupling_db <= kCrosstalkOffDb || nt == 1) {
    out.streams = x.streams;
    return out;
  }
  const double kappa = std::pow(10.0, bank.crosstalk_coupling_db / 20.0);
  out.streams.set_size(nt, x.length());
  // tridiagonal product, computed from pre-coupling rows only
  for (arma::uword i = 0; i < nt; ++i) {
    arma::cx_rowvec row = x.streams.row(i);
    if (i > 0) row += kappa * x.streams.row(i - 1);
    if (i + 1 < nt) row += kappa * x.streams.row(i + 1);
    out.streams.row(i) = row;
  }
  return out;
}

BankSignals bank_forward_signals(const SignalFrame& x, const PaBank& bank) {
  const arma::uword nt = bank.num_antennas();
  if (x.num_paths() != nt)
    throw std::invalid_argument("bank_forward: row count != N_t");

  BankSignals sig;
  if (bank.crosstalk_location == CrosstalkLocation::PreAmplifier) {
    const SignalFrame mixed = crosstalk_apply(x, bank);
    sig.pa_output.sample_rate_hz = x.sample_rate_hz;
    sig.pa_output.streams.set_size(nt, x.length());
    for (arma::uword i = 0; i < nt; ++i)
      sig.pa_output.streams.row(i) =
          arma::strans(pa_apply(arma::strans(mixed.streams.row(i)), bank.models[i]));
    sig.emitted = sig.pa_output;
  } else {
    sig.pa_output.sample_rate_hz = x.sample_rate_hz;
    sig.pa_output.streams.set_size(nt, x.length());
    for (arma::uword i = 0; i < nt; ++i)
      sig.pa_output.streams.row(i) =
          arma::strans(pa_apply(arma::strans(x.streams.row(i)), bank.models[i]));
    sig.emitted = crosstalk_apply(sig.pa_output, bank);
  }
  return sig;
}

SignalFrame bank_forward(const SignalFrame& x, const PaBank& bank) {
  return bank_forward_signals(x, bank).emitted;
}

}  // namespace dpdsim
