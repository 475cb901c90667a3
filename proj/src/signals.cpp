// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/signals.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dpdsim/errors.hpp"
#include "dpdsim/rng.hpp"

namespace dpdsim {

namespace {

double clamp_db(double db) { return std::max(db, kDbFloor); }

// Unit-average-energy constellation points.
std::complex<double> draw_symbol(Constellation c, Rng& rng) {
  switch (c) {
    case Constellation::Qpsk: {
      const double re = rng.uniform() < 0.5 ? -1.0 : 1.0;
      const double im = rng.uniform() < 0.5 ? -1.0 : 1.0;
      return std::complex<double>(re, im) / std::sqrt(2.0);
    }
    case Constellation::Qam16: {
      const double levels[4] = {-3.0, -1.0, 1.0, 3.0};
      const double re = levels[rng.uniform_index(4)];
      const double im = levels[rng.uniform_index(4)];
      return std::complex<double>(re, im) / std::sqrt(10.0);
    }
    case Constellation::Qam64: {
      const double levels[8] = {-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0};
      const double re = levels[rng.uniform_index(8)];
      const double im = levels[rng.uniform_index(8)];
      return std::complex<double>(re, im) / std::sqrt(42.0);
    }
  }
  throw std::invalid_argument("unknown constellation");
}

}  // namespace

void WaveformConfig::validate() const {
  if (sample_rate_hz <= 0.0 || occupied_bandwidth_hz <= 0.0)
    throw ConfigError("waveform: sample rate and bandwidth must be positive");
  if (oversampling_factor < 2)
    throw ConfigError("waveform: oversampling_factor must be >= 2");
  if (occupied_bandwidth_hz * oversampling_factor > sample_rate_hz * (1.0 + 1e-12))
    throw ConfigError(
        "waveform: occupied_bandwidth_hz * oversampling_factor exceeds "
        "sample_rate_hz (no out-of-band headroom)");
  if (num_symbols < 16)
    throw ConfigError("waveform: num_symbols must be >= 16");
}

SignalFrame gen_multicarrier(const WaveformConfig& cfg, int num_users) {
  cfg.validate();
  if (num_users < 1) throw std::invalid_argument("gen_multicarrier: num_users >= 1");

  const arma::uword frame_len =
      static_cast<arma::uword>(cfg.num_symbols) * static_cast<arma::uword>(cfg.oversampling_factor);
  // Occupied bins centered on DC; one QAM symbol per bin for the frame.
  arma::uword occupied = static_cast<arma::uword>(
      std::llround(static_cast<double>(frame_len) * cfg.occupied_bandwidth_hz / cfg.sample_rate_hz));
  occupied = std::min<arma::uword>(occupied, static_cast<arma::uword>(cfg.num_symbols));
  if (occupied < 8)
    throw ConfigError("waveform: fewer than 8 occupied bins; increase num_symbols");

  SignalFrame frame;
  frame.sample_rate_hz = cfg.sample_rate_hz;
  frame.streams.set_size(num_users, frame_len);

  for (int u = 0; u < num_users; ++u) {
    Rng rng(mix_seed(cfg.seed, 0xA110C0DEULL + static_cast<std::uint64_t>(u)));
    arma::cx_vec spectrum(frame_len, arma::fill::zeros);
    // symmetric about DC so both band edges stay strictly inside the
    // occupied bandwidth
    const long half = (static_cast<long>(occupied) - 1) / 2;
    for (long k = -half; k <= half; ++k) {
      const arma::uword bin =
          static_cast<arma::uword>((k + static_cast<long>(frame_len)) % static_cast<long>(frame_len));
      spectrum(bin) = draw_symbol(cfg.constellation, rng);
    }
    arma::cx_vec time = arma::ifft(spectrum);
    // exact unit average power per row
    const double rms = std::sqrt(arma::mean(arma::square(arma::abs(time))));
    frame.streams.row(u) = arma::strans(time / rms);
  }
  return frame;
}

double nmse_db(const arma::cx_vec& test, const arma::cx_vec& reference) {
  if (test.n_elem != reference.n_elem)
    throw std::invalid_argument("nmse_db: length mismatch");
  if (test.n_elem == 0) throw std::invalid_argument("nmse_db: empty input");
  const double ref_energy = std::real(arma::cdot(reference, reference));
  if (ref_energy <= 0.0) throw std::domain_error("nmse_db: reference has zero energy");

  // least-squares scalar aligning reference to test
  const std::complex<double> a = arma::cdot(reference, test) / ref_energy;
  const arma::cx_vec residual = test - a * reference;
  const double res_energy = std::real(arma::cdot(residual, residual));
  const double aligned_energy = std::norm(a) * ref_energy;
  if (aligned_energy <= 0.0) return -kDbFloor;  // test orthogonal to reference
  return clamp_db(10.0 * std::log10(res_energy / aligned_energy));
}

PsdEstimate psd_welch(const arma::cx_vec& x, double sample_rate_hz,
                      int segment_length, double overlap_fraction,
                      FreqInterval inband) {
  if (segment_length < 8)
    throw std::invalid_argument("psd_welch: segment_length must be >= 8");
  if (x.n_elem < static_cast<arma::uword>(segment_length))
    throw std::invalid_argument("psd_welch: input shorter than segment_length");
  if (overlap_fraction < 0.0 || overlap_fraction >= 1.0)
    throw std::invalid_argument("psd_welch: overlap_fraction in [0,1)");
  if (sample_rate_hz <= 0.0)
    throw std::invalid_argument("psd_welch: sample_rate_hz must be positive");

  const arma::uword seg = static_cast<arma::uword>(segment_length);
  arma::uword hop = seg - static_cast<arma::uword>(std::floor(overlap_fraction * segment_length));
  if (hop == 0) hop = 1;

  arma::vec window(seg);
  for (arma::uword n = 0; n < seg; ++n)
    window(n) = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / seg));
  const double window_energy = arma::dot(window, window);

  const arma::cx_vec cx_window(window, arma::vec(seg, arma::fill::zeros));
  arma::vec accum(seg, arma::fill::zeros);
  arma::uword num_segments = 0;
  for (arma::uword start = 0; start + seg <= x.n_elem; start += hop) {
    const arma::cx_vec seg_fft = arma::fft(x.subvec(start, start + seg - 1) % cx_window);
    accum += arma::square(arma::abs(seg_fft));
    ++num_segments;
  }
  // density scaling: sum(psd)*df == mean power
  accum /= (static_cast<double>(num_segments) * sample_rate_hz * window_energy);

  // two-sided order; drop the unpaired -Nyquist bin so freqs are symmetric
  const arma::uword half = seg / 2;
  PsdEstimate psd;
  psd.segment_length = segment_length;
  psd.overlap_fraction = overlap_fraction;
  psd.freqs_hz.set_size(seg - 1);
  arma::vec linear(seg - 1);
  for (arma::uword i = 0; i < seg - 1; ++i) {
    const long bin = static_cast<long>(i + 1) - static_cast<long>(half);  // -half+1 .. half-1
    psd.freqs_hz(i) = static_cast<double>(bin) * sample_rate_hz / static_cast<double>(seg);
    const arma::uword fft_idx =
        static_cast<arma::uword>((bin + static_cast<long>(seg)) % static_cast<long>(seg));
    linear(i) = accum(fft_idx);
  }

  if (inband.lo_hz == 0.0 && inband.hi_hz == 0.0) {
    inband.lo_hz = psd.freqs_hz.front();
    inband.hi_hz = psd.freqs_hz.back();
  }
  double ref_sum = 0.0;
  arma::uword ref_count = 0;
  for (arma::uword i = 0; i < linear.n_elem; ++i) {
    if (psd.freqs_hz(i) >= inband.lo_hz && psd.freqs_hz(i) <= inband.hi_hz) {
      ref_sum += linear(i);
      ++ref_count;
    }
  }
  if (ref_count == 0) throw std::invalid_argument("psd_welch: occupied band selects no bins");
  const double ref = ref_sum / static_cast<double>(ref_count);

  psd.power_db.set_size(linear.n_elem);
  for (arma::uword i = 0; i < linear.n_elem; ++i)
    psd.power_db(i) = clamp_db(10.0 * std::log10(std::max(linear(i) / ref, 0.0)));
  psd.ref_db = 10.0 * std::log10(ref);
  return psd;
}

double oob_ratio_db(const PsdEstimate& psd, FreqInterval inband, FreqInterval adjacent) {
  if (inband.hi_hz > psd.freqs_hz.back() + 1e-9 || inband.lo_hz < psd.freqs_hz.front() - 1e-9 ||
      adjacent.hi_hz > psd.freqs_hz.back() + 1e-9 || adjacent.lo_hz < psd.freqs_hz.front() - 1e-9)
    throw std::invalid_argument("oob_ratio_db: interval outside PSD span");

  double in_sum = 0.0, adj_sum = 0.0;
  arma::uword in_count = 0, adj_count = 0;
  for (arma::uword i = 0; i < psd.freqs_hz.n_elem; ++i) {
    const double f = psd.freqs_hz(i);
    const double lin = std::pow(10.0, psd.power_db(i) / 10.0);
    if (f >= inband.lo_hz && f <= inband.hi_hz) {
      in_sum += lin;
      ++in_count;
    }
    if (f >= adjacent.lo_hz && f <= adjacent.hi_hz) {
      adj_sum += lin;
      ++adj_count;
    }
  }
  if (in_count == 0 || adj_count == 0)
    throw std::invalid_argument("oob_ratio_db: empty bin selection");
  const double ratio = (adj_sum / adj_count) / (in_sum / in_count);
  return clamp_db(10.0 * std::log10(std::max(ratio, 0.0)));
}

double peak_to_average_db(const arma::cx_vec& x) {
  if (x.n_elem == 0) throw std::invalid_argument("peak_to_average_db: empty input");
  const arma::vec p = arma::square(arma::abs(x));
  return 10.0 * std::log10(p.max() / arma::mean(p));
}

}  // namespace dpdsim
