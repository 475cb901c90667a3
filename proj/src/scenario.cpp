// SPDX-License-Identifier: Apache-2.0

#include "dpdsim/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "dpdsim/errors.hpp"
#include "dpdsim/rng.hpp"

namespace dpdsim {

using nlohmann::json;

namespace {

std::string scheme_kind_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::NoDpd: return "no_dpd";
    case SchemeKind::Conventional: return "conventional";
    case SchemeKind::Proposed: return "proposed";
  }
  return "?";
}

SchemeKind scheme_kind_from(const std::string& s) {
  if (s == "no_dpd") return SchemeKind::NoDpd;
  if (s == "conventional") return SchemeKind::Conventional;
  if (s == "proposed") return SchemeKind::Proposed;
  throw ConfigError("schemes[].scheme: unknown value '" + s + "'");
}

Constellation constellation_from(const std::string& s) {
  if (s == "qpsk") return Constellation::Qpsk;
  if (s == "qam16") return Constellation::Qam16;
  if (s == "qam64") return Constellation::Qam64;
  throw ConfigError("waveform.constellation: unknown value '" + s + "'");
}

std::string constellation_name(Constellation c) {
  switch (c) {
    case Constellation::Qpsk: return "qpsk";
    case Constellation::Qam16: return "qam16";
    case Constellation::Qam64: return "qam64";
  }
  return "?";
}

}  // namespace

std::string SchemeSpec::tag() const {
  if (kind == SchemeKind::NoDpd) return "no_dpd";
  return scheme_kind_name(kind) + "_k" + std::to_string(order);
}

void ScenarioConfig::validate() const {
  if (schema_version != 1) throw ConfigError("schema_version: expected 1");
  if (num_users < 1) throw ConfigError("mimo.num_users: must be >= 1");
  if (num_users >= num_antennas)
    throw ConfigError("mimo: num_users < num_antennas required (massive MIMO regime M_r < N_t)");
  try {
    waveform.validate();
    saleh.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("waveform/pa: ") + e.what());
  }
  if (pa_memory_taps.empty()) throw ConfigError("pa.memory_taps: must be nonempty");
  if (jitter_fraction < 0.0 || jitter_fraction > 0.2)
    throw ConfigError("pa.jitter_fraction: must be in [0, 0.2]");
  if (drive_fraction <= 0.0 || drive_fraction > 1.0)
    throw ConfigError("pa.drive_fraction: must be in (0, 1]");
  if (dpd_linear_gain <= 0.0) throw ConfigError("dpd.linear_gain: must be positive");
  if (memory_depth < 0) throw ConfigError("dpd.memory_depth: must be >= 0");
  if (epsilon_db >= 0.0) throw ConfigError("training.epsilon_db: must be negative (dB)");
  if (max_iterations < 1) throw ConfigError("training.max_iterations: must be >= 1");
  if (conventional_rounds < 1) throw ConfigError("training.conventional_rounds: must be >= 1");
  if (dpd_epochs < 1) throw ConfigError("training.epochs: must be >= 1");
  if (precoder_block < 1) throw ConfigError("training.precoder_block: must be >= 1");
  if (seeds.training == seeds.evaluation)
    throw ConfigError("seeds: training seed must differ from evaluation seed "
                      "(evaluation must run on a fresh frame)");
  if (psd_segment_length < 8) throw ConfigError("measurement.psd_segment_length: must be >= 8");
  if (psd_overlap < 0.0 || psd_overlap >= 1.0)
    throw ConfigError("measurement.psd_overlap: must be in [0, 1)");
  if (designated_antenna >= num_antennas)
    throw ConfigError("measurement.designated_antenna: out of range");
  if (noise_power < 0.0) throw ConfigError("measurement.noise_power: must be >= 0");
  for (const auto& s : schemes) {
    if (s.kind != SchemeKind::NoDpd && s.order < 1)
      throw ConfigError("schemes[].order: must be >= 1");
    if (s.memory_depth && *s.memory_depth < 0)
      throw ConfigError("schemes[].memory_depth: must be >= 0");
  }
}

ScenarioConfig ScenarioConfig::reference() {
  ScenarioConfig cfg;  // field defaults are the reference scenario
  cfg.schemes = {
      {SchemeKind::NoDpd, 3, std::nullopt},
      {SchemeKind::Conventional, 3, std::nullopt},
      {SchemeKind::Conventional, 9, std::nullopt},
      {SchemeKind::Conventional, 11, std::nullopt},
      {SchemeKind::Proposed, 3, std::nullopt},
  };
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }

  ScenarioConfig cfg;
  try {
    cfg.schema_version = j.value("schema_version", cfg.schema_version);
    if (j.contains("mimo")) {
      const auto& m = j["mimo"];
      cfg.num_antennas = m.value("num_antennas", cfg.num_antennas);
      cfg.num_users = m.value("num_users", cfg.num_users);
    }
    if (j.contains("waveform")) {
      const auto& w = j["waveform"];
      cfg.waveform.sample_rate_hz = w.value("sample_rate_hz", cfg.waveform.sample_rate_hz);
      cfg.waveform.occupied_bandwidth_hz =
          w.value("occupied_bandwidth_hz", cfg.waveform.occupied_bandwidth_hz);
      cfg.waveform.oversampling_factor =
          w.value("oversampling_factor", cfg.waveform.oversampling_factor);
      cfg.waveform.num_symbols = w.value("num_symbols", cfg.waveform.num_symbols);
      cfg.waveform.carrier_frequency_hz =
          w.value("carrier_frequency_hz", cfg.waveform.carrier_frequency_hz);
      if (w.contains("constellation"))
        cfg.waveform.constellation = constellation_from(w["constellation"].get<std::string>());
    }
    if (j.contains("pa")) {
      const auto& p = j["pa"];
      if (p.contains("saleh")) {
        const auto& s = p["saleh"];
        cfg.saleh.alpha_a = s.value("alpha_a", cfg.saleh.alpha_a);
        cfg.saleh.beta_a = s.value("beta_a", cfg.saleh.beta_a);
        cfg.saleh.alpha_phi = s.value("alpha_phi", cfg.saleh.alpha_phi);
        cfg.saleh.beta_phi = s.value("beta_phi", cfg.saleh.beta_phi);
      }
      if (p.contains("memory_taps")) {
        cfg.pa_memory_taps.clear();
        for (const auto& t : p["memory_taps"])
          cfg.pa_memory_taps.emplace_back(t.at(0).get<double>(), t.at(1).get<double>());
      }
      cfg.crosstalk_db = p.value("crosstalk_db", cfg.crosstalk_db);
      if (p.contains("crosstalk_location")) {
        const std::string loc = p["crosstalk_location"].get<std::string>();
        if (loc == "pre")
          cfg.crosstalk_location = CrosstalkLocation::PreAmplifier;
        else if (loc == "post")
          cfg.crosstalk_location = CrosstalkLocation::PostAmplifier;
        else
          throw ConfigError("pa.crosstalk_location: expected 'pre' or 'post'");
      }
      cfg.jitter_fraction = p.value("jitter_fraction", cfg.jitter_fraction);
      cfg.drive_fraction = p.value("drive_fraction", cfg.drive_fraction);
    }
    if (j.contains("dpd")) {
      const auto& d = j["dpd"];
      cfg.dpd_linear_gain = d.value("linear_gain", cfg.dpd_linear_gain);
      cfg.memory_depth = d.value("memory_depth", cfg.memory_depth);
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      if (t.contains("adaptation")) {
        const std::string a = t["adaptation"].get<std::string>();
        if (a == "lms")
          cfg.adaptation = AdaptationKind::Lms;
        else if (a == "ls")
          cfg.adaptation = AdaptationKind::Ls;
        else
          throw ConfigError("training.adaptation: expected 'lms' or 'ls'");
      }
      cfg.lms_mu = t.value("lms_mu", cfg.lms_mu);
      cfg.dpd_epochs = t.value("epochs", cfg.dpd_epochs);
      cfg.conventional_rounds = t.value("conventional_rounds", cfg.conventional_rounds);
      cfg.epsilon_db = t.value("epsilon_db", cfg.epsilon_db);
      cfg.max_iterations = t.value("max_iterations", cfg.max_iterations);
      cfg.precoder_mu = t.value("precoder_mu", cfg.precoder_mu);
      cfg.precoder_block = t.value("precoder_block", cfg.precoder_block);
      if (t.contains("feedback")) {
        const std::string f = t["feedback"].get<std::string>();
        if (f == "direct")
          cfg.feedback = DpdFeedback::Direct;
        else if (f == "through_channel")
          cfg.feedback = DpdFeedback::ThroughChannel;
        else
          throw ConfigError("training.feedback: expected 'direct' or 'through_channel'");
      }
      cfg.refresh_between_updates =
          t.value("refresh_between_updates", cfg.refresh_between_updates);
      if (t.contains("aggregation")) {
        const std::string a = t["aggregation"].get<std::string>();
        if (a == "max")
          cfg.aggregation = ErrorAggregation::MaxOverUsers;
        else if (a == "mean")
          cfg.aggregation = ErrorAggregation::MeanOverUsers;
        else
          throw ConfigError("training.aggregation: expected 'max' or 'mean'");
      }
    }
    if (j.contains("seeds")) {
      const auto& s = j["seeds"];
      cfg.seeds.channel = s.value("channel", cfg.seeds.channel);
      cfg.seeds.training = s.value("training", cfg.seeds.training);
      cfg.seeds.evaluation = s.value("evaluation", cfg.seeds.evaluation);
    }
    if (j.contains("measurement")) {
      const auto& m = j["measurement"];
      cfg.psd_segment_length = m.value("psd_segment_length", cfg.psd_segment_length);
      cfg.psd_overlap = m.value("psd_overlap", cfg.psd_overlap);
      cfg.designated_antenna = m.value("designated_antenna", cfg.designated_antenna);
      cfg.noise_power = m.value("noise_power", cfg.noise_power);
    }
    if (j.contains("schemes")) {
      cfg.schemes.clear();
      for (const auto& s : j["schemes"]) {
        SchemeSpec spec;
        spec.kind = scheme_kind_from(s.at("scheme").get<std::string>());
        spec.order = s.value("order", spec.order);
        if (s.contains("memory_depth")) spec.memory_depth = s["memory_depth"].get<int>();
        cfg.schemes.push_back(spec);
      }
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError("config error in " + path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["mimo"] = {{"num_antennas", cfg.num_antennas}, {"num_users", cfg.num_users}};
  j["waveform"] = {{"sample_rate_hz", cfg.waveform.sample_rate_hz},
                   {"occupied_bandwidth_hz", cfg.waveform.occupied_bandwidth_hz},
                   {"oversampling_factor", cfg.waveform.oversampling_factor},
                   {"num_symbols", cfg.waveform.num_symbols},
                   {"constellation", constellation_name(cfg.waveform.constellation)},
                   {"carrier_frequency_hz", cfg.waveform.carrier_frequency_hz}};
  json taps = json::array();
  for (const auto& t : cfg.pa_memory_taps) taps.push_back({t.real(), t.imag()});
  j["pa"] = {{"saleh",
              {{"alpha_a", cfg.saleh.alpha_a},
               {"beta_a", cfg.saleh.beta_a},
               {"alpha_phi", cfg.saleh.alpha_phi},
               {"beta_phi", cfg.saleh.beta_phi}}},
             {"memory_taps", taps},
             {"crosstalk_db", cfg.crosstalk_db},
             {"crosstalk_location",
              cfg.crosstalk_location == CrosstalkLocation::PreAmplifier ? "pre" : "post"},
             {"jitter_fraction", cfg.jitter_fraction},
             {"drive_fraction", cfg.drive_fraction}};
  j["dpd"] = {{"linear_gain", cfg.dpd_linear_gain}, {"memory_depth", cfg.memory_depth}};
  j["training"] = {{"adaptation", cfg.adaptation == AdaptationKind::Lms ? "lms" : "ls"},
                   {"lms_mu", cfg.lms_mu},
                   {"epochs", cfg.dpd_epochs},
                   {"conventional_rounds", cfg.conventional_rounds},
                   {"epsilon_db", cfg.epsilon_db},
                   {"max_iterations", cfg.max_iterations},
                   {"precoder_mu", cfg.precoder_mu},
                   {"precoder_block", cfg.precoder_block},
                   {"feedback", cfg.feedback == DpdFeedback::Direct ? "direct" : "through_channel"},
                   {"refresh_between_updates", cfg.refresh_between_updates},
                   {"aggregation",
                    cfg.aggregation == ErrorAggregation::MaxOverUsers ? "max" : "mean"}};
  j["seeds"] = {{"channel", cfg.seeds.channel},
                {"training", cfg.seeds.training},
                {"evaluation", cfg.seeds.evaluation}};
  j["measurement"] = {{"psd_segment_length", cfg.psd_segment_length},
                      {"psd_overlap", cfg.psd_overlap},
                      {"designated_antenna", cfg.designated_antenna},
                      {"noise_power", cfg.noise_power}};
  json schemes = json::array();
  for (const auto& s : cfg.schemes) {
    json e = {{"scheme", scheme_kind_name(s.kind)}};
    if (s.kind != SchemeKind::NoDpd) e["order"] = s.order;
    if (s.memory_depth) e["memory_depth"] = *s.memory_depth;
    schemes.push_back(e);
  }
  j["schemes"] = schemes;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2) + "\n";
}

ScenarioContext make_context(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioContext ctx;
  ctx.cfg = cfg;
  ctx.channel = gen_channel(cfg.num_users, cfg.num_antennas, cfg.seeds.channel);
  ctx.zf_precoder = zf_pinv(ctx.channel);

  arma::cx_vec taps(cfg.pa_memory_taps.size());
  for (arma::uword i = 0; i < taps.n_elem; ++i) taps(i) = cfg.pa_memory_taps[i];
  const PaModel base = PaModel::make(cfg.saleh, taps);
  ctx.bank = PaBank::make(cfg.num_antennas, base, cfg.crosstalk_db, cfg.jitter_fraction,
                          mix_seed(cfg.seeds.channel, 0x9A17ULL), cfg.crosstalk_location);

  WaveformConfig wf = cfg.waveform;
  wf.seed = cfg.seeds.training;
  ctx.train_symbols = gen_multicarrier(wf, cfg.num_users);
  wf.seed = cfg.seeds.evaluation;
  ctx.eval_symbols = gen_multicarrier(wf, cfg.num_users);

  // Input back-off: scale each frame so the ZF-precoded drive peaks at
  // drive_fraction of the Saleh saturation input.
  const double target_peak = cfg.drive_fraction * cfg.saleh.saturation_input();
  for (SignalFrame* frame : {&ctx.train_symbols, &ctx.eval_symbols}) {
    const SignalFrame x0 = precode(ctx.zf_precoder, *frame);
    const double peak = arma::abs(x0.streams).max();
    frame->streams *= target_peak / peak;
  }
  return ctx;
}

double adjacent_band_ratio_db(const PsdEstimate& psd, double occupied_bandwidth_hz) {
  const double half_bw = occupied_bandwidth_hz / 2.0;
  const FreqInterval inband{-half_bw, half_bw};
  // step one bin past the occupied edge so the 0 dB edge bin itself never
  // counts as adjacent-channel power
  const double df = psd.freqs_hz(1) - psd.freqs_hz(0);
  const double fmax = psd.freqs_hz.back();
  const double hi = std::min(3.0 * half_bw, fmax);
  const double upper = oob_ratio_db(psd, inband, {half_bw + df, hi});
  const double lower = oob_ratio_db(psd, inband, {-hi, -half_bw - df});
  return 10.0 *
         std::log10(0.5 * (std::pow(10.0, upper / 10.0) + std::pow(10.0, lower / 10.0)));
}

namespace {

ScenarioMetrics finalize_metrics(const ScenarioContext& ctx, const SchemeSpec& spec,
                                 const DpdBank& dpd, const PrecodingMatrix& precoder,
                                 PsdEstimate* psd_out) {
  const ScenarioConfig& cfg = ctx.cfg;
  const double g0 = dpd.linear_gain;

  const SignalFrame x = precode(precoder, ctx.eval_symbols);
  const SignalFrame y = dpd_apply(dpd, x);
  const BankSignals sig = bank_forward_signals(y, ctx.bank);
  SignalFrame scaled;
  scaled.sample_rate_hz = sig.emitted.sample_rate_hz;
  scaled.streams = sig.emitted.streams / g0;
  const SignalFrame received = apply_channel(ctx.channel, scaled, cfg.noise_power,
                                             mix_seed(cfg.seeds.evaluation, 0x401BEULL));

  // The linear-chain image of the per-PA observation point: with coupling
  // ahead of the PAs an ideal chain outputs G_0 (C x)_i; with coupling
  // behind them it outputs G_0 x_i.
  const SignalFrame ideal = ctx.bank.crosstalk_location == CrosstalkLocation::PreAmplifier
                                ? crosstalk_apply(x, ctx.bank)
                                : x;

  ScenarioMetrics m;
  m.antenna_nmse_db.set_size(cfg.num_antennas);
  for (int i = 0; i < cfg.num_antennas; ++i)
    m.antenna_nmse_db(i) = nmse_db(arma::strans(sig.pa_output.streams.row(i)),
                                   arma::strans(ideal.streams.row(i)));
  m.user_nmse_db.set_size(cfg.num_users);
  for (int k = 0; k < cfg.num_users; ++k)
    m.user_nmse_db(k) = nmse_db(arma::strans(received.streams.row(k)),
                                arma::strans(ctx.eval_symbols.streams.row(k)));
  m.antenna_nmse_mean_db = arma::mean(m.antenna_nmse_db);
  m.antenna_nmse_max_db = m.antenna_nmse_db.max();
  m.user_nmse_mean_db = arma::mean(m.user_nmse_db);
  m.user_nmse_max_db = m.user_nmse_db.max();

  const int antenna = cfg.designated_antenna >= 0 ? cfg.designated_antenna : cfg.num_antennas / 2;
  const double half_bw = cfg.waveform.occupied_bandwidth_hz / 2.0;
  const FreqInterval inband{-half_bw, half_bw};
  const PsdEstimate psd =
      psd_welch(arma::strans(sig.pa_output.streams.row(antenna)), cfg.waveform.sample_rate_hz,
                cfg.psd_segment_length, cfg.psd_overlap, inband);
  m.oob_ratio_db = adjacent_band_ratio_db(psd, cfg.waveform.occupied_bandwidth_hz);
  if (psd_out) *psd_out = psd;

  const int q = spec.memory_depth.value_or(cfg.memory_depth);
  if (spec.kind == SchemeKind::NoDpd) {
    m.flops.num_antennas = cfg.num_antennas;  // no forward-path DPD filtering
  } else {
    m.flops = flops(spec.order, q, cfg.num_antennas);
  }
  return m;
}

}  // namespace

SchemeResult evaluate_scheme(const ScenarioContext& ctx, const SchemeSpec& spec) {
  const ScenarioConfig& cfg = ctx.cfg;
  const int q = spec.memory_depth.value_or(cfg.memory_depth);

  SchemeResult result;
  result.spec = spec;
  result.precoder = ctx.zf_precoder;

  switch (spec.kind) {
    case SchemeKind::NoDpd: {
      result.dpd = DpdBank::identity(cfg.num_antennas, 1, 0, cfg.dpd_linear_gain);
      break;
    }
    case SchemeKind::Conventional: {
      ConventionalTrainConfig tc;
      tc.adaptation = cfg.adaptation;
      tc.lms_mu = cfg.lms_mu;
      tc.lms_epochs_per_round = cfg.dpd_epochs;
      tc.max_rounds = cfg.conventional_rounds;
      AdaptReport report;
      const SignalFrame drive = precode(ctx.zf_precoder, ctx.train_symbols);
      result.dpd = train_conventional(ctx.bank, spec.order, q, drive, cfg.dpd_linear_gain,
                                      tc, &report);
      result.error_history = report.round_error_db;
      result.metrics.iterations_used = static_cast<long>(report.round_error_db.size());
      break;
    }
    case SchemeKind::Proposed: {
      RefinementConfig rc;
      rc.dpd_adaptation = cfg.adaptation;
      rc.dpd_mu = cfg.lms_mu;
      rc.dpd_epochs_per_iteration = cfg.dpd_epochs;
      rc.precoder_mu = cfg.precoder_mu;
      rc.precoder_block = cfg.precoder_block;
      rc.refresh_between_updates = cfg.refresh_between_updates;
      rc.feedback = cfg.feedback;
      rc.aggregation = cfg.aggregation;
      const TrainingState ts =
          successive_refinement(ctx.channel, ctx.bank, ctx.train_symbols, spec.order, q,
                                cfg.epsilon_db, cfg.max_iterations, cfg.dpd_linear_gain, rc);
      result.dpd = ts.dpd;
      result.precoder = ts.precoder;
      result.error_history = ts.error_history;
      result.metrics.iterations_used = ts.iteration;
      result.metrics.converged = ts.converged;
      break;
    }
  }

  const long iterations = result.metrics.iterations_used;
  const bool converged = result.metrics.converged;
  result.metrics = finalize_metrics(ctx, spec, result.dpd, result.precoder, &result.psd);
  result.metrics.iterations_used = iterations;
  result.metrics.converged = converged;
  return result;
}

std::vector<SchemeResult> evaluate(const ScenarioConfig& cfg) {
  const ScenarioContext ctx = make_context(cfg);
  std::vector<SchemeResult> results;
  results.reserve(cfg.schemes.size());
  for (const auto& spec : cfg.schemes) results.push_back(evaluate_scheme(ctx, spec));
  return results;
}

}  // namespace dpdsim
