#include "dpwdm/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "dpwdm/fft.hpp"
#include "dpwdm/hash.hpp"
#include "dpwdm/nli_cache.hpp"
#include "dpwdm/signal.hpp"
#include "dpwdm/ssfm.hpp"
#include "dpwdm/stats.hpp"

namespace dpwdm {

namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("config: bad boolean for " + key + ": " + s);
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad number for " + key + ": " + s);
  }
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("config: bad integer for " + key + ": " + s);
  }
}

std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(parse_double(item.substr(b, e - b + 1), key));
  }
  if (out.empty()) throw Error("config: empty list for " + key);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void ExperimentConfig::validate() const {
  link.validate();
  if (channels < 1 || channels % 2 == 0)
    throw Error("config: channels must be odd and >= 1");
  if (subcarriers < 1) throw Error("config: subcarriers must be >= 1");
  if (spacing_ghz <= 0.0 || bandwidth_ghz <= 0.0 || symbol_period_ps <= 0.0)
    throw Error("config: plan dimensions must be positive");
  if (spacing_ghz < bandwidth_ghz)
    throw Error("config: spacing_ghz must be >= bandwidth_ghz");
  if (backend != "rp" && backend != "ssfm")
    throw Error("config: backend must be rp or ssfm");
  if (model != "mr" && model != "pd" && model != "memoryless")
    throw Error("config: model must be mr, pd or memoryless");
  preset_delays(delay_preset, channels, subcarriers, symbol_period_ps * 1e-12);
  if (powers_dbm.empty()) throw Error("config: powers_dbm is empty");
  if (block_len < 8) throw Error("config: block_len must be >= 8");
  if (train_runs < 1 || test_runs < 2)
    throw Error("config: need >= 1 training and >= 2 testing runs");
  if (particles < 2 || fit_particles < 2)
    throw Error("config: particle counts must be >= 2");
  if (memory < 1) throw Error("config: memory must be >= 1");
  if (backend == "ssfm") {
    SsfmConfig s;
    s.step_km = ssfm_step_km;
    s.validate(link);
  }
  if (quad_n_max < 1) throw Error("config: quad_n_max must be >= 1");
  if (model != "memoryless" && train_runs * block_len < 1000)
    throw Error("config: model fitting needs train_runs * block_len >= 1000");
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw Error("config line " + std::to_string(lineno) + ": bad section");
      section = t.substr(1, t.size() - 2);
      if (section != "link" && section != "plan" && section != "pipeline" &&
          section != "quadrature" && section != "io")
        throw Error("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    const std::string qual = section + "." + key;
    if (qual == "link.alpha_db_per_km") cfg.link.alpha_db_per_km = parse_double(val, key);
    else if (qual == "link.beta2_ps2_per_km") cfg.link.beta2_ps2_per_km = parse_double(val, key);
    else if (qual == "link.gamma_per_w_km") cfg.link.gamma_per_w_km = parse_double(val, key);
    else if (qual == "link.length_km") cfg.link.length_km = parse_double(val, key);
    else if (qual == "link.n_ase_psd") cfg.link.n_ase_psd = parse_double(val, key);
    else if (qual == "plan.channels") cfg.channels = static_cast<int>(parse_u64(val, key));
    else if (qual == "plan.spacing_ghz") cfg.spacing_ghz = parse_double(val, key);
    else if (qual == "plan.bandwidth_ghz") cfg.bandwidth_ghz = parse_double(val, key);
    else if (qual == "plan.symbol_period_ps") cfg.symbol_period_ps = parse_double(val, key);
    else if (qual == "plan.subcarriers") cfg.subcarriers = static_cast<int>(parse_u64(val, key));
    else if (qual == "plan.delay_preset") cfg.delay_preset = val;
    else if (qual == "pipeline.backend") cfg.backend = val;
    else if (qual == "pipeline.model") cfg.model = val;
    else if (qual == "pipeline.whitening") cfg.whitening = parse_bool(val, key);
    else if (qual == "pipeline.single_pol") cfg.single_pol = parse_bool(val, key);
    else if (qual == "pipeline.powers_dbm") cfg.powers_dbm = parse_list(val, key);
    else if (qual == "pipeline.block_len") cfg.block_len = parse_u64(val, key);
    else if (qual == "pipeline.train_runs") cfg.train_runs = parse_u64(val, key);
    else if (qual == "pipeline.test_runs") cfg.test_runs = parse_u64(val, key);
    else if (qual == "pipeline.particles") cfg.particles = parse_u64(val, key);
    else if (qual == "pipeline.fit_particles") cfg.fit_particles = parse_u64(val, key);
    else if (qual == "pipeline.memory") cfg.memory = parse_u64(val, key);
    else if (qual == "pipeline.seed") cfg.seed = parse_u64(val, key);
    else if (qual == "pipeline.ssfm_step_km") cfg.ssfm_step_km = parse_double(val, key);
    else if (qual == "quadrature.n_max") cfg.quad_n_max = static_cast<int>(parse_u64(val, key));
    else if (qual == "quadrature.drop_threshold") cfg.quad_drop_threshold = parse_double(val, key);
    else if (qual == "io.cache_dir") cfg.cache_dir = val;
    else if (qual == "io.output_dir") cfg.output_dir = val;
    else throw Error("config: unknown key " + qual);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path);
  return parse_config(is);
}

void write_config(std::ostream& os, const ExperimentConfig& c) {
  os << "[link]\n";
  os << "alpha_db_per_km = " << fmt_double(c.link.alpha_db_per_km) << "\n";
  os << "beta2_ps2_per_km = " << fmt_double(c.link.beta2_ps2_per_km) << "\n";
  os << "gamma_per_w_km = " << fmt_double(c.link.gamma_per_w_km) << "\n";
  os << "length_km = " << fmt_double(c.link.length_km) << "\n";
  os << "n_ase_psd = " << fmt_double(c.link.n_ase_psd) << "\n";
  os << "[plan]\n";
  os << "channels = " << c.channels << "\n";
  os << "spacing_ghz = " << fmt_double(c.spacing_ghz) << "\n";
  os << "bandwidth_ghz = " << fmt_double(c.bandwidth_ghz) << "\n";
  os << "symbol_period_ps = " << fmt_double(c.symbol_period_ps) << "\n";
  os << "subcarriers = " << c.subcarriers << "\n";
  os << "delay_preset = " << c.delay_preset << "\n";
  os << "[pipeline]\n";
  os << "backend = " << c.backend << "\n";
  os << "model = " << c.model << "\n";
  os << "whitening = " << fmt_bool(c.whitening) << "\n";
  os << "single_pol = " << fmt_bool(c.single_pol) << "\n";
  os << "powers_dbm = ";
  for (std::size_t i = 0; i < c.powers_dbm.size(); ++i)
    os << (i ? ", " : "") << fmt_double(c.powers_dbm[i]);
  os << "\n";
  os << "block_len = " << c.block_len << "\n";
  os << "train_runs = " << c.train_runs << "\n";
  os << "test_runs = " << c.test_runs << "\n";
  os << "particles = " << c.particles << "\n";
  os << "fit_particles = " << c.fit_particles << "\n";
  os << "memory = " << c.memory << "\n";
  os << "seed = " << c.seed << "\n";
  os << "ssfm_step_km = " << fmt_double(c.ssfm_step_km) << "\n";
  os << "[quadrature]\n";
  os << "n_max = " << c.quad_n_max << "\n";
  os << "drop_threshold = " << fmt_double(c.quad_drop_threshold) << "\n";
  os << "[io]\n";
  os << "cache_dir = " << c.cache_dir << "\n";
  os << "output_dir = " << c.output_dir << "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_config(os, cfg);
  const std::string text = os.str();
  return hex_digest(sha256(text.data(), text.size())).substr(0, 12);
}

std::vector<double> preset_delays(const std::string& name, int channels,
                                  int subcarriers, double symbol_period) {
  if (channels < 1 || channels % 2 == 0)
    throw Error("preset_delays: channels must be odd and >= 1");
  std::vector<double> out;
  if (name == "none") {
    out.assign(static_cast<std::size_t>(channels * subcarriers), 0.0);
    return out;
  }
  if (channels > 5)
    throw Error("preset_delays: preset " + name + " covers at most 5 channels");
  const int skip = (5 - channels) / 2;  // central slice of the 5-entry presets
  if (name == "single-carrier") {
    if (subcarriers != 1)
      throw Error("preset_delays: single-carrier preset needs subcarriers = 1");
    static const double num[5] = {5, 6, -6, 6, 2};
    for (int w = skip; w < skip + channels; ++w)
      out.push_back(num[w] * symbol_period / 15.0);
    return out;
  }
  if (name == "4sc") {
    if (subcarriers != 4)
      throw Error("preset_delays: 4sc preset needs subcarriers = 4");
    static const double num[5][4] = {{-25, -14, 2, 27},
                                     {27, -21, 28, 27},
                                     {-1, 18, -22, -5},
                                     {24, 17, 27, 9},
                                     {-28, 20, 26, 10}};
    const double t4 = 4.0 * symbol_period;
    for (int w = skip; w < skip + channels; ++w)
      for (int s = 0; s < 4; ++s) out.push_back(num[w][s] * t4 / 60.0);
    return out;
  }
  if (name == "6sc") {
    if (subcarriers != 6)
      throw Error("preset_delays: 6sc preset needs subcarriers = 6");
    static const double num[5][6] = {{-37, -20, 4, 41, 41, -31},
                                     {42, 41, -2, 27, -33, -8},
                                     {37, 26, 41, 14, -42, 31},
                                     {39, 16, 23, 21, -10, 13},
                                     {-30, 18, -43, -21, -41, -37}};
    const double t6 = 6.0 * symbol_period;
    for (int w = skip; w < skip + channels; ++w)
      for (int s = 0; s < 6; ++s) out.push_back(num[w][s] * t6 / 90.0);
    return out;
  }
  throw Error("preset_delays: unknown preset " + name);
}

WdmPlan experiment_plan(const ExperimentConfig& cfg,
                        const std::vector<double>& powers_mw,
                        int coi_subcarrier) {
  const int s_count = cfg.subcarriers;
  if (static_cast<int>(powers_mw.size()) != s_count)
    throw Error("experiment_plan: need one power per subcarrier");
  if (coi_subcarrier < 0 || coi_subcarrier >= s_count)
    throw Error("experiment_plan: bad COI subcarrier");
  const double period = cfg.symbol_period_ps * 1e-12;
  const double sub_bw = cfg.bandwidth_ghz * 1e9 / s_count;
  const double sub_period = period * s_count;
  const std::vector<double> delays = preset_delays(
      cfg.delay_preset, cfg.channels, s_count, period);

  WdmPlan plan;
  plan.symbol_period = sub_period;
  plan.channel_bandwidth = sub_bw;
  plan.subcarriers_per_channel = s_count;
  const int half = cfg.channels / 2;
  const int coi_global = half * s_count + coi_subcarrier;
  const double f_coi = (0.0) * cfg.spacing_ghz +
                       (coi_subcarrier - 0.5 * (s_count - 1)) * sub_bw * 1e-9;
  for (int w = -half; w <= half; ++w) {
    for (int s = 0; s < s_count; ++s) {
      const int g = (w + half) * s_count + s;
      WdmChannel ch;
      ch.index = g - coi_global;
      const double f_ghz =
          w * cfg.spacing_ghz + (s - 0.5 * (s_count - 1)) * sub_bw * 1e-9;
      ch.center_freq = 2.0 * kPi * (f_ghz - f_coi) * 1e9;
      ch.delay = delays[static_cast<std::size_t>(g)] -
                 delays[static_cast<std::size_t>(coi_global)];
      ch.delay_bar = ch.delay;  // both polarizations share the carrier delay
      const double e = powers_mw[static_cast<std::size_t>(s)] * 1e-3 * sub_period;
      ch.energy = e;
      ch.energy_bar = cfg.single_pol ? 0.0 : e;
      ch.fourth_moment = 2.0 * e * e;  // Gaussian inputs
      ch.fourth_moment_bar = 2.0 * ch.energy_bar * ch.energy_bar;
      plan.channels.push_back(ch);
    }
  }
  plan.validate();
  return plan;
}

bool is_coi_wavelength(const ExperimentConfig& cfg, const WdmPlan& plan,
                       int channel_index, int coi_subcarrier) {
  (void)plan;
  const int half = cfg.channels / 2;
  const int g = channel_index + half * cfg.subcarriers + coi_subcarrier;
  return g / cfg.subcarriers == half;
}

namespace {

std::string tensor_cache_path(const std::string& dir,
                              const std::array<std::uint8_t, 32>& key) {
  return dir + "/" + hex_digest(key).substr(0, 16) + ".nlit";
}

NliTensor load_or_build_one(const ExperimentConfig& cfg, const WdmPlan& plan,
                            const QuadratureSettings& quad, TensorKind kind,
                            int c) {
  std::filesystem::create_directories(cfg.cache_dir);
  const auto key = tensor_provenance_key(cfg.link, plan, quad, kind, c);
  const std::string path = tensor_cache_path(cfg.cache_dir, key);
  if (std::filesystem::exists(path)) return cache_load(path, key);
  NliTensor t;
  if (kind == TensorKind::SelfSpm || kind == TensorKind::CrossSpm) {
    auto [s, s_cross] = spm_tensors(cfg.link, plan, quad, 0.0);
    cache_store(s, tensor_cache_path(
        cfg.cache_dir,
        tensor_provenance_key(cfg.link, plan, quad, TensorKind::SelfSpm, 0)));
    cache_store(s_cross, tensor_cache_path(
        cfg.cache_dir,
        tensor_provenance_key(cfg.link, plan, quad, TensorKind::CrossSpm, 0)));
    t = kind == TensorKind::SelfSpm ? std::move(s) : std::move(s_cross);
  } else {
    auto [cc, ct, d] = xpm_tensors(cfg.link, plan, quad, c);
    cache_store(cc, tensor_cache_path(
        cfg.cache_dir,
        tensor_provenance_key(cfg.link, plan, quad, TensorKind::SelfXpm, c)));
    cache_store(ct, tensor_cache_path(
        cfg.cache_dir,
        tensor_provenance_key(cfg.link, plan, quad, TensorKind::CrossXpm, c)));
    cache_store(d, tensor_cache_path(
        cfg.cache_dir,
        tensor_provenance_key(cfg.link, plan, quad, TensorKind::MixedXpm, c)));
    if (kind == TensorKind::SelfXpm) t = std::move(cc);
    else if (kind == TensorKind::CrossXpm) t = std::move(ct);
    else t = std::move(d);
  }
  return t;
}

QuadratureSettings experiment_quadrature(const ExperimentConfig& cfg) {
  QuadratureSettings quad;
  quad.n_max = cfg.quad_n_max;
  quad.drop_threshold = cfg.quad_drop_threshold;
  return quad;
}

/// Tensor values do not depend on carrier energies, so the cache key is
/// computed for a plan with unit per-subcarrier powers.
WdmPlan canonical_plan(const ExperimentConfig& cfg, int coi_subcarrier) {
  ExperimentConfig c = cfg;
  c.single_pol = false;
  return experiment_plan(
      c, std::vector<double>(static_cast<std::size_t>(cfg.subcarriers), 1.0),
      coi_subcarrier);
}

}  // namespace

RpTensors load_or_build_tensors(const ExperimentConfig& cfg,
                                const WdmPlan& plan, int coi_subcarrier) {
  RpTensors bundle;
  if (cfg.link.gamma_per_w_km == 0.0) return bundle;
  const QuadratureSettings quad = experiment_quadrature(cfg);
  const WdmPlan canon = canonical_plan(cfg, coi_subcarrier);
  for (const WdmChannel& ch : plan.channels) {
    if (ch.index == 0) continue;
    if (is_coi_wavelength(cfg, plan, ch.index, coi_subcarrier)) continue;
    RpTensors::Interferer ifer;
    ifer.channel = ch.index;
    ifer.c = load_or_build_one(cfg, canon, quad, TensorKind::SelfXpm, ch.index);
    ifer.c_tilde =
        load_or_build_one(cfg, canon, quad, TensorKind::CrossXpm, ch.index);
    ifer.d = load_or_build_one(cfg, canon, quad, TensorKind::MixedXpm, ch.index);
    bundle.interferers.push_back(std::move(ifer));
  }
  return bundle;
}

namespace {

struct BlockPairs {
  std::vector<SymbolBlock> x, y;
};

/// Surrogate-channel data: the COI block, the interferer blocks and the
/// additive noise of run r all derive from (seed, stream0 + r).
BlockPairs rp_blocks(const ExperimentConfig& cfg, const WdmPlan& plan,
                     const RpEngine& engine, const RpTensors& tensors,
                     std::uint64_t stream0, std::size_t runs) {
  const WdmChannel& coi = plan.channel(0);
  BlockPairs out;
  out.x.resize(runs);
  out.y.resize(runs);
  parallel_for(runs, [&](std::size_t r) {
    Rng rng(cfg.seed, stream0 + r);
    SymbolBlock x =
        gaussian_symbols(cfg.block_len, coi.energy, coi.energy_bar, rng);
    std::vector<SymbolBlock> ifer;
    ifer.reserve(tensors.interferers.size());
    for (const auto& t : tensors.interferers) {
      const WdmChannel& ch = plan.channel(t.channel);
      ifer.push_back(
          gaussian_symbols(cfg.block_len, ch.energy, ch.energy_bar, rng));
    }
    out.y[r] = engine.channel(x, ifer, cfg.link, RpMode::Dbp, rng);
    out.x[r] = std::move(x);
  });
  return out;
}

/// Brick-wall selection of the COI wavelength band (all its subcarriers)
/// ahead of the joint back-propagation.
SampledSignal select_coi_band(const SampledSignal& sig, double center_rad,
                              double halfwidth_rad) {
  SampledSignal out = sig;
  const std::size_t n = out.size();
  std::vector<cplx> a(out.pol1), b(out.pol2);
  fft(a);
  fft(b);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = fft_omega(i, n, out.dt());
    if (std::abs(w - center_rad) > halfwidth_rad * (1.0 + 1e-12)) {
      a[i] = 0.0;
      b[i] = 0.0;
    }
  }
  ifft(a);
  ifft(b);
  out.pol1 = std::move(a);
  out.pol2 = std::move(b);
  return out;
}

BlockPairs ssfm_blocks(const ExperimentConfig& cfg, const WdmPlan& plan,
                       int coi_subcarrier, std::uint64_t stream0,
                       std::size_t runs) {
  const int s_count = cfg.subcarriers;
  const double sub_bw = plan.channel_bandwidth;
  // COI wavelength center relative to the COI subcarrier
  const double wl_center =
      -2.0 * kPi * (coi_subcarrier - 0.5 * (s_count - 1)) * sub_bw;
  const double halfwidth = kPi * s_count * sub_bw;  // pi * B_total

  SynthesisOptions opts;
  const double disp_span =
      std::abs(cfg.link.beta2()) * 2.0 * kPi *
      (cfg.channels * cfg.spacing_ghz * 1e9) * cfg.link.length() /
      plan.symbol_period;
  opts.guard_symbols =
      std::max<int>(128, static_cast<int>(std::ceil(disp_span)) + 64);
  const double rate = default_sample_rate(plan);

  BlockPairs out;
  out.x.resize(runs);
  out.y.resize(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    Rng rng(cfg.seed, stream0 + r);
    std::vector<SymbolBlock> blocks;
    blocks.reserve(plan.channels.size());
    std::size_t coi_pos = 0;
    for (std::size_t i = 0; i < plan.channels.size(); ++i) {
      const WdmChannel& ch = plan.channels[i];
      if (ch.index == 0) coi_pos = i;
      blocks.push_back(
          gaussian_symbols(cfg.block_len, ch.energy, ch.energy_bar, rng));
    }
    SampledSignal tx = synthesize_wdm(plan, blocks, rate, opts);
    SsfmConfig prop;
    prop.step_km = cfg.ssfm_step_km;
    prop.noise_injection = true;
    prop.seed = cfg.seed;
    prop.stream = (1ULL << 32) + stream0 + r;  // disjoint from symbol streams
    SampledSignal rx = ssfm_propagate(tx, cfg.link, prop);
    rx = select_coi_band(rx, wl_center, halfwidth);
    rx = receiver_dbp(rx, cfg.link, prop);
    out.y[r] = bandpass_and_match(rx, plan, 0, plan.channel(0).delay_bar,
                                  cfg.block_len, 0);
    out.x[r] = std::move(blocks[coi_pos]);
  }
  return out;
}

std::vector<SymbolBlock> remove_phase_all(const std::vector<SymbolBlock>& ys,
                                          const MeanPhaseEstimate& phase) {
  std::vector<SymbolBlock> out;
  out.reserve(ys.size());
  for (const auto& y : ys)
    out.push_back(remove_mean_phase(y, phase.theta, phase.theta_bar));
  return out;
}

double moment_floor(double v) { return std::max(v, 1e-8); }

/// Per-run output-entropy bits with per-polarization signal energies, needed
/// when the second polarization carries no signal.
std::vector<double> output_entropy_two_energies(
    const std::vector<SymbolBlock>& outputs, double energy, double energy_bar,
    const WhitenFilter& f, double sigma_xi2) {
  const std::size_t m = outputs.front().size();
  const GaussianBlockDensity d1(whitened_output_cov(energy, f.taps, sigma_xi2),
                                m);
  const GaussianBlockDensity d2(
      whitened_output_cov(energy_bar, f.taps_bar, sigma_xi2), m);
  std::vector<double> bits(outputs.size());
  for (std::size_t r = 0; r < outputs.size(); ++r)
    bits[r] = d1.neg_log2_density(outputs[r].pol1) +
              d2.neg_log2_density(outputs[r].pol2);
  return bits;
}

}  // namespace

PowerPointResult run_power_point(const ExperimentConfig& cfg,
                                 const std::vector<double>& powers_mw,
                                 double power_dbm, int coi_subcarrier) {
  cfg.validate();
  const WdmPlan plan = experiment_plan(cfg, powers_mw, coi_subcarrier);
  const WdmChannel& coi = plan.channel(0);
  const bool needs_tensors =
      cfg.backend == "rp" || cfg.model == "mr" || cfg.model == "pd";
  const RpTensors tensors = needs_tensors
                                ? load_or_build_tensors(cfg, plan, coi_subcarrier)
                                : RpTensors{};

  BlockPairs train, test;
  if (cfg.backend == "rp") {
    const RpEngine engine(tensors, cfg.block_len);
    train = rp_blocks(cfg, plan, engine, tensors, 0, cfg.train_runs);
    test = rp_blocks(cfg, plan, engine, tensors, cfg.train_runs, cfg.test_runs);
  } else {
    train = ssfm_blocks(cfg, plan, coi_subcarrier, 0, cfg.train_runs);
    test = ssfm_blocks(cfg, plan, coi_subcarrier, cfg.train_runs, cfg.test_runs);
  }

  PowerPointResult res;
  res.power_dbm = power_dbm;
  res.subcarrier = coi_subcarrier;

  // receiver training
  res.receiver.phase = estimate_mean_phase(train.x, train.y);
  const std::vector<SymbolBlock> train_y =
      remove_phase_all(train.y, res.receiver.phase);
  MrParams mr_params;
  PdParams pd_params;
  bool degenerate_model = cfg.model == "memoryless";
  if (cfg.model == "memoryless") {
    // matched Gaussian fit of the per-component error variance
    double s2 = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < train_y.size(); ++r)
      for (std::size_t m = 0; m < train_y[r].size(); ++m) {
        s2 += std::norm(train_y[r].pol1[m] - train.x[r].pol1[m]) +
              std::norm(train_y[r].pol2[m] - train.x[r].pol2[m]);
        n += 2;
      }
    res.receiver.sigma_xi2 = s2 / static_cast<double>(n);
    mr_params.memory = 0;
    mr_params.cov_phi = {0.0};
    mr_params.cov_psi = {0.0};
  } else {
    res.receiver.sigma_xi2 = estimate_sigma_xi(train.x, train.y).variance;
    MomentSet moments;
    bool have_moments = false;
    if (!tensors.interferers.empty()) {
      moments = analytic_moments(tensors, plan, cfg.link, cfg.memory);
      have_moments = moments.r_theta[0] > 1e-12;
    }
    if (!have_moments) {
      degenerate_model = true;
      mr_params.memory = 0;
      mr_params.cov_phi = {0.0};
      mr_params.cov_psi = {0.0};
    } else if (cfg.model == "mr") {
      mr_params = mr_from_moments(moments, cfg.memory);
      PfConfig fit_cfg;
      fit_cfg.particles = cfg.fit_particles;
      fit_cfg.seed = cfg.seed;
      res.receiver.fit = fit_mr_scalings(train_y, train.x, mr_params,
                                         res.receiver.sigma_xi2, fit_cfg);
      mr_params = apply_scalings(mr_params, res.receiver.fit);
    } else {
      pd_params.sigma_delta =
          std::sqrt(moment_floor(2.0 * (moments.r_theta[0] - moments.r_theta[1])));
      pd_params.sigma_a = std::sqrt(
          moment_floor(moments.r_psi[0].real() - moments.r_psi[1].real()));
      PfConfig fit_cfg;
      fit_cfg.particles = cfg.fit_particles;
      fit_cfg.seed = cfg.seed;
      res.receiver.fit = fit_pd_scalings(train_y, train.x, pd_params,
                                         res.receiver.sigma_xi2, fit_cfg);
      pd_params = apply_scalings(pd_params, res.receiver.fit);
    }
  }
  const bool use_h2 = cfg.whitening && cfg.model == "mr" && !degenerate_model;
  const WhitenFilter filter =
      symmetric3_whitener(use_h2 ? res.receiver.fit.h2 : 0.0);

  // rate estimation on the disjoint testing blocks
  const std::vector<SymbolBlock> test_y =
      remove_phase_all(test.y, res.receiver.phase);
  std::vector<SymbolBlock> whitened;
  whitened.reserve(test_y.size());
  for (const auto& y : test_y) whitened.push_back(whiten(y, filter));

  const std::vector<double> h_out = output_entropy_two_energies(
      whitened, coi.energy, coi.energy_bar, filter, res.receiver.sigma_xi2);
  PfConfig pf_cfg;
  pf_cfg.particles = cfg.particles;
  pf_cfg.seed = cfg.seed;
  PfResult h_cond;
  if (cfg.model == "pd" && !degenerate_model)
    h_cond = pf_conditional_entropy_runs(whitened, test.x, pd_params, filter,
                                         res.receiver.sigma_xi2, pf_cfg);
  else
    h_cond = pf_conditional_entropy_runs(whitened, test.x, mr_params, filter,
                                         res.receiver.sigma_xi2, pf_cfg);
  res.rate = achievable_rate(h_out, h_cond.bits, whitened.front().size());
  if (cfg.single_pol) {
    // entropies on the idle polarization cancel; per-pol rate counts only
    // the active one
    res.rate.rate *= 2.0;
    res.rate.std_error *= 2.0;
  }
  return res;
}

namespace {

std::string model_label(const ExperimentConfig& cfg) {
  if (cfg.model == "mr") return cfg.whitening ? "2pcpan" : "mr";
  return cfg.model;
}

void write_rate_row(std::ostream& os, const ExperimentConfig& cfg,
                    const std::string& hash, const PowerPointResult& r) {
  std::ostringstream row;
  append_rate_csv(row, r.power_dbm, r.subcarrier, model_label(cfg), r.rate,
                  cfg.particles, cfg.block_len, cfg.seed);
  std::string line = row.str();
  if (!line.empty() && line.back() == '\n') line.pop_back();
  os << line << ',' << hash << '\n';
}

}  // namespace

std::vector<PowerPointResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string hash = config_hash(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream rates(cfg.output_dir + "/rates_" + hash + ".csv");
  std::ofstream params(cfg.output_dir + "/params_" + hash + ".csv");
  if (!rates || !params)
    throw Error("run_experiment: cannot write to " + cfg.output_dir);
  rates << rate_csv_header() << ",config_hash\n";
  params << "power_dbm,subcarrier,model,sigma_xi2,theta_mean,theta_bar_mean,"
            "scale_phi,scale_psi,h2,flat_objective,config_hash\n";

  std::vector<PowerPointResult> out;
  for (double p : cfg.powers_dbm) {
    const double per_sub = dbm_to_watt(p) * 1e3 / cfg.subcarriers;
    const std::vector<double> powers_mw(
        static_cast<std::size_t>(cfg.subcarriers), per_sub);
    for (int s = 0; s < cfg.subcarriers; ++s) {
      PowerPointResult r;
      try {
        r = run_power_point(cfg, powers_mw, p, s);
      } catch (const Error& e) {
        throw Error("run_experiment: power " + fmt_double(p) + " dBm, subcarrier " +
                    std::to_string(s) + ": " + e.what());
      }
      write_rate_row(rates, cfg, hash, r);
      params << std::setprecision(17) << r.power_dbm << ',' << r.subcarrier
             << ',' << model_label(cfg) << ',' << r.receiver.sigma_xi2 << ','
             << r.receiver.phase.theta << ',' << r.receiver.phase.theta_bar
             << ',' << r.receiver.fit.scale_phi << ','
             << r.receiver.fit.scale_psi << ',' << r.receiver.fit.h2 << ','
             << (r.receiver.fit.flat_objective ? 1 : 0) << ',' << hash << '\n';
      out.push_back(std::move(r));
    }
  }
  return out;
}

SweepRateFn experiment_rate_fn(const ExperimentConfig& cfg) {
  cfg.validate();
  return [cfg](const std::vector<double>& powers_mw) {
    std::vector<double> rates;
    rates.reserve(powers_mw.size());
    double total = 0.0;
    for (double p : powers_mw) total += p;
    const double total_dbm = watt_to_dbm(total * 1e-3);
    for (int s = 0; s < cfg.subcarriers; ++s)
      rates.push_back(run_power_point(cfg, powers_mw, total_dbm, s).rate.rate);
    return rates;
  };
}

namespace {

ExperimentConfig desk_base(const std::string& output_dir) {
  ExperimentConfig cfg;
  cfg.channels = 3;
  cfg.link.length_km = 250.0;
  cfg.block_len = 1024;
  cfg.train_runs = 8;
  cfg.test_runs = 20;
  cfg.particles = 256;
  cfg.fit_particles = 64;
  cfg.cache_dir = output_dir + "/cache";
  cfg.output_dir = output_dir;
  return cfg;
}

ExperimentConfig full_base(const std::string& output_dir) {
  ExperimentConfig cfg;
  cfg.channels = 5;
  cfg.link.length_km = 1000.0;
  cfg.block_len = 6825;
  cfg.train_runs = 24;
  cfg.test_runs = 120;
  cfg.quad_n_max = 16;
  cfg.cache_dir = output_dir + "/cache";
  cfg.output_dir = output_dir;
  return cfg;
}

std::string written_name(const ExperimentConfig& cfg) {
  return cfg.output_dir + "/rates_" + config_hash(cfg) + ".csv";
}

std::string dump_tensor_csv(const NliTensor& t, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("reproduce: cannot write " + path);
  os << "n,k,kprime,abs\n";
  os << std::setprecision(17);
  t.for_each([&](int n, int k, int kp, cplx v) {
    os << n << ',' << k << ',' << kp << ',' << std::abs(v) << '\n';
  });
  return path;
}

std::vector<std::string> reproduce_tables(const std::string& figure,
                                          bool desk,
                                          const std::string& output_dir) {
  ExperimentConfig cfg = desk ? desk_base(output_dir) : full_base(output_dir);
  cfg.quad_n_max = desk ? 4 : 8;
  const WdmPlan canon = canonical_plan(cfg, 0);
  const QuadratureSettings quad = experiment_quadrature(cfg);
  std::filesystem::create_directories(cfg.cache_dir);
  std::filesystem::create_directories(output_dir);
  NliTensor t;
  if (figure == "fig1") {
    ExperimentConfig c2 = cfg;
    t = load_or_build_one(c2, canon, quad, TensorKind::SelfSpm, 0);
  } else {
    t = load_or_build_one(cfg, canon, quad, TensorKind::SelfXpm, 1);
  }
  return {dump_tensor_csv(
      t, output_dir + "/" + figure + (desk ? "_desk" : "_full") + ".csv")};
}

std::vector<std::string> reproduce_per_subcarrier(bool desk,
                                                  const std::string& out_dir) {
  ExperimentConfig cfg = desk ? desk_base(out_dir) : full_base(out_dir);
  cfg.subcarriers = 4;
  cfg.delay_preset = "none";
  cfg.model = "mr";
  cfg.whitening = true;
  if (desk) {
    cfg.block_len = 512;
    cfg.train_runs = 6;
    cfg.test_runs = 12;
    cfg.fit_particles = 48;
    cfg.powers_dbm = {-10, -8, -6, -5};
  } else {
    cfg.block_len = 2047;
    cfg.train_runs = 20;
    cfg.test_runs = 100;
    cfg.powers_dbm = {-13, -12, -11, -10, -9, -8, -7, -6, -5, -4};
  }
  run_experiment(cfg);
  return {written_name(cfg)};
}

std::vector<std::string> reproduce_rate_curves(bool desk, bool single_pol,
                                               const std::string& out_dir) {
  std::vector<std::string> files;
  ExperimentConfig base = desk ? desk_base(out_dir) : full_base(out_dir);
  base.single_pol = single_pol;
  base.delay_preset = "single-carrier";
  base.powers_dbm = desk ? std::vector<double>{-9, -8, -7, -6, -5, -4}
                         : std::vector<double>{-13, -12, -11, -10, -9, -8,
                                               -7, -6, -5, -4};
  struct Variant {
    const char* model;
    bool whitening;
  };
  const Variant variants[] = {{"memoryless", false},
                              {"pd", false},
                              {"mr", false},
                              {"mr", true}};
  for (const Variant& v : variants) {
    ExperimentConfig cfg = base;
    cfg.model = v.model;
    cfg.whitening = v.whitening;
    run_experiment(cfg);
    files.push_back(written_name(cfg));
  }

  // multi-carrier curve with one allocation round per power
  ExperimentConfig mc = base;
  mc.subcarriers = single_pol ? 6 : 4;
  mc.delay_preset = single_pol ? "6sc" : "4sc";
  mc.model = "mr";
  mc.whitening = true;
  if (desk) {
    mc.block_len = 512;
    mc.train_runs = 6;
    mc.test_runs = 12;
    mc.fit_particles = 48;
    mc.powers_dbm = {-7, -6, -5};
  } else {
    mc.block_len = single_pol ? 1365 : 2047;
    mc.train_runs = 20;
    mc.test_runs = 100;
  }
  const std::string hash = config_hash(mc);
  std::filesystem::create_directories(out_dir);
  const std::string fdpa_path = out_dir + "/rates_fdpa_" + hash + ".csv";
  std::ofstream os(fdpa_path);
  if (!os) throw Error("reproduce: cannot write " + fdpa_path);
  os << "power_dbm,total_rate_bits,config_hash\n";
  const SweepRateFn fn = experiment_rate_fn(mc);
  const int s_count = mc.subcarriers;
  for (double p : mc.powers_dbm) {
    const double total_mw = dbm_to_watt(p) * 1e3;
    std::vector<double> grid;
    for (double g = p - 4.0; g <= p + 2.0 + 1e-9; g += 1.0)
      grid.push_back(dbm_to_watt(g) * 1e3 / s_count);
    const std::vector<double> alloc =
        iterate_allocation(fn, static_cast<std::size_t>(s_count), grid,
                           total_mw, 1);
    const std::vector<double> rates = fn(alloc);
    double sum = 0.0;
    for (double r : rates) sum += r;
    os << std::setprecision(17) << p << ',' << sum / s_count << ',' << hash
       << '\n';
  }
  files.push_back(fdpa_path);
  return files;
}

}  // namespace

std::vector<std::string> reproduce(const std::string& figure,
                                   const std::string& scale,
                                   const std::string& output_dir) {
  if (scale != "desk" && scale != "full")
    throw Error("reproduce: scale must be desk or full");
  const bool desk = scale == "desk";
  if (figure == "fig1" || figure == "fig2")
    return reproduce_tables(figure, desk, output_dir);
  if (figure == "fig3") return reproduce_per_subcarrier(desk, output_dir);
  if (figure == "fig4") return reproduce_rate_curves(desk, false, output_dir);
  if (figure == "fig5") return reproduce_rate_curves(desk, true, output_dir);
  throw Error("reproduce: unknown figure " + figure);
}

}  // namespace dpwdm
