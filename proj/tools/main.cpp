// Command-line front end: tensor cache management, statistics checks,
// channel simulation, rate estimation, power allocation, and figure-data
// reproduction.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dpwdm/experiment.hpp"
#include "dpwdm/nli_cache.hpp"
#include "dpwdm/stats.hpp"

namespace {

using namespace dpwdm;

struct GlobalOpts {
  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
};

ExperimentConfig load_cfg(const GlobalOpts& g) {
  if (g.config_path.empty())
    throw Error("missing --config (experiment configuration file)");
  ExperimentConfig cfg = parse_config_file(g.config_path);
  if (g.seed_set) cfg.seed = g.seed;
  if (!g.output_dir.empty()) cfg.output_dir = g.output_dir;
  cfg.validate();
  return cfg;
}

int cmd_coeffs_build(const GlobalOpts& g, int subcarrier) {
  const ExperimentConfig cfg = load_cfg(g);
  const std::vector<double> powers(
      static_cast<std::size_t>(cfg.subcarriers), 1.0);
  const WdmPlan plan = experiment_plan(cfg, powers, subcarrier);
  const RpTensors t = load_or_build_tensors(cfg, plan, subcarrier);
  std::cout << "cache " << cfg.cache_dir << ": " << t.interferers.size()
            << " interferer bundles\n";
  for (const auto& i : t.interferers)
    std::cout << "  carrier " << i.channel << ": " << i.c.entry_count() << " + "
              << i.c_tilde.entry_count() << " + " << i.d.entry_count()
              << " entries\n";
  return 0;
}

int cmd_coeffs_dump(const std::string& file, const std::string& out) {
  const NliTensor t = cache_load_any(file);
  dump_csv(t, out);
  std::cout << "wrote " << out << " (" << t.entry_count() << " entries)\n";
  return 0;
}

int cmd_stats(const GlobalOpts& g, double power_dbm, std::size_t blocks,
              std::size_t lag_max) {
  const ExperimentConfig cfg = load_cfg(g);
  const double per_sub = dbm_to_watt(power_dbm) * 1e3 / cfg.subcarriers;
  const std::vector<double> powers(
      static_cast<std::size_t>(cfg.subcarriers), per_sub);
  const WdmPlan plan = experiment_plan(cfg, powers, 0);
  const RpTensors tensors = load_or_build_tensors(cfg, plan, 0);
  const MomentSet analytic =
      analytic_moments(tensors, plan, cfg.link, lag_max);

  const RpEngine engine(tensors, cfg.block_len);
  std::vector<NliDecomposition> decos(blocks);
  const WdmChannel& coi = plan.channel(0);
  parallel_for(blocks, [&](std::size_t r) {
    Rng rng(cfg.seed, r);
    SymbolBlock x =
        gaussian_symbols(cfg.block_len, coi.energy, coi.energy_bar, rng);
    std::vector<SymbolBlock> ifer;
    for (const auto& t : tensors.interferers) {
      const WdmChannel& ch = plan.channel(t.channel);
      ifer.push_back(
          gaussian_symbols(cfg.block_len, ch.energy, ch.energy_bar, rng));
    }
    decos[r] = engine.decompose(x, ifer, RpMode::Dbp);
  });
  const MomentEstimate mc = empirical_moments(decos, lag_max);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string ap = cfg.output_dir + "/moments_analytic.csv";
  const std::string ep = cfg.output_dir + "/moments_empirical.csv";
  std::ofstream(ap) << moments_to_csv(analytic);
  std::ofstream(ep) << moments_to_csv(mc.value);
  std::cout << "wrote " << ap << " and " << ep << "\n"
            << "theta mean: analytic " << analytic.theta_mean << ", empirical "
            << mc.value.theta_mean << " (se "
            << mc.stderr_.theta_mean << ")\n";
  return 0;
}

int cmd_simulate(const GlobalOpts& g, double power_dbm) {
  const ExperimentConfig cfg = load_cfg(g);
  const double per_sub = dbm_to_watt(power_dbm) * 1e3 / cfg.subcarriers;
  const std::vector<double> powers(
      static_cast<std::size_t>(cfg.subcarriers), per_sub);
  const WdmPlan plan = experiment_plan(cfg, powers, 0);
  const RpTensors tensors = load_or_build_tensors(cfg, plan, 0);
  const RpEngine engine(tensors, cfg.block_len);
  const WdmChannel& coi = plan.channel(0);
  Rng rng(cfg.seed, 0);
  SymbolBlock x =
      gaussian_symbols(cfg.block_len, coi.energy, coi.energy_bar, rng);
  std::vector<SymbolBlock> ifer;
  for (const auto& t : tensors.interferers) {
    const WdmChannel& ch = plan.channel(t.channel);
    ifer.push_back(
        gaussian_symbols(cfg.block_len, ch.energy, ch.energy_bar, rng));
  }
  const SymbolBlock y = engine.channel(x, ifer, cfg.link, RpMode::Dbp, rng);

  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = cfg.output_dir + "/simulate.csv";
  std::ofstream os(path);
  os << "m,x1_re,x1_im,x2_re,x2_im,y1_re,y1_im,y2_re,y2_im\n"
     << std::setprecision(17);
  for (std::size_t m = 0; m < x.size(); ++m)
    os << m << ',' << x.pol1[m].real() << ',' << x.pol1[m].imag() << ','
       << x.pol2[m].real() << ',' << x.pol2[m].imag() << ','
       << y.pol1[m].real() << ',' << y.pol1[m].imag() << ','
       << y.pol2[m].real() << ',' << y.pol2[m].imag() << '\n';
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_rates(const GlobalOpts& g) {
  const ExperimentConfig cfg = load_cfg(g);
  const auto results = run_experiment(cfg);
  std::cout << "rates_" << config_hash(cfg) << ".csv in " << cfg.output_dir
            << " (" << results.size() << " operating points)\n";
  for (const auto& r : results)
    std::cout << "  " << r.power_dbm << " dBm, subcarrier " << r.subcarrier
              << ": " << r.rate.rate << " +- " << r.rate.std_error
              << " bits/s/Hz/pol\n";
  return 0;
}

int cmd_fdpa(const GlobalOpts& g, double power_dbm, int rounds) {
  const ExperimentConfig cfg = load_cfg(g);
  if (cfg.subcarriers < 2)
    throw Error("fdpa needs a configuration with subcarriers >= 2");
  const double total_mw = dbm_to_watt(power_dbm) * 1e3;
  std::vector<double> grid;
  for (double p = power_dbm - 4.0; p <= power_dbm + 2.0 + 1e-9; p += 1.0)
    grid.push_back(dbm_to_watt(p) * 1e3 / cfg.subcarriers);
  const SweepRateFn fn = experiment_rate_fn(cfg);
  const std::vector<double> alloc = iterate_allocation(
      fn, static_cast<std::size_t>(cfg.subcarriers), grid, total_mw, rounds);
  const std::vector<double> rates = fn(alloc);
  double sum = 0.0;
  std::cout << "allocation at " << power_dbm << " dBm total:\n";
  for (std::size_t s = 0; s < alloc.size(); ++s) {
    sum += rates[s];
    std::cout << "  subcarrier " << s << ": " << alloc[s] << " mW, "
              << rates[s] << " bits/s/Hz/pol\n";
  }
  std::cout << "mean rate " << sum / static_cast<double>(alloc.size())
            << " bits/s/Hz/pol\n";
  return 0;
}

int cmd_reproduce(const GlobalOpts& g, const std::string& figure,
                  const std::string& scale) {
  const std::string out = g.output_dir.empty() ? "out" : g.output_dir;
  if (scale == "full")
    std::cout << "full scale reproduces the published operating point; "
                 "expect an overnight run\n";
  const auto files = reproduce(figure, scale, out);
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-polarization WDM achievable-rate toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name
  GlobalOpts g;
  app.add_option("--config", g.config_path, "experiment configuration file");
  app.add_option("--output-dir", g.output_dir, "override the output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "override the seed");
  app.add_option("--threads", g.threads, "worker thread cap (0 = all cores)");

  auto* coeffs = app.add_subcommand("coeffs", "tensor cache management");
  coeffs->require_subcommand(1);
  int subcarrier = 0;
  auto* build = coeffs->add_subcommand("build", "build and cache the tensors");
  build->add_option("--subcarrier", subcarrier, "COI subcarrier (0-based)");
  std::string dump_file, dump_out = "tensor.csv";
  auto* dump = coeffs->add_subcommand("dump", "dump a cached tensor as CSV");
  dump->add_option("--file", dump_file, "cached tensor file")->required();
  dump->add_option("--out", dump_out, "output CSV path");

  double power_dbm = -6.0;
  std::size_t blocks = 200, lag_max = 8;
  auto* stats = app.add_subcommand(
      "stats", "analytic vs Monte-Carlo decomposition statistics");
  stats->add_option("--power", power_dbm, "launch power per wavelength, dBm");
  stats->add_option("--blocks", blocks, "Monte-Carlo blocks");
  stats->add_option("--lag-max", lag_max, "autocovariance lags");

  double sim_power = -6.0;
  auto* simulate =
      app.add_subcommand("simulate", "one surrogate-channel realization");
  simulate->add_option("--power", sim_power, "launch power per wavelength, dBm");

  auto* rates = app.add_subcommand("rates", "achievable-rate sweep");

  double fdpa_power = -6.0;
  int fdpa_rounds = 1;
  auto* fdpa =
      app.add_subcommand("fdpa", "frequency-dependent power allocation");
  fdpa->add_option("--power", fdpa_power, "total power per wavelength, dBm");
  fdpa->add_option("--rounds", fdpa_rounds, "allocation iterations");

  std::string figure, scale = "desk";
  auto* rep = app.add_subcommand("reproduce", "emit figure data series");
  rep->add_option("figure", figure, "fig1..fig5")->required();
  rep->add_option("--scale", scale, "desk or full");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  g.seed_set = seed_opt->count() > 0;
  if (g.threads != 0) dpwdm::set_default_threads(g.threads);

  try {
    if (build->parsed()) return cmd_coeffs_build(g, subcarrier);
    if (dump->parsed()) return cmd_coeffs_dump(dump_file, dump_out);
    if (stats->parsed()) return cmd_stats(g, power_dbm, blocks, lag_max);
    if (simulate->parsed()) return cmd_simulate(g, sim_power);
    if (rates->parsed()) return cmd_rates(g);
    if (fdpa->parsed()) return cmd_fdpa(g, fdpa_power, fdpa_rounds);
    if (rep->parsed()) return cmd_reproduce(g, figure, scale);
  } catch (const dpwdm::Error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.rfind("config", 0) == 0 || what.find("missing --config") == 0
               ? 1
               : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
