// Acceptance gates for the campaign toolchain. Each criterion prints one
// machine-checkable verdict line; tolerances are pinned in code next to the
// quantity they gate.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "kerrsim/errors.hpp"
#include "kerrsim/estimation.hpp"
#include "kerrsim/experiments.hpp"
#include "kerrsim/montecarlo.hpp"
#include "kerrsim/probe.hpp"
#include "kerrsim/quantum.hpp"
#include "kerrsim/rng.hpp"

using namespace kerrsim;

namespace {

namespace fs = std::filesystem;

struct Verdict {
  int criterion;
  bool all_ok = true;

  explicit Verdict(int c) : criterion(c) {
    std::printf("criterion %d gates:\n", criterion);
  }
  void gate(bool ok, const std::string& label) {
    std::printf("  [%s] %s\n", ok ? "ok" : "RED", label.c_str());
    all_ok = all_ok && ok;
    CHECK_MESSAGE(ok, label);
  }
  void note(const std::string& text) { std::printf("  (%s)\n", text.c_str()); }
  void finish() const {
    std::printf("ACCEPTANCE criterion %d: %s\n", criterion, all_ok ? "PASS" : "FAIL");
    std::fflush(stdout);
  }
};

std::string format(const char* fmt, ...) {
  char buffer[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buffer, sizeof buffer, fmt, args);
  va_end(args);
  return buffer;
}

struct TempDir {
  fs::path path;

  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("kerrsim_acc_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("cannot read " + path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

struct CliRun {
  int exit_code = -1;
  std::string out;
  double wall_seconds = 0.0;
};

CliRun run_cli(const TempDir& dir, const std::string& args) {
  const std::string out_path = dir.file("cli_stdout.txt");
  const std::string command =
      std::string(KERRSIM_CLI_PATH) + " " + args + " >" + out_path + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int status = std::system(command.c_str());
  CliRun run;
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  run.out = read_file(out_path);
  return run;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    REQUIRE_MESSAGE(false, ("missing column " + name));
    return 0;
  }
  double at(std::size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("cannot read " + path));
  Table table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      table.columns = cells;
      header = false;
    } else {
      std::vector<double> row;
      row.reserve(cells.size());
      for (const std::string& cell : cells) row.push_back(std::strtod(cell.c_str(), nullptr));
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

nlohmann::json metadata_of(const std::string& path) {
  return nlohmann::json::parse(read_file(path));
}

// The four campaign configs the file-producing criteria run. Trial counts
// are pinned here so criterion 9 can re-run byte-for-byte identical
// campaigns at several worker counts.
std::string c1_scaling_json() {
  return "{\n"
         "  \"command\": \"scaling\",\n"
         "  \"seed\": 20260818,\n"
         "  \"interaction\": {\"g\": 1e-8, \"epsilon\": 0.1},\n"
         "  \"trials\": {\"total\": 10500000},\n"
         "  \"scaling\": {\"grid\": [3e4, 5e4, 7e4, 1e5], \"policy\": \"proportional\"},\n"
         "  \"output\": {\"prefix\": \"c1\"}\n"
         "}\n";
}

std::string c2_scaling_json() {
  return "{\n"
         "  \"command\": \"scaling\",\n"
         "  \"seed\": 20260819,\n"
         "  \"interaction\": {\"g\": 1e-8, \"epsilon\": 0.1},\n"
         "  \"trials\": {\"total\": 10500000},\n"
         "  \"scaling\": {\"grid\": [3e4, 5e4, 7e4, 1e5], \"policy\": \"poissonian\"},\n"
         "  \"output\": {\"prefix\": \"c2\"}\n"
         "}\n";
}

std::string c3_batch_json() {
  return "{\n"
         "  \"command\": \"batch\",\n"
         "  \"seed\": 20260820,\n"
         "  \"ensemble\": {\"kind\": \"sine_modulated\", \"mean_n\": 9e4,"
         " \"target_std\": 4.5e4, \"nodes\": 128},\n"
         "  \"interaction\": {\"g\": 6e-8, \"epsilon\": 0.1},\n"
         "  \"trials\": {\"total\": 79200000},\n"
         "  \"output\": {\"prefix\": \"c3\"}\n"
         "}\n";
}

// Fixed-span study reaching into the saturated regime. The span is frozen
// at the automatic half-width the N = 1e6 point would get, so smaller N
// stay linear while the top point overdrives the response.
double c7_span_abs() {
  const ProbeEnsemble anchor =
      sine_modulated(1e6, depth_for_std(1e6, 5e5, true), true, 128);
  return 0.5 * 0.1 / max_intensity(anchor);
}

std::string c7_scaling_json(double span_abs) {
  return format(
      "{\n"
      "  \"command\": \"scaling\",\n"
      "  \"seed\": 20260822,\n"
      "  \"interaction\": {\"g\": 0.0, \"epsilon\": 0.1},\n"
      "  \"trials\": {\"total\": 200000},\n"
      "  \"scaling\": {\"grid\": [1e5, 3e5, 1e6, 5e6], \"policy\": \"proportional\",\n"
      "              \"span_mode\": \"fixed\", \"span_abs\": %.17g},\n"
      "  \"output\": {\"prefix\": \"c7\"}\n"
      "}\n",
      span_abs);
}

ProbeEnsemble proportional_ensemble(double mean_n) {
  return sine_modulated(mean_n, depth_for_std(mean_n, 0.5 * mean_n, true), true, 128);
}

}  // namespace

TEST_CASE("criterion 1") {
  Verdict v(1);
  TempDir dir;
  const std::string cfg = dir.file("c1.json");
  write_file(cfg, c1_scaling_json());
  const CliRun run = run_cli(dir, "scaling --config " + cfg + " --out " + dir.file("out"));
  v.gate(run.exit_code == 0, "scaling campaign exits 0");
  v.gate(run.wall_seconds < 300.0,
         format("runtime %.1f s under the 5-minute target", run.wall_seconds));

  const Table t = read_csv(dir.file("out/c1_scaling.csv"));
  v.gate(t.rows.size() == 4, "four grid points");
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double nu = t.at(i, "nu");
    v.gate(nu >= 2e4, format("N = %.0f: nu = %.0f >= 2e4 post-selections",
                             t.at(i, "mean_n_photons"), nu));
  }
  const nlohmann::json meta = metadata_of(dir.file("out/c1_scaling.metadata.json"));
  const double exponent = meta["derived"]["exponent"].get<double>();
  const double exponent_error = meta["derived"]["exponent_error"].get<double>();
  v.note(format("fitted exponent %.4f +- %.4f", exponent, exponent_error));
  v.gate(exponent >= -1.05 && exponent <= -0.95,
         format("power-law exponent %.4f within [-1.05, -0.95]", exponent));
  v.finish();
}

TEST_CASE("criterion 2") {
  Verdict v(2);
  TempDir dir;
  const std::string cfg = dir.file("c2.json");
  write_file(cfg, c2_scaling_json());
  const CliRun run = run_cli(dir, "scaling --config " + cfg + " --out " + dir.file("out"));
  v.gate(run.exit_code == 0, "scaling campaign exits 0");

  const Table t = read_csv(dir.file("out/c2_scaling.csv"));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    v.gate(t.at(i, "nu") >= 2e4, format("N = %.0f: nu = %.0f >= 2e4",
                                        t.at(i, "mean_n_photons"), t.at(i, "nu")));
  }
  const nlohmann::json meta = metadata_of(dir.file("out/c2_scaling.metadata.json"));
  const double exponent = meta["derived"]["exponent"].get<double>();
  v.note(format("fitted exponent %.4f +- %.4f", exponent,
                meta["derived"]["exponent_error"].get<double>()));
  v.gate(exponent >= -0.55 && exponent <= -0.45,
         format("power-law exponent %.4f within [-0.55, -0.45]", exponent));
  v.finish();
}

TEST_CASE("criterion 3") {
  Verdict v(3);
  const ProbeEnsemble ensemble =
      sine_modulated(9e4, depth_for_std(9e4, 4.5e4, true), true, 128);
  const Moments m = moments(ensemble);
  InteractionParams params;
  params.g = 6e-8;
  params.epsilon = 0.1;

  // 1e-9 leaves room for the ~1e-11 relative floor the lgamma-based pmf
  // construction imprints on the realized spread.
  const double linearized = mean_shift_linearized(m, params) / m.mean_n;
  v.gate(std::fabs(linearized / 0.027 - 1.0) <= 1e-9,
         format("linearized shift %.15f equals 0.027", linearized));

  // The first-order value vs the exact-response oracle at the same
  // operating point. The exact response sits well below first order here
  // (the saturation factor 1 - g*N/sin(eps) is ~0.946 already), so the 1%
  // claim cannot hold; the gate stays pinned at its stated tolerance and
  // the measured deviation is reported.
  const ShiftResult exact = postselected_mean_exact(ensemble, params);
  const double deviation = exact.delta_n_normalized / 0.027 - 1.0;
  v.note(format("exact-oracle shift %.10f, deviation from 0.027: %+.2f%%",
                exact.delta_n_normalized, 100.0 * deviation));
  v.gate(std::fabs(deviation) <= 0.01,
         format("exact oracle within 1%% of 0.027 (measured %+.2f%%)", 100.0 * deviation));

  TempDir dir;
  const std::string cfg = dir.file("c3.json");
  write_file(cfg, c3_batch_json());
  const CliRun run = run_cli(dir, "batch --config " + cfg + " --out " + dir.file("out"));
  v.gate(run.exit_code == 0, "batch campaign exits 0");
  const Table t = read_csv(dir.file("out/c3_batch.csv"));
  const double mc = t.at(0, "delta_n_normalized");
  const double se = t.at(0, "standard_error_normalized");
  const double nu = t.at(0, "nu");
  v.gate(std::fabs(mc - exact.delta_n_normalized) <= 5.0 * se,
         format("Monte Carlo shift %.6f within 5 SE (%.2e) of the exact %.6f", mc, se,
                exact.delta_n_normalized));
  const double expected_nu = 79200000.0 * exact.postselect_rate;
  const double nu_sd = std::sqrt(expected_nu * (1.0 - exact.postselect_rate));
  v.gate(std::fabs(nu - expected_nu) <= 5.0 * nu_sd,
         format("nu = %.0f consistent with %.0f (~2.2e5 post-selections)", nu, expected_nu));
  v.finish();
}

TEST_CASE("criterion 4") {
  Verdict v(4);
  const ProbeEnsemble ensemble =
      sine_modulated(1e3, depth_for_std(1e3, 500.0, true), true, 64);
  const Moments m = moments(ensemble);
  InteractionParams base;
  base.g = 1e-6;
  base.epsilon = 0.1;

  const ShiftResult exact0 = postselected_mean_exact(ensemble, base);
  const double lin0 = mean_shift_linearized(m, base);
  const double fisher0 = fisher_classical(ensemble, base);

  TrialConfig trial;
  trial.ensemble = ensemble;
  trial.params = base;
  trial.total_trials = 2000000;
  trial.seed = 777;
  const TrialBatch batch0 = run_batch(trial, 0);

  bool analytic_identical = true;
  bool batch_identical = true;
  for (double g_s : {0.1, 1.0, 10.0}) {
    InteractionParams p = base;
    p.g_s = g_s;
    const ShiftResult e = postselected_mean_exact(ensemble, p);
    analytic_identical = analytic_identical &&
                         e.mean_n_postselected == exact0.mean_n_postselected &&
                         e.delta_n == exact0.delta_n &&
                         e.delta_n_normalized == exact0.delta_n_normalized &&
                         e.postselect_rate == exact0.postselect_rate &&
                         mean_shift_linearized(m, p) == lin0 &&
                         fisher_classical(ensemble, p) == fisher0;
    TrialConfig tc = trial;
    tc.params = p;
    const TrialBatch b = run_batch(tc, 0);
    batch_identical = batch_identical && b.postselected_count == batch0.postselected_count &&
                      b.mean_n == batch0.mean_n &&
                      b.delta_n_normalized == batch0.delta_n_normalized &&
                      b.sigma == batch0.sigma && b.standard_error == batch0.standard_error &&
                      b.clamped_samples == batch0.clamped_samples;
  }
  v.gate(analytic_identical,
         "analytic shift, linearized shift, and Fisher information bitwise-invariant"
         " under g_S in {0, 0.1, 1, 10}");
  v.gate(batch_identical,
         "Monte Carlo batch seed-identical under g_S in {0, 0.1, 1, 10}");
  v.finish();
}

TEST_CASE("criterion 5") {
  Verdict v(5);
  const SystemState pre = make_preselection();
  constexpr double kPi = 3.14159265358979323846;

  double worst_rel = 0.0;
  const double lo = std::log(1e-6), hi = std::log(kPi - 1e-6);
  for (int i = 0; i <= 400; ++i) {
    const double eps = std::exp(lo + (hi - lo) * static_cast<double>(i) / 400.0);
    const Complex cw = weak_value(pre, make_postselection(eps));
    const std::complex<double> value(cw.re, cw.im);
    const std::complex<double> ref(0.5, 0.5 / std::tan(0.5 * eps));
    worst_rel = std::max(worst_rel, std::abs(value - ref) / std::abs(ref));
  }
  v.gate(worst_rel <= 1e-12,
         format("weak value matches 1/2 + (i/2)cot(eps/2): worst relative error %.2e"
                " over eps in [1e-6, pi - 1e-6]",
                worst_rel));

  bool small_eps_ok = true;
  for (double eps : {1e-3, 3e-3, 0.01, 0.03, 0.1}) {
    const Complex cw = weak_value(pre, make_postselection(eps));
    const double defect = std::fabs(eps * cw.im - 1.0);
    small_eps_ok = small_eps_ok && defect < eps * eps / 10.0;
  }
  v.gate(small_eps_ok, "eps * Im C_w -> 1 with error < eps^2/10 for eps <= 0.1");
  v.finish();
}

TEST_CASE("criterion 6") {
  Verdict v(6);
  InteractionParams params;
  params.epsilon = 0.1;

  for (double n : {1e3, 1e4, 1e5}) {
    const double f1 = fisher_classical(proportional_ensemble(n), params);
    const double f2 = fisher_classical(proportional_ensemble(2.0 * n), params);
    v.gate(std::fabs(f2 / f1 - 4.0) <= 0.1,
           format("proportional spread: F(2N)/F(N) = %.6f at N = %.0f (4 +- 0.1)", f2 / f1, n));
  }
  for (double n : {1e3, 1e4, 1e5}) {
    const double f1 = fisher_classical(poissonian(n, 1e-9), params);
    const double f2 = fisher_classical(poissonian(2.0 * n, 1e-9), params);
    v.gate(std::fabs(f2 / f1 - 2.0) <= 0.1,
           format("poissonian spread: F(2N)/F(N) = %.6f at N = %.0f (2 +- 0.1)", f2 / f1, n));
  }
  v.finish();
}

TEST_CASE("criterion 7") {
  Verdict v(7);
  const double span = c7_span_abs();
  v.note(format("fixed g half-width %.6e rad (automatic span of the N = 1e6 point)", span));

  TempDir dir;
  const std::string cfg = dir.file("c7.json");
  write_file(cfg, c7_scaling_json(span));
  const CliRun run = run_cli(dir, "scaling --config " + cfg + " --out " + dir.file("out"));
  v.gate(run.exit_code == 0, "fixed-span scaling campaign exits 0");

  const Table t = read_csv(dir.file("out/c7_scaling.csv"));
  double ratio_1e6 = 0.0, ratio_5e6 = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double n = t.at(i, "mean_n_photons");
    const double ratio = t.at(i, "slope_s_per_rad") / t.at(i, "slope_linear_per_rad");
    v.note(format("N = %.0f: s / s_linear = %.4f", n, ratio));
    if (n == 1e6) ratio_1e6 = ratio;
    if (n == 5e6) ratio_5e6 = ratio;
  }
  v.gate(ratio_1e6 >= 0.95, format("s at N = 1e6 still linear: ratio %.4f >= 0.95", ratio_1e6));
  v.gate(ratio_5e6 < 0.9,
         format("s at N = 5e6 saturated: ratio %.4f < 0.9 of the linear prediction",
                ratio_5e6));
  const nlohmann::json meta = metadata_of(dir.file("out/c7_scaling.metadata.json"));
  v.note(format("fixed-span power-law fit (reported, ungated): exponent %.4f,"
                " prefactor %.4e rad",
                meta["derived"]["exponent"].get<double>(),
                meta["derived"]["prefactor_rad"].get<double>()));
  v.finish();
}

TEST_CASE("criterion 8") {
  Verdict v(8);
  InteractionParams grid_params;
  grid_params.g = 1e-8;
  grid_params.epsilon = 0.1;
  InteractionParams op_params;
  op_params.g = 6e-8;
  op_params.epsilon = 0.1;

  struct Case {
    const char* label;
    ProbeEnsemble ensemble;
    InteractionParams params;
  };
  std::vector<Case> cases;
  for (double n : {3e4, 5e4, 7e4, 1e5}) {
    cases.push_back({"proportional", proportional_ensemble(n), grid_params});
  }
  for (double n : {3e4, 5e4, 7e4, 1e5}) {
    cases.push_back({"poissonian", poissonian(n, 1e-9), grid_params});
  }
  cases.push_back(
      {"operating point", sine_modulated(9e4, depth_for_std(9e4, 4.5e4, true), true, 128),
       op_params});

  constexpr long long kUses = 100000;
  constexpr int kReplications = 100;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Case& c = cases[i];
    const Moments m = moments(c.ensemble);
    TrialConfig config;
    config.ensemble = c.ensemble;
    config.params = c.params;
    config.total_trials = kUses;
    config.seed = derive_seed(20260828, static_cast<uint64_t>(i));

    // Locally unbiased moment estimator: invert the observed shift through
    // the exact response slope at the operating point. The first-order
    // inversion would shrink the fluctuations by s_exact/s_linear and make
    // the floor comparison about inversion bias instead of the Monte Carlo
    // noise itself.
    const double small_span = 0.02 * c.params.epsilon / max_intensity(c.ensemble);
    const double slope = analytic_response_slope(c.ensemble, c.params, small_span);
    const double center = postselected_mean_exact(c.ensemble, c.params).delta_n_normalized;

    const std::vector<TrialBatch> reps = replicate(config, kReplications, 0);
    std::vector<double> estimates;
    estimates.reserve(reps.size());
    double sum = 0.0;
    for (const TrialBatch& batch : reps) {
      const double g_hat = c.params.g + (batch.delta_n_normalized - center) / slope;
      estimates.push_back(g_hat);
      sum += g_hat;
    }
    const double mean = sum / static_cast<double>(estimates.size());
    double ss = 0.0;
    for (double e : estimates) ss += (e - mean) * (e - mean);
    const double std_g = std::sqrt(ss / static_cast<double>(estimates.size() - 1));

    const double crb = cramer_rao_bound(fisher_classical(c.ensemble, c.params), kUses);
    v.gate(std_g >= 0.9 * crb,
           format("%s N = %.0f: std(g_hat) = %.3e >= 0.9 x CRB (%.3e), ratio %.3f", c.label,
                  m.mean_n, std_g, crb, std_g / crb));
  }
  v.finish();
}

TEST_CASE("criterion 9") {
  Verdict v(9);
  TempDir dir;

  struct Campaign {
    std::string name;
    std::string command;
    std::string json;
  };
  const std::vector<Campaign> campaigns = {
      {"c1", "scaling", c1_scaling_json()},
      {"c2", "scaling", c2_scaling_json()},
      {"c3", "batch", c3_batch_json()},
      {"c7", "scaling", c7_scaling_json(c7_span_abs())},
      // Cheap probes for the remaining command families.
      {"aux_eps", "sweep-eps",
       "{\"command\": \"sweep-eps\", \"seed\": 31,"
       " \"ensemble\": {\"kind\": \"sine_modulated\", \"mean_n\": 1000,"
       " \"target_std\": 300, \"nodes\": 64},"
       " \"interaction\": {\"g\": 1e-6, \"epsilon\": 0.1},"
       " \"trials\": {\"total\": 1000000},"
       " \"sweep\": {\"eps_values\": [0.1, 0.2, 0.3]},"
       " \"output\": {\"prefix\": \"aux_eps\"}}"},
      {"aux_fisher", "fisher",
       "{\"command\": \"fisher\", \"seed\": 32,"
       " \"ensemble\": {\"kind\": \"poissonian\", \"mean_n\": 1000},"
       " \"interaction\": {\"epsilon\": 0.1},"
       " \"trials\": {\"total\": 100000},"
       " \"fisher\": {\"n_values\": [1e3, 1e4, 1e5]},"
       " \"output\": {\"prefix\": \"aux_fisher\"}}"},
  };
  const int worker_counts[] = {1, 2, 8};

  for (const Campaign& campaign : campaigns) {
    const std::string cfg = dir.file(campaign.name + ".json");
    write_file(cfg, campaign.json);

    std::vector<std::string> csv_bytes, meta_bytes;
    bool all_exit_zero = true;
    for (int workers : worker_counts) {
      const std::string out_dir = dir.file(campaign.name + "_w" + std::to_string(workers));
      const CliRun run = run_cli(dir, campaign.command + " --config " + cfg + " --workers " +
                                          std::to_string(workers) + " --out " + out_dir);
      all_exit_zero = all_exit_zero && run.exit_code == 0;
      const std::string stem =
          out_dir + "/" + campaign.name + "_" + campaign.command;
      csv_bytes.push_back(read_file(stem + ".csv"));
      meta_bytes.push_back(read_file(stem + ".metadata.json"));
    }
    v.gate(all_exit_zero, campaign.name + ": all worker counts exit 0");
    v.gate(csv_bytes[1] == csv_bytes[0] && csv_bytes[2] == csv_bytes[0],
           campaign.name + ": CSV byte-identical at workers {1, 2, 8}");
    v.gate(meta_bytes[1] == meta_bytes[0] && meta_bytes[2] == meta_bytes[0],
           campaign.name + ": metadata byte-identical at workers {1, 2, 8}");
  }
  v.note("timing documents carry wall-clock data and are exempt by design");
  v.finish();
}
