#include "kerrsim/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "kerrsim/errors.hpp"
#include "kerrsim/estimation.hpp"
#include "kerrsim/experiments.hpp"
#include "kerrsim/montecarlo.hpp"
#include "kerrsim/version.hpp"

namespace kerrsim {
namespace {

using ordered_json = nlohmann::ordered_json;

const char* fit_kind_name(FitKind kind) {
  switch (kind) {
    case FitKind::linear:
      return "linear";
    case FitKind::gaussian:
      return "gaussian";
    case FitKind::powerlaw:
      return "powerlaw";
  }
  return "unknown";
}

ordered_json fit_json(const FitResult& fit) {
  ordered_json j;
  j["kind"] = fit_kind_name(fit.kind);
  j["parameters"] = fit.parameters;
  j["parameter_errors"] = fit.parameter_errors;
  j["residual_norm"] = fit.residual_norm;
  return j;
}

ordered_json ensemble_json(const ProbeEnsemble& ensemble) {
  const Moments m = moments(ensemble);
  ordered_json j;
  j["mean_n_photons"] = m.mean_n;
  j["std_dn_photons"] = m.std_dn;
  j["max_intensity_photons"] = max_intensity(ensemble);
  j["representation"] = ensemble.is_discrete() ? "discrete_pmf" : "continuous_quadrature";
  if (ensemble.is_discrete()) j["pmf_entries"] = ensemble.pmf().n.size();
  return j;
}

void append_sweep_rows(ResultRecord& rec, const SweepResult& sweep,
                       const std::vector<double>* extra_axis) {
  for (std::size_t i = 0; i < sweep.axis_values.size(); ++i) {
    std::vector<double> row;
    row.push_back(sweep.axis_values[i]);
    if (extra_axis) row.push_back((*extra_axis)[i]);
    row.push_back(sweep.delta_n_normalized[i]);
    row.push_back(sweep.standard_errors[i]);
    row.push_back(static_cast<double>(sweep.postselected_counts[i]));
    rec.rows.push_back(std::move(row));
  }
}

}  // namespace

ResultRecord run(const CampaignConfig& config, int workers) {
  const auto t_start = std::chrono::steady_clock::now();

  ResultRecord rec;
  rec.command = config.command;

  TrialConfig base;
  base.params = config.interaction;
  base.total_trials = config.trials.total;
  base.readout_noise_std = config.trials.readout_noise_std;
  base.seed = config.seed;

  ordered_json derived;
  if (config.command != "scaling") {
    base.ensemble = build_ensemble(config.ensemble);
    derived["ensemble"] = ensemble_json(base.ensemble);
  }

  if (config.command == "batch") {
    const TrialBatch batch = run_batch(base, workers);
    const Moments m = moments(base.ensemble);
    double g_hat = std::numeric_limits<double>::quiet_NaN();
    double g_err = std::numeric_limits<double>::quiet_NaN();
    if (m.std_dn > 0.0) {
      g_hat = estimate_g(batch.delta_n_normalized * m.mean_n, m, config.interaction.epsilon);
      g_err = estimate_g(batch.standard_error * m.mean_n, m, config.interaction.epsilon);
    }
    rec.columns = {"g_rad",
                   "epsilon_rad",
                   "mean_n_photons",
                   "delta_n_normalized",
                   "sigma_normalized",
                   "standard_error_normalized",
                   "nu",
                   "clamped_samples",
                   "estimated_g_rad",
                   "estimated_g_error_rad"};
    rec.rows = {{config.interaction.g, config.interaction.epsilon, batch.mean_n,
                 batch.delta_n_normalized, batch.sigma, batch.standard_error,
                 static_cast<double>(batch.postselected_count),
                 static_cast<double>(batch.clamped_samples), g_hat, g_err}};
    derived["postselect_rate"] = static_cast<double>(batch.postselected_count) /
                                 static_cast<double>(config.trials.total);
    derived["clamped_samples"] = batch.clamped_samples;
  } else if (config.command == "sweep-g") {
    if (config.sweep.delay) {
      const DelayModel& model = *config.sweep.delay;
      const SweepResult sweep =
          sweep_coupling_delay(base, model, config.sweep.tau_values, workers);
      std::vector<double> g_axis(sweep.axis_values.size());
      for (std::size_t i = 0; i < g_axis.size(); ++i) {
        const double tau = sweep.axis_values[i];
        g_axis[i] = model.g_peak * std::exp(-tau * tau / (2.0 * model.tau_c * model.tau_c));
      }
      rec.columns = {"tau", "g_rad", "delta_n_normalized", "standard_error_normalized", "nu"};
      append_sweep_rows(rec, sweep, &g_axis);
      derived["fit"] = fit_json(sweep.fit);
    } else {
      const SweepResult sweep = sweep_coupling(base, config.sweep.g_values, workers);
      rec.columns = {"g_rad", "delta_n_normalized", "standard_error_normalized", "nu"};
      append_sweep_rows(rec, sweep, nullptr);
      derived["fit"] = fit_json(sweep.fit);
    }
  } else if (config.command == "sweep-dn") {
    const SweepResult sweep = sweep_variance(base, config.sweep.dn_values, workers);
    rec.columns = {"target_std_photons", "delta_n_normalized", "standard_error_normalized", "nu"};
    append_sweep_rows(rec, sweep, nullptr);
    derived["fit"] = fit_json(sweep.fit);
    derived["recovered_g_rad"] = *sweep.recovered_g;
    derived["recovered_g_error_rad"] = *sweep.recovered_g_error;
  } else if (config.command == "sweep-eps") {
    const SweepResult sweep = sweep_epsilon(base, config.sweep.eps_values, workers);
    std::vector<double> inv_eps(sweep.axis_values.size());
    for (std::size_t i = 0; i < inv_eps.size(); ++i) inv_eps[i] = 1.0 / sweep.axis_values[i];
    rec.columns = {"epsilon_rad", "inverse_epsilon_per_rad", "delta_n_normalized",
                   "standard_error_normalized", "nu"};
    append_sweep_rows(rec, sweep, &inv_eps);
    derived["fit"] = fit_json(sweep.fit);
    derived["recovered_g_rad"] = *sweep.recovered_g;
    derived["recovered_g_error_rad"] = *sweep.recovered_g_error;
  } else if (config.command == "scaling") {
    const ScalingResult scaling = scaling_study(config.scaling.grid, config.scaling.policy, base,
                                                config.scaling.options, workers);
    rec.columns = {"mean_n_photons", "slope_s_per_rad", "slope_linear_per_rad",
                   "sigma_normalized", "nu", "delta_g_rad", "included_in_fit"};
    ordered_json excluded = ordered_json::array();
    for (std::size_t i = 0; i < scaling.points.size(); ++i) {
      const ScalingPoint& p = scaling.points[i];
      rec.rows.push_back({p.mean_n, p.slope_s, scaling.slope_linear[i], p.sigma,
                          static_cast<double>(p.nu), p.delta_g,
                          scaling.included_in_fit[i] ? 1.0 : 0.0});
      if (!scaling.included_in_fit[i]) excluded.push_back(p.mean_n);
    }
    derived["fit"] = fit_json(scaling.fit);
    derived["exponent"] = scaling.fit.parameters[0];
    derived["exponent_error"] = scaling.fit.parameter_errors[0];
    derived["prefactor_rad"] = scaling.fit.parameters[1];
    derived["excluded_mean_n"] = std::move(excluded);
  } else {  // fisher
    const SystemState pre = make_preselection();
    rec.columns = {"mean_n_photons", "fisher_classical_per_rad2", "qfi_upper_per_rad2",
                   "cramer_rao_dg_rad"};
    for (double n : config.fisher.n_values) {
      const ProbeEnsemble ensemble = build_ensemble_at(config.ensemble, n);
      const double fisher = fisher_classical(ensemble, config.interaction);
      const double qfi = qfi_mixed_upper_bound(ensemble, pre);
      const double bound = cramer_rao_bound(qfi, config.trials.total);
      rec.rows.push_back({n, fisher, qfi, bound});
    }
    derived["uses"] = config.trials.total;
  }

  ordered_json meta;
  meta["version"] = kVersion;
  meta["command"] = config.command;
  if (!config.source_path.empty()) meta["config_path"] = config.source_path;
  meta["config"] = ordered_json::parse(config_echo_json(config));
  meta["derived"] = std::move(derived);
  rec.metadata_json = meta.dump(2);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  ordered_json timing;
  timing["workers_requested"] = workers;
  timing["wall_seconds"] = wall;
  rec.timing_json = timing.dump(2);
  return rec;
}

std::string emit_table(const ResultRecord& result, const std::string& dir,
                       const std::string& prefix) {
  namespace fs = std::filesystem;
  if (dir.empty()) throw IoError("output directory must not be empty");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

  const std::string stem = (fs::path(dir) / (prefix + "_" + result.command)).string();
  const std::string csv_path = stem + ".csv";
  {
    std::ofstream csv(csv_path, std::ios::binary | std::ios::trunc);
    if (!csv) throw IoError("cannot open " + csv_path + " for writing");
    for (std::size_t i = 0; i < result.columns.size(); ++i) {
      if (i) csv << ',';
      csv << result.columns[i];
    }
    csv << '\n';
    char cell[64];
    for (const std::vector<double>& row : result.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) csv << ',';
        std::snprintf(cell, sizeof cell, "%.17g", row[i]);
        csv << cell;
      }
      csv << '\n';
    }
    csv.flush();
    if (!csv.good()) throw IoError("write failed: " + csv_path);
  }
  const auto write_text = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text << '\n';
    out.flush();
    if (!out.good()) throw IoError("write failed: " + path);
  };
  write_text(stem + ".metadata.json", result.metadata_json);
  write_text(stem + ".timing.json", result.timing_json);
  return csv_path;
}

}  // namespace kerrsim
