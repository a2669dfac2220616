#include "kerrsim/probe.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>

#include "kerrsim/errors.hpp"
#include "kerrsim/quadrature.hpp"
#include "kerrsim/summation.hpp"

namespace kerrsim {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;
// Discrete pmfs are enumerated up to this mean; beyond it the continuous
// representation takes over (discreteness corrections are O(1/N)).
constexpr double kPmfMeanLimit = 1e6;
// Per-component truncation half-width for Poissonian shot noise, in standard
// deviations; omitted mass per component ~ 1e-23.
constexpr double kShotZCut = 10.0;
// Hard cap on enumerated pmf entries.
constexpr std::size_t kEntryBudget = std::size_t(1) << 24;
// Gauss-Hermite order for the continuous-representation shot convolution.
constexpr int kShotNodes = 21;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw ValidationError(std::string(what) + " must be finite");
}

// Vose alias table; sampling then costs exactly two uniforms per draw.
void build_alias(DiscretePmf& pmf) {
  const std::size_t k = pmf.w.size();
  pmf.alias_prob.assign(k, 1.0);
  pmf.alias_idx.resize(k);
  for (std::size_t i = 0; i < k; ++i) pmf.alias_idx[i] = static_cast<uint32_t>(i);
  std::vector<double> scaled(k);
  for (std::size_t i = 0; i < k; ++i) scaled[i] = pmf.w[i] * static_cast<double>(k);
  std::vector<uint32_t> small, large;
  for (std::size_t i = 0; i < k; ++i) {
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const uint32_t s = small.back();
    small.pop_back();
    const uint32_t l = large.back();
    large.pop_back();
    pmf.alias_prob[s] = scaled[s];
    pmf.alias_idx[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  // Leftovers on either stack are 1.0 up to rounding.
}

// Normalizes weights to a compensated total of 1 and builds the alias table.
void finalize_pmf(DiscretePmf& pmf) {
  if (pmf.n.empty()) throw EmptyDistribution("probability mass function has no entries");
  CompensatedSum total;
  for (double w : pmf.w) total.add(w);
  const double t = total.value();
  if (!(t > 0.0)) throw EmptyDistribution("probability mass function has zero total mass");
  for (double& w : pmf.w) w /= t;
  build_alias(pmf);
}

// Dense Poisson block over [lo, hi], accumulated into out[n - base] with the
// given scale, evaluated by the two-sided recurrence from the mode (no
// per-entry lgamma).
void add_poisson_block(double lambda, long long lo, long long hi, long long base,
                       double scale, std::vector<double>& out) {
  if (lambda <= 0.0) {
    if (lo <= 0 && 0 <= hi) out[static_cast<std::size_t>(-base)] += scale;
    return;
  }
  long long mode = static_cast<long long>(lambda);
  mode = std::max(lo, std::min(hi, mode));
  const double log_pm =
      static_cast<double>(mode) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(mode) + 1.0);
  const double pm = std::exp(log_pm);
  out[static_cast<std::size_t>(mode - base)] += scale * pm;
  double p = pm;
  for (long long n = mode + 1; n <= hi; ++n) {
    p *= lambda / static_cast<double>(n);
    out[static_cast<std::size_t>(n - base)] += scale * p;
  }
  p = pm;
  for (long long n = mode; n > lo; --n) {
    p *= static_cast<double>(n) / lambda;
    out[static_cast<std::size_t>(n - 1 - base)] += scale * p;
  }
}

std::vector<double> modulation_intensities(double mean_n, double depth, int nodes) {
  std::vector<double> lam(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    const double theta = kTwoPi * (static_cast<double>(j) + 0.5) / static_cast<double>(nodes);
    lam[static_cast<std::size_t>(j)] = std::max(0.0, mean_n * (1.0 - depth * std::sin(theta)));
  }
  return lam;
}

void validate_sine_args(double mean_n, double depth, int nodes) {
  require_finite(mean_n, "mean_n");
  if (!(mean_n > 0.0)) throw ValidationError("mean_n must be > 0");
  require_finite(depth, "depth");
  if (!(depth >= 0.0 && depth <= 1.0)) throw ValidationError("depth must be within [0, 1]");
  if (nodes < 64) throw ValidationError("nodes must be >= 64");
}

}  // namespace

ProbeEnsemble poissonian(double mean_n, double tail_mass_bound) {
  require_finite(mean_n, "mean_n");
  if (!(mean_n > 0.0)) throw ValidationError("mean_n must be > 0");
  require_finite(tail_mass_bound, "tail_mass_bound");
  if (!(tail_mass_bound > 0.0 && tail_mass_bound <= 1e-6)) {
    throw ValidationError("tail_mass_bound must be within (0, 1e-6]");
  }

  const double lambda = mean_n;
  long long mode = static_cast<long long>(lambda);
  const double log_pm =
      static_cast<double>(mode) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(mode) + 1.0);
  const double pm = std::exp(log_pm);

  // Greedy two-sided expansion from the mode. The stop test must not compare
  // the summed mass against 1: pm carries lgamma's absolute exponent error
  // (~lambda*log(lambda)*eps, order 1e-2 at lambda ~ 1e13), a pure scale
  // factor that normalization removes but that would defeat an absolute
  // threshold. Both sides of the test below scale with pm, so it is exact:
  // the omitted tails are geometric-majorant bounded by the frontier terms,
  //   sum_{n>hi} p(n) <= p(hi+1) / (1 - lambda/(hi+2)),
  //   sum_{n<lo} p(n) <= p(lo-1) / (1 - (lo-1)/lambda).
  std::vector<double> left, right;  // p(mode-1), p(mode-2), ... / p(mode+1), ...
  CompensatedSum mass;
  mass.add(pm);
  long long lo = mode, hi = mode;
  double pl = pm, pr = pm;
  double cand_l = (lo > 0) ? pl * static_cast<double>(lo) / lambda : 0.0;
  double cand_r = pr * lambda / static_cast<double>(hi + 1);
  while (true) {
    const double left_tail =
        (lo > 0) ? cand_l / (1.0 - (static_cast<double>(lo) - 1.0) / lambda) : 0.0;
    const double right_tail = cand_r / (1.0 - lambda / static_cast<double>(hi + 2));
    if (left_tail + right_tail <= tail_mass_bound * mass.value()) break;
    if (static_cast<std::size_t>(hi - lo) + 2 > kEntryBudget) {
      throw ResourceLimit("poissonian support exceeds the pmf entry budget");
    }
    if (cand_l >= cand_r && lo > 0) {
      --lo;
      pl = cand_l;
      left.push_back(pl);
      mass.add(pl);
      cand_l = (lo > 0) ? pl * static_cast<double>(lo) / lambda : 0.0;
    } else if (cand_r > 0.0) {
      ++hi;
      pr = cand_r;
      right.push_back(pr);
      mass.add(pr);
      cand_r = pr * lambda / static_cast<double>(hi + 1);
    } else {
      break;  // both frontiers underflowed; remaining mass < bound anyway
    }
  }

  ProbeEnsemble ens;
  DiscretePmf pmf;
  const std::size_t count = left.size() + 1 + right.size();
  pmf.n.reserve(count);
  pmf.w.reserve(count);
  for (std::size_t i = left.size(); i > 0; --i) {
    pmf.n.push_back(static_cast<double>(lo + static_cast<long long>(left.size() - i)));
    pmf.w.push_back(left[i - 1]);
  }
  pmf.n.push_back(static_cast<double>(mode));
  pmf.w.push_back(pm);
  for (std::size_t i = 0; i < right.size(); ++i) {
    pmf.n.push_back(static_cast<double>(mode + 1 + static_cast<long long>(i)));
    pmf.w.push_back(right[i]);
  }
  finalize_pmf(pmf);
  ens.rep = std::move(pmf);
  ens.members = {MixtureMember{mean_n, 1.0, true}};
  return ens;
}

ProbeEnsemble sine_modulated(double mean_n, double depth, bool shot_noise, int nodes) {
  validate_sine_args(mean_n, depth, nodes);
  if (mean_n > kPmfMeanLimit) return sine_modulated_continuous(mean_n, depth, shot_noise, nodes);

  const std::vector<double> lam = modulation_intensities(mean_n, depth, nodes);
  const double member_w = 1.0 / static_cast<double>(nodes);

  ProbeEnsemble ens;
  ens.members.reserve(lam.size());
  for (double l : lam) ens.members.push_back(MixtureMember{l, member_w, shot_noise});

  DiscretePmf pmf;
  if (!shot_noise) {
    // Delta mixture at the modulated intensities.
    std::vector<double> sorted = lam;
    std::sort(sorted.begin(), sorted.end());
    for (double l : sorted) {
      if (!pmf.n.empty() && pmf.n.back() == l) {
        pmf.w.back() += member_w;
      } else {
        pmf.n.push_back(l);
        pmf.w.push_back(member_w);
      }
    }
  } else {
    long long global_lo = -1, global_hi = -1;
    std::vector<long long> los(lam.size()), his(lam.size());
    for (std::size_t j = 0; j < lam.size(); ++j) {
      const double sd = std::sqrt(lam[j]);
      los[j] = std::max(0LL, static_cast<long long>(std::floor(lam[j] - kShotZCut * sd)));
      his[j] = static_cast<long long>(std::ceil(lam[j] + kShotZCut * sd));
      if (global_lo < 0 || los[j] < global_lo) global_lo = los[j];
      if (his[j] > global_hi) global_hi = his[j];
    }
    const std::size_t size = static_cast<std::size_t>(global_hi - global_lo) + 1;
    if (size > kEntryBudget) {
      throw ResourceLimit("sine_modulated support exceeds the pmf entry budget");
    }
    std::vector<double> acc(size, 0.0);
    for (std::size_t j = 0; j < lam.size(); ++j) {
      add_poisson_block(lam[j], los[j], his[j], global_lo, member_w, acc);
    }
    pmf.n.reserve(size);
    pmf.w.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      if (acc[i] > 0.0) {
        pmf.n.push_back(static_cast<double>(global_lo + static_cast<long long>(i)));
        pmf.w.push_back(acc[i]);
      }
    }
  }
  finalize_pmf(pmf);
  ens.rep = std::move(pmf);
  return ens;
}

ProbeEnsemble sine_modulated_continuous(double mean_n, double depth, bool shot_noise, int nodes) {
  validate_sine_args(mean_n, depth, nodes);
  ProbeEnsemble ens;
  ens.rep = ModulatedContinuous{mean_n, depth, shot_noise, nodes};
  const QuadratureRule rule = gauss_legendre(nodes);
  ens.members.reserve(rule.nodes.size());
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = kPi * (rule.nodes[i] + 1.0);
    const double lam = std::max(0.0, mean_n * (1.0 - depth * std::sin(theta)));
    ens.members.push_back(MixtureMember{lam, 0.5 * rule.weights[i], shot_noise});
  }
  return ens;
}

double depth_for_std(double mean_n, double target_std, bool shot_noise) {
  require_finite(mean_n, "mean_n");
  if (!(mean_n > 0.0)) throw ValidationError("mean_n must be > 0");
  require_finite(target_std, "target_std");
  if (!(target_std >= 0.0)) throw ValidationError("target_std must be >= 0");
  const double shot_var = shot_noise ? mean_n : 0.0;
  const double var = target_std * target_std;
  if (var < shot_var) {
    throw ValidationError("target_std is below the Poissonian shot-noise floor sqrt(mean_n)");
  }
  if (2.0 * (var - shot_var) > mean_n * mean_n) {
    throw UnreachableVariance("target_std exceeds the full-depth limit sqrt(mean_n^2/2 + shot)");
  }
  return std::min(1.0, std::sqrt(2.0 * (var - shot_var)) / mean_n);
}

ProbeEnsemble from_pmf(const std::vector<std::pair<double, double>>& entries) {
  std::vector<std::pair<double, double>> kept;
  kept.reserve(entries.size());
  for (const auto& [n, w] : entries) {
    require_finite(n, "pmf intensity");
    require_finite(w, "pmf weight");
    if (n < 0.0) throw ValidationError("pmf intensity must be >= 0");
    if (w < 0.0) throw ValidationError("pmf weight must be >= 0");
    if (w > 0.0) kept.emplace_back(n, w);
  }
  if (kept.empty()) throw EmptyDistribution("pmf has no entry with positive weight");
  std::sort(kept.begin(), kept.end());

  ProbeEnsemble ens;
  DiscretePmf pmf;
  for (const auto& [n, w] : kept) {
    if (!pmf.n.empty() && pmf.n.back() == n) {
      pmf.w.back() += w;
    } else {
      pmf.n.push_back(n);
      pmf.w.push_back(w);
    }
  }
  finalize_pmf(pmf);
  ens.rep = std::move(pmf);
  return ens;  // members left empty: each entry is its own zero-variance member
}

ProbeEnsemble from_pmf_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pmf file: " + path);
  std::vector<std::pair<double, double>> entries;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r\n\f\v") == std::string::npos) continue;
    std::istringstream iss(line);
    double n = 0.0, w = 0.0;
    if (!(iss >> n >> w)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected two numeric columns (n, weight)");
    }
    std::string extra;
    if (iss >> extra) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": trailing content after the two columns");
    }
    entries.emplace_back(n, w);
  }
  return from_pmf(entries);
}

Moments moments(const ProbeEnsemble& ensemble) {
  Moments m;
  if (ensemble.is_discrete()) {
    const DiscretePmf& pmf = ensemble.pmf();
    CompensatedSum mean;
    for (std::size_t i = 0; i < pmf.n.size(); ++i) mean.add(pmf.w[i] * pmf.n[i]);
    m.mean_n = mean.value();
    CompensatedSum var;
    for (std::size_t i = 0; i < pmf.n.size(); ++i) {
      const double d = pmf.n[i] - m.mean_n;
      var.add(pmf.w[i] * d * d);
    }
    m.std_dn = std::sqrt(std::max(0.0, var.value()));
  } else {
    const ModulatedContinuous& c = ensemble.continuous();
    m.mean_n = c.mean_n;
    const double var = 0.5 * c.mean_n * c.mean_n * c.depth * c.depth + (c.shot_noise ? c.mean_n : 0.0);
    m.std_dn = std::sqrt(var);
  }
  return m;
}

double max_intensity(const ProbeEnsemble& ensemble) {
  if (ensemble.is_discrete()) return ensemble.pmf().n.back();
  const ModulatedContinuous& c = ensemble.continuous();
  const double top = c.mean_n * (1.0 + c.depth);
  return top + (c.shot_noise ? 10.0 * std::sqrt(top) : 0.0);
}

double sample(const ProbeEnsemble& ensemble, RandomStream& rng, SampleStats* stats) {
  if (ensemble.is_discrete()) {
    const DiscretePmf& pmf = ensemble.pmf();
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    std::size_t i = static_cast<std::size_t>(u1 * static_cast<double>(pmf.n.size()));
    if (i >= pmf.n.size()) i = pmf.n.size() - 1;
    return (u2 < pmf.alias_prob[i]) ? pmf.n[i] : pmf.n[pmf.alias_idx[i]];
  }
  const ModulatedContinuous& c = ensemble.continuous();
  const double theta = kTwoPi * rng.uniform();
  const double lam = std::max(0.0, c.mean_n * (1.0 - c.depth * std::sin(theta)));
  if (!c.shot_noise) return lam;
  double v = lam + std::sqrt(lam) * rng.normal();
  if (v < 0.0) {
    v = 0.0;
    if (stats) ++stats->clamped;
  }
  return v;
}

void ensemble_scan(const ProbeEnsemble& ensemble,
                   const std::function<void(double, double)>& visit) {
  if (ensemble.is_discrete()) {
    const DiscretePmf& pmf = ensemble.pmf();
    for (std::size_t i = 0; i < pmf.n.size(); ++i) visit(pmf.n[i], pmf.w[i]);
    return;
  }
  const ModulatedContinuous& c = ensemble.continuous();
  const QuadratureRule theta_rule = gauss_legendre(c.quadrature_nodes);
  if (!c.shot_noise) {
    for (std::size_t i = 0; i < theta_rule.nodes.size(); ++i) {
      const double theta = kPi * (theta_rule.nodes[i] + 1.0);
      const double lam = std::max(0.0, c.mean_n * (1.0 - c.depth * std::sin(theta)));
      visit(lam, 0.5 * theta_rule.weights[i]);
    }
    return;
  }
  const QuadratureRule shot_rule = gauss_hermite_unit(kShotNodes);
  for (std::size_t i = 0; i < theta_rule.nodes.size(); ++i) {
    const double theta = kPi * (theta_rule.nodes[i] + 1.0);
    const double lam = std::max(0.0, c.mean_n * (1.0 - c.depth * std::sin(theta)));
    const double w_theta = 0.5 * theta_rule.weights[i];
    const double sd = std::sqrt(lam);
    for (std::size_t k = 0; k < shot_rule.nodes.size(); ++k) {
      visit(std::max(0.0, lam + sd * shot_rule.nodes[k]), w_theta * shot_rule.weights[k]);
    }
  }
}

double ensemble_expect(const ProbeEnsemble& ensemble, const std::function<double(double)>& f) {
  CompensatedSum sum;
  ensemble_scan(ensemble, [&](double x, double w) { sum.add(w * f(x)); });
  return sum.value();
}

}  // namespace kerrsim
