// Copyright 2026 The ataflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>

#include "cli.hpp"

#include "ataflow/flows.hpp"
#include "ataflow/tails.hpp"

namespace ataflow::cli {

namespace fs = std::filesystem;
using vi::FamilyKind;

namespace {

constexpr std::array<FamilyKind, 3> kFamilies = {FamilyKind::kAdvi, FamilyKind::kTaf,
                                                 FamilyKind::kAtaf};

// Conjugate BLR data set: n = 10 keeps the sigma^2 tail index a_n at 7.
constexpr std::size_t kBlrRows = 10;
constexpr double kBlrA0 = 2.0;
constexpr double kBlrB0 = 2.0;

struct Setup {
  std::string name;
  targets::TargetModel target;
  vi::TrainConfig config;
  flows::FlowOptions options;
  Preset preset;
  std::vector<std::uint64_t> seeds;
  fs::path out;
};

Setup make_setup(const std::string& name, targets::TargetModel target,
                 const ReproduceOptions& o) {
  Setup s{name, std::move(target), {}, {}, preset_for(name, o.preset), {}, o.out};
  s.config.steps = o.steps.value_or(s.preset.steps);
  s.config.lr = o.lr.value_or(s.preset.lr);
  s.config.elbo_samples = o.elbo_samples.value_or(s.preset.elbo_samples);
  s.config.eval_samples = o.eval_samples.value_or(s.preset.eval_samples);
  s.config.validate();
  s.options.hidden = o.hidden.value_or(default_hidden(s.target.dim));
  s.options.layers = o.layers;
  s.seeds = o.seeds.empty() ? s.preset.seeds : o.seeds;
  return s;
}

const vi::TrainResult& result_of(const vi::StagedRun& run, FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kAdvi: return run.advi_result;
    case FamilyKind::kTaf: return run.taf_result;
    case FamilyKind::kAtaf: return *run.ataf_result;
  }
  return run.advi_result;
}

const flows::FlowStack& stack_of(const vi::StagedRun& run, FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kAdvi: return run.advi;
    case FamilyKind::kTaf: return run.taf;
    case FamilyKind::kAtaf: return run.ataf;
  }
  return run.advi;
}

std::vector<vi::StagedRun> staged_sweep(const Setup& s) {
  std::vector<std::optional<vi::StagedRun>> slots(s.seeds.size());
  parallel_for(s.seeds.size(), [&](std::size_t i) {
    vi::TrainConfig c = s.config;
    c.seed = s.seeds[i];
    slots[i] = vi::staged_run(s.target, c, s.options);
    for (FamilyKind kind : kFamilies) {
      const vi::TrainResult& r = result_of(*slots[i], kind);
      const std::string stem =
          vi::to_string(kind) + "_seed" + std::to_string(s.seeds[i]);
      write_file(s.out / "runs" / (stem + ".json"), vi::to_json(r).dump(2) + "\n");
      write_file(s.out / "runs" / (stem + "_trace.csv"), vi::trace_csv(r.trace));
    }
  });
  std::vector<vi::StagedRun> runs;
  for (auto& slot : slots) runs.push_back(std::move(*slot));
  return runs;
}

Matrix draws(const flows::FlowStack& stack, std::size_t n, std::uint64_t seed) {
  dist::Rng rng(seed ^ 0x7a11ULL);
  return stack.sample(n, rng).values;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Across-seed mean and standard error; a single run falls back to its own
// Monte-Carlo standard error.
MeanSe across(const std::vector<vi::Estimate>& e) {
  MeanSe m;
  for (const auto& x : e) m.mean += x.mean;
  m.mean /= static_cast<double>(e.size());
  if (e.size() == 1) {
    m.se = e[0].std_error;
    return m;
  }
  double ss = 0.0;
  for (const auto& x : e) ss += (x.mean - m.mean) * (x.mean - m.mean);
  m.se = std::sqrt(ss / static_cast<double>(e.size() - 1) / static_cast<double>(e.size()));
  return m;
}

nlohmann::json family_record(FamilyKind kind, const std::vector<vi::StagedRun>& runs,
                             const std::vector<std::uint64_t>& seeds,
                             const std::string& verdict) {
  std::vector<vi::Estimate> elbo, logpy;
  std::vector<double> nu;
  nlohmann::json per_seed = nlohmann::json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const vi::TrainResult& r = result_of(runs[i], kind);
    elbo.push_back(r.elbo);
    logpy.push_back(r.log_py);
    if (nu.empty()) nu.assign(r.nu.size(), 0.0);
    for (std::size_t j = 0; j < r.nu.size(); ++j) nu[j] += r.nu[j] / runs.size();
    per_seed.push_back({{"seed", seeds[i]},
                        {"elbo", r.elbo.mean},
                        {"elbo_stderr", r.elbo.std_error},
                        {"logpy", r.log_py.mean},
                        {"logpy_stderr", r.log_py.std_error},
                        {"nu", r.nu},
                        {"skipped_steps", r.skipped_steps}});
  }
  const MeanSe e = across(elbo);
  const MeanSe l = across(logpy);
  return {{"family", vi::to_string(kind)},
          {"elbo_mean", e.mean},
          {"elbo_stderr", e.se},
          {"logpy_mean", l.mean},
          {"logpy_stderr", l.se},
          {"nu_values", nu},
          {"tail_verdict", verdict},
          {"seeds", per_seed}};
}

nlohmann::json check(const std::string& name, bool passed, const std::string& detail) {
  return {{"name", name}, {"passed", passed}, {"detail", detail}};
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

nlohmann::json base_summary(const Setup& s, const std::string& preset) {
  return {{"experiment", s.name},
          {"preset", preset},
          {"target", s.target.name},
          {"dim", s.target.dim},
          {"hidden", s.options.hidden},
          {"layers", s.options.layers},
          {"steps", s.config.steps},
          {"lr", s.config.lr},
          {"elbo_samples", s.config.elbo_samples},
          {"eval_samples", s.config.eval_samples},
          {"tail_samples", s.preset.tail_samples},
          {"seeds", s.seeds},
          {"families", nlohmann::json::array()},
          {"checks", nlohmann::json::array()}};
}

struct FamilyTails {
  tails::TailReport report;
  Matrix samples;
};

// Tail report of each family's first-seed flow, written as tails_<family>.*.
std::vector<FamilyTails> family_tails(const Setup& s, const std::vector<vi::StagedRun>& runs) {
  std::vector<FamilyTails> out;
  for (FamilyKind kind : kFamilies) {
    FamilyTails ft;
    ft.samples = draws(stack_of(runs[0], kind), s.preset.tail_samples, s.seeds[0]);
    ft.report = tails::tail_parameter_function(ft.samples,
                                               tails::default_directions(s.target.dim));
    write_file(s.out / ("tails_" + vi::to_string(kind) + ".json"),
               tails::to_json(ft.report).dump(2) + "\n");
    write_file(s.out / ("tails_" + vi::to_string(kind) + ".csv"), tails::to_csv(ft.report));
    out.push_back(std::move(ft));
  }
  return out;
}

void add_families(nlohmann::json& summary, const Setup& s,
                  const std::vector<vi::StagedRun>& runs,
                  const std::vector<FamilyTails>& ft) {
  for (std::size_t f = 0; f < kFamilies.size(); ++f) {
    summary["families"].push_back(family_record(kFamilies[f], runs, s.seeds,
                                                tails::to_string(ft[f].report.isotropy)));
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_slices(const Setup& s, const std::vector<vi::StagedRun>& runs,
                  const std::string& file, std::size_t axis, double lo, double hi,
                  std::size_t points) {
  std::string csv = "x,log_target,log_q_advi,log_q_taf,log_q_ataf\n";
  std::vector<double> y(s.target.dim, 0.0);
  for (std::size_t i = 0; i < points; ++i) {
    y[axis] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    csv += g17(y[axis]) + "," + g17(s.target.log_density(y));
    for (FamilyKind kind : kFamilies) csv += "," + g17(stack_of(runs[0], kind).log_prob(y));
    csv += "\n";
  }
  write_file(s.out / file, csv);
}

nlohmann::json cauchy_appb(const Setup& s, const std::string& preset) {
  constexpr std::size_t kRepeats = 1000;
  constexpr std::size_t kBatch = 100;
  const std::vector<vi::StagedRun> runs = staged_sweep(s);
  const auto ft = family_tails(s, runs);
  nlohmann::json summary = base_summary(s, preset);
  add_families(summary, s, runs, ft);

  const auto& cdf = s.target.reference.marginal_cdf.at(0);
  std::string pcsv = "family,seed,p_value\n";
  std::string hcsv = "family,bin_low,bin_high,count\n";
  std::vector<std::array<double, 3>> medians(runs.size());
  for (std::size_t f = 0; f < kFamilies.size(); ++f) {
    std::vector<std::size_t> hist(20, 0);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      dist::Rng rng(s.seeds[i] * 7919 + f + 0x5151);
      const flows::FlowStack& stack = stack_of(runs[i], kFamilies[f]);
      std::vector<double> p(kRepeats);
      std::vector<double> batch(kBatch);
      for (std::size_t r = 0; r < kRepeats; ++r) {
        const Matrix x = stack.sample(kBatch, rng).values;
        for (std::size_t j = 0; j < kBatch; ++j) batch[j] = x(j, 0);
        p[r] = tails::ks_test(batch, cdf).p_value;
        ++hist[std::min<std::size_t>(19, static_cast<std::size_t>(p[r] * 20.0))];
        pcsv += vi::to_string(kFamilies[f]) + "," + std::to_string(s.seeds[i]) + "," +
                g17(p[r]) + "\n";
      }
      medians[i][f] = median(p);
      summary["families"][f]["seeds"][i]["ks_median_p"] = medians[i][f];
    }
    for (std::size_t b = 0; b < hist.size(); ++b) {
      hcsv += vi::to_string(kFamilies[f]) + "," + fmt("%.2f,%.2f", b / 20.0, (b + 1) / 20.0) +
              "," + std::to_string(hist[b]) + "\n";
    }
  }
  write_file(s.out / "ks_pvalues.csv", pcsv);
  write_file(s.out / "ks_histogram.csv", hcsv);
  write_slices(s, runs, "density_slices.csv", 0, -30.0, 30.0, 601);

  bool ks_ok = true, nu_ok = true;
  std::string ks_detail, nu_detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    ks_ok = ks_ok && medians[i][2] > medians[i][0];
    ks_detail += fmt("%.3f/%.3f ", medians[i][2], medians[i][0]);
    const double nu = runs[i].ataf_result->nu.at(0);
    nu_ok = nu_ok && nu >= 0.6 && nu <= 1.6;
    nu_detail += fmt("%.3f ", nu);
  }
  summary["checks"].push_back(check("ks_median_ataf_above_advi", ks_ok,
                                    "ATAF/ADVI median KS p per seed: " + ks_detail));
  summary["checks"].push_back(check("ataf_nu_in_range", nu_ok, "ATAF nu per seed: " + nu_detail));
  return summary;
}

// Row of report.directions equal to v, or npos.
std::size_t direction_index(const tails::TailReport& report, std::array<double, 2> v) {
  for (std::size_t r = 0; r < report.directions.rows(); ++r) {
    if (std::fabs(report.directions(r, 0) - v[0]) < 1e-12 &&
        std::fabs(report.directions(r, 1) - v[1]) < 1e-12) {
      return r;
    }
  }
  return static_cast<std::size_t>(-1);
}

nlohmann::json aniso_fig1(const Setup& s, const std::string& preset) {
  const std::vector<vi::StagedRun> runs = staged_sweep(s);
  const auto ft = family_tails(s, runs);
  nlohmann::json summary = base_summary(s, preset);
  add_families(summary, s, runs, ft);
  write_slices(s, runs, "density_slice_x.csv", 0, -30.0, 30.0, 601);
  write_slices(s, runs, "density_slice_y.csv", 1, -8.0, 8.0, 321);

  const auto& ataf = ft[2].report;
  const auto alpha = [&](std::array<double, 2> v) {
    const std::size_t r = direction_index(ataf, v);
    return r < ataf.alpha_hat.size() ? ataf.alpha_hat[r] : std::nan("");
  };
  const double ax = alpha({1.0, 0.0}), axm = alpha({-1.0, 0.0});
  const double ay = alpha({0.0, 1.0}), aym = alpha({0.0, -1.0});
  summary["checks"].push_back(check("ataf_anisotropic",
                                    ataf.isotropy == tails::Isotropy::kAnisotropic,
                                    "ATAF verdict " + tails::to_string(ataf.isotropy)));
  summary["checks"].push_back(
      check("ataf_fat_axis_alpha", ax >= 0.7 && ax <= 1.4 && axm >= 0.7 && axm <= 1.4,
            fmt("alpha(+e_x) %.3f, alpha(-e_x) %.3f", ax, axm)));
  summary["checks"].push_back(check("ataf_light_axis_not_power_law",
                                    std::isinf(ay) && std::isinf(aym),
                                    fmt("alpha(+e_y) %g, alpha(-e_y) %g", ay, aym)));
  summary["checks"].push_back(check("taf_isotropic",
                                    ft[1].report.isotropy == tails::Isotropy::kIsotropic,
                                    "TAF verdict " + tails::to_string(ft[1].report.isotropy)));
  summary["checks"].push_back(check("advi_isotropic",
                                    ft[0].report.isotropy == tails::Isotropy::kIsotropic,
                                    "ADVI verdict " + tails::to_string(ft[0].report.isotropy)));
  return summary;
}

std::string tail_curve_rows(const std::string& label, const Matrix& x,
                            const std::vector<std::string>& names) {
  std::string csv;
  std::vector<double> col(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    for (std::size_t i = 0; i < x.rows(); ++i) col[i] = x(i, j);
    std::sort(col.begin(), col.end());
    for (std::size_t l = 0; l < 30; ++l) {
      const double surv = std::pow(10.0, -1.0 - 3.0 * static_cast<double>(l) / 29.0);
      const auto idx = static_cast<std::size_t>(
          std::min<double>(static_cast<double>(col.size() - 1),
                           std::floor((1.0 - surv) * static_cast<double>(col.size()))));
      csv += label + "," + names[j] + "," + g17(surv) + "," + g17(col[idx]) + "\n";
    }
  }
  return csv;
}

nlohmann::json blr_fig3(const Setup& s, const std::string& preset,
                        const targets::BlrPosterior& posterior) {
  const std::vector<vi::StagedRun> runs = staged_sweep(s);
  const auto ft = family_tails(s, runs);
  nlohmann::json summary = base_summary(s, preset);
  add_families(summary, s, runs, ft);
  summary["data_rows"] = kBlrRows;
  summary["a_n"] = posterior.a_n;
  summary["b_n"] = posterior.b_n;

  const std::vector<std::string>& names = s.target.coordinate_names;
  const std::size_t beta = 0, sigma2 = s.target.dim - 1;
  std::string curves = "family,coordinate,survival,quantile\n";
  Matrix exact(s.preset.tail_samples, s.target.dim);
  dist::Rng rng(s.seeds[0] ^ 0xb1aULL);
  for (std::size_t i = 0; i < exact.rows(); ++i) s.target.reference.sampler(rng, exact.row(i));
  curves += tail_curve_rows("analytic", exact, names);

  std::vector<tails::TailClassVerdict> ataf_verdicts;
  for (std::size_t f = 0; f < kFamilies.size(); ++f) {
    curves += tail_curve_rows(vi::to_string(kFamilies[f]), ft[f].samples, names);
    nlohmann::json marginals = nlohmann::json::array();
    std::vector<double> col(ft[f].samples.rows());
    for (std::size_t j = 0; j < s.target.dim; ++j) {
      for (std::size_t i = 0; i < col.size(); ++i) col[i] = ft[f].samples(i, j);
      const tails::TailClassVerdict v = tails::classify_tail(col);
      nlohmann::json m = tails::to_json(v);
      m["coordinate"] = names[j];
      marginals.push_back(m);
      if (kFamilies[f] == FamilyKind::kAtaf) ataf_verdicts.push_back(v);
    }
    summary["families"][f]["marginals"] = marginals;
  }
  write_file(s.out / "tail_curves.csv", curves);

  const double expected_a = kBlrA0 + static_cast<double>(kBlrRows) / 2.0;
  summary["checks"].push_back(check("posterior_shape_a_n", posterior.a_n == expected_a,
                                    fmt("a_n %.17g, a0 + n/2 = %.17g", posterior.a_n,
                                        expected_a)));
  summary["checks"].push_back(
      check("ataf_sigma2_logarithmic",
            ataf_verdicts[sigma2].family == tails::TailFamily::kLogarithmic,
            "sigma^2 marginal " + tails::to_string(ataf_verdicts[sigma2].family)));
  summary["checks"].push_back(
      check("ataf_beta_exponential",
            ataf_verdicts[beta].family == tails::TailFamily::kExponential,
            "beta marginal " + tails::to_string(ataf_verdicts[beta].family)));
  return summary;
}

nlohmann::json eight_schools(const Setup& s, const std::string& preset) {
  const std::vector<vi::StagedRun> runs = staged_sweep(s);
  const auto ft = family_tails(s, runs);
  nlohmann::json summary = base_summary(s, preset);
  add_families(summary, s, runs, ft);
  const auto& fam = summary["families"];
  const double advi = fam[0]["elbo_mean"], taf = fam[1]["elbo_mean"];
  const double ataf = fam[2]["elbo_mean"], taf_se = fam[1]["elbo_stderr"];
  summary["checks"].push_back(check("ataf_elbo_at_least_advi", ataf >= advi,
                                    fmt("ATAF %.4f, ADVI %.4f", ataf, advi)));
  summary["checks"].push_back(check("ataf_elbo_within_stderr_of_taf", ataf >= taf - taf_se,
                                    fmt("ATAF %.4f, TAF %.4f - %.4f", ataf, taf, taf_se)));
  return summary;
}

nlohmann::json normal_normal(const Setup& s, const std::string& preset) {
  const std::vector<vi::StagedRun> runs = staged_sweep(s);
  const auto ft = family_tails(s, runs);
  nlohmann::json summary = base_summary(s, preset);
  add_families(summary, s, runs, ft);
  write_slices(s, runs, "density_slices.csv", 0, -2.0, 6.0, 401);
  const double exact = *s.target.reference.log_normalizer;
  summary["analytic_log_py"] = exact;
  const auto& fam = summary["families"];
  const double advi = fam[0]["elbo_mean"], ataf = fam[2]["elbo_mean"];
  const double logpy = fam[2]["logpy_mean"];
  summary["checks"].push_back(check("ataf_no_worse_than_advi", ataf >= advi - 0.1,
                                    fmt("ATAF %.4f, ADVI %.4f", ataf, advi)));
  summary["checks"].push_back(check("ataf_log_py_matches_closed_form",
                                    std::fabs(logpy - exact) <= 0.05,
                                    fmt("estimate %.4f, closed form %.4f", logpy, exact)));
  return summary;
}

nlohmann::json closure_battery(const Setup& s, const std::string& preset) {
  nlohmann::json summary = base_summary(s, preset);
  const tails::ClosureReport report = tails::closure_checks(s.seeds[0], 1000000);
  for (const auto& c : report.checks) {
    nlohmann::json j = check(c.name, c.passed, c.detail);
    j["value"] = c.value;
    summary["checks"].push_back(j);
  }
  summary["samples"] = 1000000;
  return summary;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"cauchy-appB",   "aniso-fig1",
                                                 "blr-fig3",      "eight-schools",
                                                 "normal-normal", "closure-battery"};
  return names;
}

nlohmann::json reproduce(const std::string& name, const ReproduceOptions& options) {
  const std::string preset = to_string(options.preset);
  fs::create_directories(options.out);
  nlohmann::json summary;
  if (name == "cauchy-appB") {
    summary = cauchy_appb(make_setup(name, targets::cauchy_target(), options), preset);
  } else if (name == "aniso-fig1") {
    summary = aniso_fig1(make_setup(name, targets::aniso_product_target(), options), preset);
  } else if (name == "blr-fig3") {
    targets::BlrProblem p = targets::blr_synthetic(kBlrRows, 1.5, 1.0, kBlrA0, kBlrB0, 1);
    summary = blr_fig3(make_setup(name, p.target, options), preset, p.posterior);
  } else if (name == "eight-schools") {
    summary = eight_schools(
        make_setup(name, targets::eight_schools(targets::rubin_eight_schools()), options),
        preset);
  } else if (name == "normal-normal") {
    summary = normal_normal(make_setup(name, targets::target_by_name("normal_normal"), options),
                            preset);
  } else if (name == "closure-battery") {
    summary = closure_battery(make_setup(name, targets::cauchy_target(), options), preset);
    summary.erase("target");
  } else {
    throw UsageError("unknown experiment '" + name + "'");
  }
  bool all = true;
  for (const auto& c : summary["checks"]) all = all && c["passed"].get<bool>();
  summary["passed"] = all;
  validate_summary(summary);
  write_file(options.out / "summary.json", summary.dump(2) + "\n");
  return summary;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw UsageError("summary.json: " + what);
}

bool number_or_null(const nlohmann::json& j) { return j.is_number() || j.is_null(); }

}  // namespace

void validate_summary(const nlohmann::json& s) {
  require(s.is_object(), "not an object");
  for (const char* key : {"experiment", "preset"}) {
    require(s.contains(key) && s[key].is_string(), std::string("missing string ") + key);
  }
  for (const char* key : {"hidden", "layers", "steps"}) {
    require(s.contains(key) && s[key].is_number_integer() && s[key].get<std::int64_t>() >= 0,
            std::string("missing count ") + key);
  }
  require(s.contains("seeds") && s["seeds"].is_array() && !s["seeds"].empty(),
          "seeds must be a nonempty array");
  require(s.contains("families") && s["families"].is_array(), "missing families array");
  for (const auto& f : s["families"]) {
    require(f.is_object(), "family entry is not an object");
    require(f.contains("family") && f["family"].is_string(), "family name missing");
    const std::string name = f["family"];
    require(name == "advi" || name == "taf" || name == "ataf", "unknown family " + name);
    for (const char* key : {"elbo_mean", "elbo_stderr", "logpy_mean", "logpy_stderr"}) {
      require(f.contains(key) && number_or_null(f[key]), name + ": missing number " + key);
    }
    require(f.contains("nu_values") && f["nu_values"].is_array(), name + ": missing nu_values");
    for (const auto& v : f["nu_values"]) require(v.is_number(), name + ": nu_values not numeric");
    const std::size_t expected_nu = name == "advi" ? 0 : s.value("dim", std::size_t{0});
    if (s.contains("dim")) {
      require(f["nu_values"].size() == expected_nu, name + ": wrong number of nu_values");
    }
    require(f.contains("tail_verdict") && f["tail_verdict"].is_string(),
            name + ": missing tail_verdict");
    const std::string v = f["tail_verdict"];
    require(v == "isotropic" || v == "anisotropic" || v == "undecided",
            name + ": unknown tail verdict " + v);
  }
  require(s.contains("checks") && s["checks"].is_array() && !s["checks"].empty(),
          "missing checks array");
  for (const auto& c : s["checks"]) {
    require(c.is_object() && c.contains("name") && c["name"].is_string() &&
                c.contains("passed") && c["passed"].is_boolean(),
            "check entries need name and passed");
  }
  require(s.contains("passed") && s["passed"].is_boolean(), "missing passed flag");
}

}  // namespace ataflow::cli
