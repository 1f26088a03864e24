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

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "ataflow/flows.hpp"
#include "ataflow/tails.hpp"

namespace ataflow::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

}  // namespace

Matrix parse_csv(const std::string& text, const std::string& source) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    rows.emplace_back(lineno, split_cells(line));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");

  std::size_t first = 0;
  const auto& head = rows.front().second;
  if (std::none_of(head.begin(), head.end(),
                   [](const std::string& c) { return parse_number(c).has_value(); })) {
    first = 1;
  }
  if (first == rows.size()) throw DataError(source + ": no data rows after the header");
  const std::size_t d = rows[first].second.size();
  Matrix m(rows.size() - first, d);
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& [row_no, cells] = rows[r];
    if (cells.size() != d) {
      throw DataError(source + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " fields, expected " +
                      std::to_string(d));
    }
    for (std::size_t c = 0; c < d; ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw DataError(source + ": row " + std::to_string(row_no) + ", column " +
                        std::to_string(c + 1) + ": '" + cells[c] +
                        "' is not a finite number");
      }
      m(r - first, c) = *v;
    }
  }
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Matrix load_csv(const std::string& path) { return parse_csv(read_file(path), path); }

void write_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
  if (!out) throw UsageError("cannot write " + path.string());
}

std::size_t default_hidden(std::size_t dim) { return dim <= 10 ? 32 : 256; }

std::size_t sweep_threads() {
  if (const char* env = std::getenv("ATAFLOW_THREADS")) {
    const auto v = parse_number(env);
    if (!v || *v < 1 || *v != std::floor(*v)) {
      throw UsageError(std::string("ATAFLOW_THREADS must be a positive integer, got '") +
                       env + "'");
    }
    return static_cast<std::size_t>(*v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min(n, sweep_threads());
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          failed = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

PresetKind preset_from_string(const std::string& name) {
  if (name == "desk") return PresetKind::kDesk;
  if (name == "paper") return PresetKind::kPaper;
  throw UsageError("unknown preset '" + name + "' (expected desk or paper)");
}

std::string to_string(PresetKind kind) {
  return kind == PresetKind::kDesk ? "desk" : "paper";
}

Preset preset_for(const std::string& experiment, PresetKind kind) {
  Preset p;
  std::size_t n_seeds = 1;
  if (kind == PresetKind::kDesk) {
    if (experiment == "cauchy-appB" || experiment == "normal-normal") n_seeds = 5;
    if (experiment == "aniso-fig1" || experiment == "blr-fig3") n_seeds = 3;
    if (experiment == "eight-schools") n_seeds = 10;
  } else {
    p.steps = 10000;
    p.lr = 1e-3;
    p.elbo_samples = 1000;
    p.eval_samples = 1000;
    p.tail_samples = 1000000;
    n_seeds = experiment == "eight-schools" ? 100 : 10;
    if (experiment == "closure-battery") n_seeds = 1;
  }
  for (std::size_t i = 1; i <= n_seeds; ++i) p.seeds.push_back(i);
  return p;
}

targets::TargetModel load_target(const std::string& name,
                                 const std::optional<std::string>& data_path) {
  if (!data_path) return targets::target_by_name(name);
  const std::string& path = *data_path;
  if (name == "eight_schools") {
    const std::string text = read_file(path);
    const auto pos = text.find_first_not_of(" \t\r\n");
    if (pos != std::string::npos && text[pos] == '{') {
      return targets::eight_schools(targets::parse_eight_schools_json(text));
    }
    const Matrix m = parse_csv(text, path);
    if (m.cols() != 2) throw DataError(path + ": eight_schools CSV needs columns y,sigma");
    targets::EightSchoolsData data;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      data.y.push_back(m(i, 0));
      data.sigma.push_back(m(i, 1));
    }
    return targets::eight_schools(data);
  }
  if (name == "blr" || name == "blr_nonconjugate") {
    const targets::RegressionData data = targets::regression_from_matrix(load_csv(path));
    if (name == "blr_nonconjugate") return targets::blr_nonconjugate(data);
    if (data.x.cols() != 1) {
      throw DataError(path + ": blr takes one covariate column and an outcome column");
    }
    return targets::blr_conjugate(data.x, data.y, 2.0, 2.0).target;
  }
  if (name == "normal_normal") {
    const Matrix m = load_csv(path);
    if (m.cols() != 1) throw DataError(path + ": normal_normal takes one column");
    std::vector<double> y(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) y[i] = m(i, 0);
    return targets::normal_normal(y, 1.0, 0.0, 10.0);
  }
  throw UsageError("target " + name + " takes no data");
}

namespace {

struct TrainFlags {
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<std::size_t> elbo_samples;
  std::optional<std::size_t> eval_samples;
  std::optional<std::size_t> hidden;
  std::size_t layers = 2;
  std::string preset = "desk";
  std::vector<std::uint64_t> seeds;
  std::string out;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f, bool with_eval) {
  cmd->add_option("--steps", f.steps, "optimizer steps");
  cmd->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--elbo-samples", f.elbo_samples, "draws (or rows) per step")
      ->check(CLI::PositiveNumber);
  if (with_eval) {
    cmd->add_option("--eval-samples", f.eval_samples, "draws for the final estimates")
        ->check(CLI::Range(std::size_t{2}, std::size_t{100000000}));
  }
  cmd->add_option("--seed", f.seeds, "seed; repeat for a sweep")->take_all();
  cmd->add_option("--hidden", f.hidden, "hidden units per layer")
      ->check(CLI::IsMember({std::size_t{32}, std::size_t{256}}));
  cmd->add_option("--layers", f.layers, "IAF layers")->check(CLI::PositiveNumber);
  cmd->add_option("--preset", f.preset, "hyperparameter preset")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--out", f.out, "output directory")->required();
}

vi::TrainConfig train_config(const TrainFlags& f) {
  const Preset p = preset_for("", preset_from_string(f.preset));
  vi::TrainConfig c;
  c.steps = f.steps.value_or(p.steps);
  c.lr = f.lr.value_or(p.lr);
  c.elbo_samples = f.elbo_samples.value_or(p.elbo_samples);
  c.eval_samples = f.eval_samples.value_or(p.eval_samples);
  c.validate();
  return c;
}

flows::FlowOptions flow_options(const TrainFlags& f, std::size_t dim) {
  flows::FlowOptions o;
  o.hidden = f.hidden.value_or(default_hidden(dim));
  o.layers = f.layers;
  return o;
}

std::vector<std::uint64_t> seeds_or_default(const TrainFlags& f) {
  return f.seeds.empty() ? std::vector<std::uint64_t>{0} : f.seeds;
}

fs::path seed_dir(const fs::path& out, std::uint64_t seed, std::size_t n_seeds) {
  return n_seeds == 1 ? out : out / ("seed_" + std::to_string(seed));
}

std::string jdump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

int cmd_fit(const std::string& target_name, const std::optional<std::string>& data,
            const std::string& family, const TrainFlags& flags, std::ostream& out) {
  const vi::FamilyKind kind = vi::family_from_string(family);
  const targets::TargetModel target = load_target(target_name, data);
  const vi::TrainConfig base = train_config(flags);
  const flows::FlowOptions options = flow_options(flags, target.dim);
  const std::vector<std::uint64_t> seeds = seeds_or_default(flags);
  const fs::path root(flags.out);
  fs::create_directories(root);

  std::vector<std::optional<vi::TrainResult>> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    vi::TrainConfig c = base;
    c.seed = seeds[i];
    flows::FlowStack stack = vi::make_family(kind, target, options, c.seed);
    const fs::path dir = seed_dir(root, seeds[i], seeds.size());
    try {
      results[i] = vi::train(stack, target, c);
    } catch (const vi::TrainingAborted& e) {
      write_file(dir / "params.json", jdump(e.snapshot()));
      throw;
    }
    nlohmann::json result = vi::to_json(*results[i]);
    result["family"] = vi::to_string(kind);
    result["target"] = target.name;
    write_file(dir / "result.json", jdump(result));
    write_file(dir / "params.json", jdump(results[i]->params));
    write_file(dir / "trace.csv", vi::trace_csv(results[i]->trace));
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "seed %llu: elbo %.4f +- %.4f, log p(y) %.4f +- %.4f\n",
                  static_cast<unsigned long long>(seeds[i]), results[i]->elbo.mean,
                  results[i]->elbo.std_error, results[i]->log_py.mean,
                  results[i]->log_py.std_error);
    out << line;
  }
  return 0;
}

struct DiagnoseFlags {
  std::optional<std::string> target;
  std::optional<std::string> params;
  std::optional<std::string> data;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_diagnose(const DiagnoseFlags& f, std::ostream& out) {
  const int sources = (f.data ? 1 : 0) + (f.params ? 1 : 0);
  if (sources > 1) throw UsageError("pass at most one of --params and --data");
  if (sources == 0 && !f.target) throw UsageError("diagnose needs --target, --params or --data");

  Matrix samples;
  std::vector<std::string> names;
  std::string source;
  if (f.data) {
    samples = load_csv(*f.data);
    source = *f.data;
  } else if (f.params) {
    const flows::FlowStack stack = flows::restore(nlohmann::json::parse(read_file(*f.params)));
    dist::Rng rng(f.seed);
    samples = stack.sample(f.samples, rng).values;
    source = *f.params;
  } else {
    const targets::TargetModel target = targets::target_by_name(*f.target);
    if (!target.reference.sampler) {
      throw UsageError("target " + target.name +
                       " has no exact sampler; pass --params or --data");
    }
    samples = Matrix(f.samples, target.dim);
    dist::Rng rng(f.seed);
    for (std::size_t i = 0; i < f.samples; ++i) target.reference.sampler(rng, samples.row(i));
    names = target.coordinate_names;
    source = "target:" + target.name;
  }
  for (std::size_t j = names.size(); j < samples.cols(); ++j) names.push_back("x" + std::to_string(j));

  const tails::TailReport report =
      tails::tail_parameter_function(samples, tails::default_directions(samples.cols()));
  nlohmann::json marginals = nlohmann::json::array();
  std::vector<double> col(samples.rows());
  for (std::size_t j = 0; j < samples.cols(); ++j) {
    for (std::size_t i = 0; i < samples.rows(); ++i) col[i] = samples(i, j);
    nlohmann::json m = tails::to_json(tails::classify_tail(col));
    m["coordinate"] = names[j];
    marginals.push_back(m);
  }
  nlohmann::json j{{"source", source},
                   {"n", samples.rows()},
                   {"report", tails::to_json(report)},
                   {"marginals", marginals}};
  const fs::path root(f.out);
  write_file(root / "tails.json", jdump(j));
  write_file(root / "tails.csv", tails::to_csv(report));
  out << "tail verdict: " << tails::to_string(report.isotropy) << "\n";
  return 0;
}

std::string loglik_csv(const std::vector<double>& trace) {
  std::string s = "step,loglik\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    s += buf;
  }
  return s;
}

int cmd_density(const std::string& data_path, const std::string& family,
                const TrainFlags& flags, std::ostream& out) {
  const vi::FamilyKind kind = vi::family_from_string(family);
  const Matrix data = load_csv(data_path);
  if (data.rows() < 10) {
    throw InsufficientDataError(data_path + ": density fitting needs at least 10 rows, got " +
                                std::to_string(data.rows()));
  }
  const vi::TrainConfig base = train_config(flags);
  const flows::FlowOptions options = flow_options(flags, data.cols());
  const std::vector<std::uint64_t> seeds = seeds_or_default(flags);
  const fs::path root(flags.out);
  fs::create_directories(root);

  std::vector<std::optional<vi::DensityResult>> results(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    vi::TrainConfig c = base;
    c.seed = seeds[i];
    flows::FlowStack stack(vi::base_kind(kind),
                           std::vector<flows::SupportKind>(data.cols(),
                                                           flows::SupportKind::kIdentity),
                           options, c.seed);
    results[i] = vi::fit_density(stack, data, c);
    const vi::DensityResult& r = *results[i];
    nlohmann::json result{{"family", vi::to_string(kind)},
                          {"seed", seeds[i]},
                          {"n_train", r.n_train},
                          {"n_heldout", r.n_heldout},
                          {"train_loglik", r.train_loglik},
                          {"heldout_loglik", r.heldout_loglik},
                          {"nu", stack.nu_values()},
                          {"params", r.params}};
    const fs::path dir = seed_dir(root, seeds[i], seeds.size());
    write_file(dir / "result.json", jdump(result));
    write_file(dir / "params.json", jdump(r.params));
    write_file(dir / "trace.csv", loglik_csv(r.trace));
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    char line[160];
    std::snprintf(line, sizeof line, "seed %llu: train loglik %.4f, held-out loglik %.4f\n",
                  static_cast<unsigned long long>(seeds[i]), results[i]->train_loglik,
                  results[i]->heldout_loglik);
    out << line;
  }
  return 0;
}

int cmd_reproduce(const std::string& name, const TrainFlags& f, std::ostream& out) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown experiment '" + name + "'; valid names: " + list);
  }
  ReproduceOptions o;
  o.preset = preset_from_string(f.preset);
  o.steps = f.steps;
  o.lr = f.lr;
  o.elbo_samples = f.elbo_samples;
  o.eval_samples = f.eval_samples;
  o.hidden = f.hidden;
  o.layers = f.layers;
  o.seeds = f.seeds;
  o.out = f.out;
  const nlohmann::json summary = reproduce(name, o);
  for (const auto& c : summary.at("checks")) {
    out << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>()
        << "\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anisotropic tail-adaptive flows for variational inference", "ataflow"};
  app.require_subcommand(1);

  std::string target_name, family = "ataf";
  std::optional<std::string> data;
  TrainFlags fit_flags;
  CLI::App* fit = app.add_subcommand("fit", "train one family on a target");
  fit->add_option("--target", target_name, "target model")->required();
  fit->add_option("--data", data, "data file for the target");
  fit->add_option("--family", family, "advi, taf or ataf");
  add_train_flags(fit, fit_flags, true);

  DiagnoseFlags diag;
  CLI::App* diagnose = app.add_subcommand("diagnose", "tail parameter function of draws");
  diagnose->add_option("--target", diag.target, "draw from the target's exact sampler");
  diagnose->add_option("--params", diag.params, "draw from a fitted params.json");
  diagnose->add_option("--data", diag.data, "CSV of draws");
  diagnose->add_option("--samples", diag.samples, "draws to generate")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}));
  diagnose->add_option("--seed", diag.seed, "seed for generated draws");
  diagnose->add_option("--out", diag.out, "output directory")->required();

  std::string experiment;
  TrainFlags repro_flags;
  CLI::App* repro = app.add_subcommand("reproduce", "run an experiment preset");
  repro->add_option("name", experiment, "experiment name")->required();
  add_train_flags(repro, repro_flags, true);

  std::string density_data, density_family = "ataf";
  TrainFlags density_flags;
  CLI::App* density = app.add_subcommand("density", "maximum-likelihood density fit to CSV");
  density->add_option("--data", density_data, "CSV of observations")->required();
  density->add_option("--family", density_family, "advi, taf or ataf");
  add_train_flags(density, density_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) return cmd_fit(target_name, data, family, fit_flags, out);
    if (*diagnose) return cmd_diagnose(diag, out);
    if (*repro) return cmd_reproduce(experiment, repro_flags, out);
    if (*density) return cmd_density(density_data, density_family, density_flags, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace ataflow::cli
