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

#ifndef ATAFLOW_TOOLS_CLI_HPP
#define ATAFLOW_TOOLS_CLI_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ataflow/errors.hpp"
#include "ataflow/matrix.hpp"
#include "ataflow/targets.hpp"
#include "ataflow/vi.hpp"

#include "json.hpp"

namespace ataflow::cli {

// Malformed input file. Reported with exit code 2.
class DataError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Numeric CSV with an optional header row. A first row in which no cell
// parses as a number is taken as a header. Ragged rows and non-numeric cells
// raise DataError naming the row (1-based line number) and column.
Matrix parse_csv(const std::string& text, const std::string& source = "csv");
Matrix load_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

// 32 hidden units for d <= 10, 256 above.
std::size_t default_hidden(std::size_t dim);

// ATAFLOW_THREADS if set, otherwise the number of logical cores.
std::size_t sweep_threads();
// Runs job(0..n-1) on up to sweep_threads() workers. The first exception
// thrown by any job is rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job);

enum class PresetKind { kDesk, kPaper };
PresetKind preset_from_string(const std::string& name);
std::string to_string(PresetKind kind);

struct Preset {
  std::size_t steps = 2000;
  double lr = 1e-2;
  std::size_t elbo_samples = 100;
  std::size_t eval_samples = 10000;
  std::size_t tail_samples = 100000;
  std::vector<std::uint64_t> seeds;
};
Preset preset_for(const std::string& experiment, PresetKind kind);

struct ReproduceOptions {
  PresetKind preset = PresetKind::kDesk;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<std::size_t> elbo_samples;
  std::optional<std::size_t> eval_samples;
  std::optional<std::size_t> hidden;
  std::size_t layers = 2;
  std::vector<std::uint64_t> seeds;   // empty: the preset's seeds
  std::filesystem::path out;
};

const std::vector<std::string>& experiment_names();

// Runs one experiment, writes its artifacts under options.out, and returns
// the summary (also written as summary.json).
nlohmann::json reproduce(const std::string& name, const ReproduceOptions& options);

// Throws UsageError describing the first schema violation.
void validate_summary(const nlohmann::json& summary);

// Target by name, optionally with data: JSON or CSV for eight_schools
// ({"y": [...], "sigma": [...]} or columns y,sigma), CSV with covariates and
// a final outcome column for blr and blr_nonconjugate, one column of
// observations for normal_normal.
targets::TargetModel load_target(const std::string& name,
                                 const std::optional<std::string>& data_path);

// Entry point. Returns the process exit code: 0 success, 2 usage or data
// error, 3 numeric failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ataflow::cli

#endif  // ATAFLOW_TOOLS_CLI_HPP
