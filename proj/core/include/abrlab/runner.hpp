// Run orchestration: executes a RunConfig and emits the artifact directory
// (manifest.json, CSVs, checkpoints, summary.json). Exit codes: 0 ok,
// 2 config error, 3 runtime error, 4 acceptance-style check failure.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "abrlab/config.hpp"

namespace abrlab {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitCheckFailed = 4;

class SchemaMismatch : public std::runtime_error {
 public:
  explicit SchemaMismatch(const std::string& what) : std::runtime_error(what) {}
};

// One run; config.command selects the behavior. Throws on errors.
int dispatch(const RunConfig& config);

int run_train(const RunConfig& config);
int run_eval(const RunConfig& config);
int run_theory(const RunConfig& config);
int run_sweep_gamma(const RunConfig& config);
int run_sweep_lr(const RunConfig& config);
int run_traces_validate(const RunConfig& config);
int run_compare(const std::vector<std::string>& run_dirs, const std::string& metric);
int run_from_manifest(const std::filesystem::path& manifest_path,
                      const std::string& out_dir_override);

// Simple CSV table: first line may be a "# schema" comment, second a header.
struct CsvTable {
  std::string schema;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // numeric cells; NaN for non-numeric

  int column(const std::string& name) const;  // -1 if absent
  std::vector<double> col(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Exposed for tests and the acceptance suite.
void write_train_artifacts(const RunConfig& config, const TrainResult& result,
                           const std::filesystem::path& dir);

}  // namespace abrlab
