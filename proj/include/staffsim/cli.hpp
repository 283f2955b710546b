#pragma once

// Command-line front end and the file-level operations behind it.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <staffsim/simulation.hpp>

namespace staffsim::cli {

enum ExitCode : int { exit_ok = 0, exit_validation = 2, exit_io = 3, exit_internal = 4 };

/// Unreadable, unwritable, or unparsable files.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

using Overrides = std::vector<std::pair<std::string, std::string>>;

/// Splits "--key=value" arguments; anything else is rejected.
Overrides parse_overrides(const std::vector<std::string>& args);

struct RunOptions
{
  std::optional<Timestep> steps;
  std::optional<Timestep> bias_off_at;
  std::optional<int> beam;
  std::optional<std::uint64_t> seed;
  Overrides overrides;
};

/// Applies run flags and overrides to a freshly generated environment and
/// re-seeds it. Structural fields cannot change after generation.
void configure_run(SimState& state, const RunOptions& options);

struct RunResult
{
  std::filesystem::path metrics_csv;
  std::filesystem::path assignments_csv;
  std::filesystem::path final_state;
  std::filesystem::path manifest;
  Timestep steps = 0;
  double wall_clock_seconds = 0.0;
};

/// Runs `state.cfg.total_steps` steps and writes metrics.csv,
/// assignments.csv, final_state.json and manifest.json into out_dir, plus
/// wall_clock.txt with the elapsed time.
RunResult run_to_directory(
  SimState& state, const std::filesystem::path& out_dir, const std::string& env_source);

std::string metrics_csv(const SimState& state);
std::string assignments_csv(const SimState& state);

/// Injects the scenario's pending tasks into its schedule, reschedules, and
/// reports cancellations, start changes and per-criterion deltas.
json reschedule_report(const SimState& env, const json& scenario);
std::string format_reschedule_report(const json& report);

/// Summary statistics of a run directory. With `plot_dir` set, also writes
/// one CSV per plot there.
json metrics_report(
  const std::filesystem::path& metrics_dir,
  const std::optional<std::filesystem::path>& plot_dir = std::nullopt);
std::string format_metrics_report(const json& summary);

int main(int argc, char** argv);

} // namespace staffsim::cli
