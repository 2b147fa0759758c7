#pragma once

#include "edgeld/config.hpp"

#include <cstddef>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace edgeld {

// One machine-readable acceptance line of a run.
struct Check
{
    std::string name;
    double target = 0.0;
    double estimate = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Everything a run produces, held in memory until written.
struct RunArtifacts
{
    // Long-format results: experiment, quantity, N, x, estimate, ci_lo, ci_hi.
    std::string results_csv;
    // Summary JSON without the timing block, serialised.
    std::string summary_json;
    std::vector<Check> checks;
    std::vector<std::string> warnings;
    // Additional files keyed by file name relative to the output directory.
    std::map<std::string, std::string> extra_files;
    std::string config_hash;
    double seconds = 0.0;
    std::size_t workers = 1;
};

// Runs the configured experiment; no files are touched.
RunArtifacts run_experiment(const ExperimentConfig& config, std::size_t workers = 1);

// Writes results.csv, summary.json and the extra files into `dir` so that they become
// visible together; on any failure nothing is left at the final paths.
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

// Git blob hash (SHA-1 of "blob <len>\0" + text) of the normalised configuration.
std::string config_hash(const ExperimentConfig& config);

// High byte of every stream id used by the experiment.
std::uint64_t stream_tag(Experiment experiment);

// Process exit codes.
enum ExitCode : int
{
    ExitOk = 0,
    ExitOther = 1,
    ExitConfig = 2,
    ExitPrecondition = 3,
    ExitConvergence = 4,
    ExitIo = 5,
};

// Exit code for an exception thrown by a run.
int exit_code_for(const std::exception_ptr& error);

// Text for --help describing the exit codes.
std::string exit_code_help();

} // namespace edgeld
