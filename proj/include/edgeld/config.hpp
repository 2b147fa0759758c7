#pragma once

#include "edgeld/edgestats.hpp"
#include "edgeld/equilibrium.hpp"
#include "edgeld/experiments.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgeld {

enum class Experiment
{
    EqSolve,
    Edge,
    SampleMatrix,
    SampleGas,
    LdRight,
    LdLeft,
    Moderate,
    Truncation,
    Blocks,
    EdgePoisson,
    TailExponent,
};

std::string experiment_name(Experiment e);
// Throws ConfigError listing the valid names.
Experiment parse_experiment(std::string_view name);
const std::vector<std::string>& experiment_names();

struct StatisticConfig
{
    // gaussian_norm, gaussian_l1, chi or gaussian_entry
    std::string kind = "gaussian_norm";
    std::size_t dimension = 2;
    double theta = 2.0;
};

TailStatistic make_statistic(const StatisticConfig& config);

// Matrix entry law for the matrix-generic model.
struct EntryConfig
{
    // standard_gaussian or chi_scaled
    std::string kind = "standard_gaussian";
    double theta = 1.0;
    double scale = 1.0;
};

EntryDistribution make_entry_distribution(const EntryConfig& config);

struct ExperimentConfig
{
    Experiment experiment = Experiment::LdRight;
    // model.diag_dist and model.offdiag_dist are built from diag and offdiag.
    ModelSpec model;
    std::optional<EntryConfig> diag;
    std::optional<EntryConfig> offdiag;
    std::vector<std::size_t> n_values;
    std::size_t n = 1000;
    std::size_t replicas = 1000;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    double x = 1.2;
    double gamma = 0.25;
    std::vector<double> epsilons;
    double epsilon = 0.8;
    std::vector<std::size_t> d_values;
    std::vector<double> levels;
    StatisticConfig statistic;
    GridConfig grid;
    EdgeConvention edge_convention = EdgeConvention::MultiplyByConstant;
    std::vector<CountWindow> windows;
    double confidence = 0.99;
    std::optional<bool> stratify;

    // Normalised JSON of every field, defaults included.
    std::string echo_json() const;
};

// Defaults for one experiment, as filled in by parse_config.
ExperimentConfig default_config(Experiment experiment);

// Strict JSON parsing: syntax errors report the line, unknown keys are rejected with
// the closest valid key, and values outside their ranges are rejected. Only
// "experiment" is required.
ExperimentConfig parse_config(std::string_view source);

// Key with the smallest edit distance to `key`, if it is within distance 2 (or a
// third of the key length).
std::optional<std::string> closest_key(std::string_view key, const std::vector<std::string>& candidates);

} // namespace edgeld
