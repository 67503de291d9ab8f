#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "rmlab/io.hpp"
#include "rmlab/outliers.hpp"
#include "rmlab/products.hpp"

namespace rmlab {

enum class ExperimentKind { NoOutliers, Perturbed, Isotropic, DysonSweep, Product, Diagnostics };

const char* kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& s);

// Declarative low-rank perturbation: leading diagonal entries, a dense
// matrix embedded top-left, or an explicit thin factorization.
struct PerturbationSpec {
    enum class Form { None, Diag, Dense, Factored };
    Form form = Form::None;
    std::vector<cdouble> diag;
    Eigen::MatrixXcd dense;
    Eigen::MatrixXcd factor_a, factor_b;

    bool empty() const { return form == Form::None; }
    Eigen::MatrixXcd materialize(int n) const;
};
void to_json(json& j, const PerturbationSpec& p);
void from_json(const json& j, PerturbationSpec& p);

struct DysonSweepSpec {
    cdouble rho0 = 0.0;
    double x_min = -3.0, x_max = 3.0, y_min = -3.0, y_max = 3.0;
    int resolution = 60;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::NoOutliers;
    std::vector<EnsembleSpec> ensembles;           // one entry; m for product
    std::vector<PerturbationSpec> perturbations;   // none or one; m for product
    double epsilon = 0.1;
    int trials = 1;
    std::uint64_t seed = 0;
    double match_cap = 0.0;  // 0 selects the default 10 (log log n)^{-1/2}
    double isotropic_threshold = 0.15;
    double grid_margin = 0.2;
    int grid_count = 20;
    bool isotropic_random_pair = true;
    DysonSweepSpec sweep;
    std::map<std::string, int> min_successes;  // acceptance assertions
    std::string output_dir = "out";

    const EnsembleSpec& primary() const { return ensembles.at(0); }
    int n() const { return ensembles.at(0).graph.n; }
    cdouble rho() const { return ensembles.at(0).entries.rho; }
    double effective_match_cap() const;
    ProductSpec product_spec() const;
};
void to_json(json& j, const ExperimentConfig& c);
void from_json(const json& j, ExperimentConfig& c);

// Result of one trial. The summary is a pure function of (flags, metrics,
// detail) in trial order; wall_seconds is persisted per trial but never
// enters the summary.
struct TrialOutcome {
    int trial_index = 0;
    std::map<std::string, bool> flags;
    std::map<std::string, double> metrics;
    std::vector<cdouble> eigenvalues;
    json detail = json::object();
    double wall_seconds = 0.0;
};

struct RunOptions {
    int workers = 1;
    std::optional<std::filesystem::path> output_dir;
    std::optional<std::uint64_t> seed;
};

struct ExperimentResult {
    json summary;
    bool assertions_passed = false;
    std::filesystem::path output_dir;
};

ExperimentConfig load_config(const std::filesystem::path& path);

// Hypothesis validation that must abort before any sampling: annulus and
// rank-cap checks, kind-specific parameter constraints.
void validate_config(const ExperimentConfig& config);

// Pure: depends only on (config, trial_index).
TrialOutcome run_trial(const ExperimentConfig& config, int trial_index);

// Runs all trials (resuming from existing trial files), persists results
// under the output directory, and writes summary.json. Identical config and
// seed produce byte-identical summaries under any worker count.
ExperimentResult run_experiment(ExperimentConfig config, const RunOptions& options = {});

// Re-derives plot data from persisted trials: combined eigenvalue CSV,
// region boundary CSV, prediction markers CSV, and a standalone SVG scatter.
void export_artifacts(const std::filesystem::path& out_dir);

json wilson_interval(int successes, int trials);

}  // namespace rmlab
