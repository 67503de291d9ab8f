#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <tuple>
#include <vector>

#include "rmlab/entries.hpp"
#include "rmlab/graph.hpp"

namespace rmlab {

struct EnsembleSpec {
    GraphSpec graph;
    EntryModel entries;
};

// One realization of the scaled model d^{-1/2} X_N with its provenance.
// Entries are exactly zero off the graph's edge set, and regeneration with
// identical (spec, seed, trial_index) is bit-for-bit reproducible.
struct MatrixSample {
    int n = 0;
    int degree = 0;
    Eigen::MatrixXcd entries;
    std::uint64_t seed = 0;
    std::uint64_t trial_index = 0;
    EnsembleSpec spec;

    // entries = entry_scale * g with g in law units; starts at d^{-1/2} and
    // picks up the (V_n)^{-1/2} renormalizer on truncation
    double entry_scale = 0.0;
    // law-units magnitude cut already applied (infinity when untruncated)
    double truncation_threshold = std::numeric_limits<double>::infinity();
};

MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t seed,
                           std::uint64_t trial_index);

struct TruncationResult {
    MatrixSample sample;
    double v_n = 1.0;           // variance renormalizer E[|g~|^2] relative to the input law
    double v_n_stderr = 0.0;    // Monte Carlo standard error (0 when analytic)
    double threshold = 0.0;     // law-units magnitude cut a_n sqrt(d) (log n)^{-2}
    int truncated_entries = 0;
    bool excessive = false;     // more than 10% of edge entries truncated
};

// Zeroes entries with law-units magnitude above a_n sqrt(d) (log n)^{-2} and
// renormalizes so the working matrix is (d V_n)^{-1/2} X~. Applying the same
// cut twice is an exact no-op.
TruncationResult truncate(const MatrixSample& sample, double a_n);

// Concentration parameters of the scaled model, evaluated at the law level,
// with the thresholds they are compared against. Correlated transpose pairs
// are treated as single independent summands, which costs at most a factor
// sqrt(2) on v and sigma_star against the independent-entry values; the
// formulas below are exact for the constructions used by the sampler.
struct ModelDiagnostics {
    double v = 0.0;            // sqrt(norm of the covariance profile)
    double sigma = 0.0;        // sqrt(norm of E[X*X]); 1 by d-regularity
    double sigma_star = 0.0;   // sup_{u,w} sqrt(E|<u,Xw>|^2)
    double v_tilde = 0.0;      // sqrt(v * sigma)
    double r_bound = 0.0;      // a.s. bound on a single summand norm, inf if unbounded
    cdouble rho0;              // effective E[X^2] multiplier
    cdouble diag_offset;       // rho0 - rho, the self-loop contribution to E[X^2]

    double threshold_v_tilde = 0.0;     // (log n)^{-1}
    double threshold_sigma_star = 0.0;  // (log n)^{-1.5}
    double threshold_r_bound = 0.0;     // (log n)^{-2}
    bool pass_v_tilde = false;
    bool pass_sigma_star = false;
    bool pass_r_bound = false;
    bool pass_diag_offset = false;  // (log n) |rho0 - rho| <= 0.1
};

ModelDiagnostics diagnostics(const EnsembleSpec& spec);

struct VarianceProfileReport {
    double tolerance = 0.0;  // 5 / sqrt(batch * d)
    double max_dev_xxstar = 0.0;
    double max_dev_xstarx = 0.0;
    double max_dev_xsquare = 0.0;
    cdouble expected_rho0;
    bool pass = false;
    // worst offending entries as (row, col, deviation), largest first
    std::vector<std::tuple<int, int, double>> worst;
};

// Checks the empirical E[XX*], E[X*X] against identity and E[X^2] against
// rho0 * identity over a batch of at least 100 samples.
VarianceProfileReport validate_variance_profile(const std::vector<MatrixSample>& batch);

}  // namespace rmlab
