#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "rmlab/ensemble.hpp"
#include "rmlab/outliers.hpp"

namespace rmlab {

// m >= 2 independent factor ensembles with optional low-rank deformations
// A^1..A^m, all of one common dimension.
struct ProductSpec {
    std::vector<EnsembleSpec> factors;
    std::vector<Eigen::MatrixXcd> perturbations;  // empty, or one per factor
    double epsilon = 0.1;

    int m() const { return static_cast<int>(factors.size()); }
    void validate() const;
};

// Block-cyclic linearizations: factor k occupies block row k, block column
// (k+1) mod m of curly_x; the deformations fill curly_a the same way. For
// m >= 2 the linearized model satisfies E[XX*] = E[X*X] = 1 and E[X^2] = 0.
struct Linearization {
    Eigen::MatrixXcd curly_x;
    Eigen::MatrixXcd curly_a;
};

Linearization linearize(std::span<const Eigen::MatrixXcd> scaled_factors,
                        std::span<const Eigen::MatrixXcd> perturbations);

// Ordered product of (factor + deformation) terms; zero deformations when
// the list is empty.
Eigen::MatrixXcd deformed_product(std::span<const Eigen::MatrixXcd> scaled_factors,
                                  std::span<const Eigen::MatrixXcd> perturbations);

struct ProductSample {
    std::vector<Eigen::MatrixXcd> factors;  // scaled samples, reproducible individually
    Eigen::MatrixXcd product;               // D = prod of scaled factors
    Eigen::MatrixXcd perturbed;             // D^1 = prod of (factor + A^k)
    Eigen::MatrixXcd a_product;             // prod of A^k
};

// Factor k draws from the stream derived by keying the master seed with the
// factor index, so factors are independent and individually reproducible.
ProductSample sample_product(const ProductSpec& spec, std::uint64_t seed, std::uint64_t trial);

struct ProductTrialResult {
    double spectral_radius = 0.0;  // of the unperturbed product
    std::vector<cdouble> perturbed_eigenvalues;
    OutlierReport report;  // observed outside (1+2eps)D vs eig(A_N) outside (1+3eps)D
    bool radius_ok = false;
    bool outliers_ok = false;
};

// Predictions use the identity map (the m-fold product has circular-law
// effective correlation 0). Validates that eig(A_N) avoids the annulus
// {1+eps <= |z| <= 1+3eps} before running.
ProductTrialResult run_product_trial(const ProductSpec& spec, std::uint64_t seed,
                                     std::uint64_t trial, double match_cap);

struct ProductExperimentAggregate {
    int trials = 0;
    int radius_successes = 0;
    int outlier_successes = 0;
    std::vector<ProductTrialResult> results;
};

ProductExperimentAggregate product_outlier_experiment(const ProductSpec& spec, int trials,
                                                      std::uint64_t seed,
                                                      double match_cap = 0.3);

}  // namespace rmlab
