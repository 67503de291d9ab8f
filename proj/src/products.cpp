#include "rmlab/products.hpp"

#include <stdexcept>

#include "rmlab/spectral.hpp"

namespace rmlab {

namespace {

using Eigen::MatrixXcd;

constexpr std::uint64_t kFactorTag = 0x70726F64666163ull;

std::vector<cdouble> outside_disk(const Eigen::VectorXcd& eigs, double r) {
    std::vector<cdouble> out;
    for (cdouble e : eigs)
        if (std::abs(e) > r) out.push_back(e);
    return out;
}

}  // namespace

void ProductSpec::validate() const {
    if (m() < 2) throw std::invalid_argument("product: need m >= 2 factors");
    const int n = factors.front().graph.n;
    for (const auto& f : factors)
        if (f.graph.n != n)
            throw std::invalid_argument("product: all factor dimensions must be equal");
    if (!perturbations.empty()) {
        if (static_cast<int>(perturbations.size()) != m())
            throw std::invalid_argument("product: need one perturbation per factor (or none)");
        for (const auto& a : perturbations)
            if (a.rows() != n || a.cols() != n)
                throw std::invalid_argument("product: perturbation dimension mismatch");
    }
    if (epsilon <= 0.0) throw std::invalid_argument("product: epsilon must be positive");
}

Linearization linearize(std::span<const MatrixXcd> scaled_factors,
                        std::span<const MatrixXcd> perturbations) {
    const int m = static_cast<int>(scaled_factors.size());
    if (m < 2) throw std::invalid_argument("linearize: need m >= 2");
    const int n = static_cast<int>(scaled_factors[0].rows());
    for (const auto& f : scaled_factors)
        if (f.rows() != n || f.cols() != n)
            throw std::invalid_argument("linearize: factor dimension mismatch");
    if (!perturbations.empty() && perturbations.size() != scaled_factors.size())
        throw std::invalid_argument("linearize: need one perturbation per factor (or none)");

    Linearization lin;
    lin.curly_x = MatrixXcd::Zero(m * n, m * n);
    lin.curly_a = MatrixXcd::Zero(m * n, m * n);
    for (int k = 0; k < m; ++k) {
        const int col = ((k + 1) % m) * n;
        lin.curly_x.block(k * n, col, n, n) = scaled_factors[k];
        if (!perturbations.empty()) lin.curly_a.block(k * n, col, n, n) = perturbations[k];
    }
    return lin;
}

MatrixXcd deformed_product(std::span<const MatrixXcd> scaled_factors,
                           std::span<const MatrixXcd> perturbations) {
    const int n = static_cast<int>(scaled_factors[0].rows());
    MatrixXcd prod = MatrixXcd::Identity(n, n);
    for (std::size_t k = 0; k < scaled_factors.size(); ++k) {
        MatrixXcd term = scaled_factors[k];
        if (!perturbations.empty()) term += perturbations[k];
        prod = prod * term;
    }
    return prod;
}

ProductSample sample_product(const ProductSpec& spec, std::uint64_t seed, std::uint64_t trial) {
    spec.validate();
    const int n = spec.factors.front().graph.n;
    ProductSample out;
    out.factors.reserve(spec.m());
    for (int k = 0; k < spec.m(); ++k) {
        std::uint64_t factor_seed = RngStream::mix(RngStream::mix(seed, kFactorTag), k);
        out.factors.push_back(sample_matrix(spec.factors[k], factor_seed, trial).entries);
    }
    out.product = deformed_product(out.factors, {});
    out.perturbed = deformed_product(out.factors, spec.perturbations);
    if (spec.perturbations.empty())
        out.a_product = MatrixXcd::Zero(n, n);
    else {
        out.a_product = MatrixXcd::Identity(n, n);
        for (const auto& a : spec.perturbations) out.a_product = out.a_product * a;
    }
    return out;
}

ProductTrialResult run_product_trial(const ProductSpec& spec, std::uint64_t seed,
                                     std::uint64_t trial, double match_cap) {
    spec.validate();
    ProductSample sample = sample_product(spec, seed, trial);
    const double eps = spec.epsilon;

    Eigen::VectorXcd a_eigs = eigenvalues(sample.a_product).eigenvalues;
    for (cdouble lambda : a_eigs) {
        double r = std::abs(lambda);
        if (r >= 1.0 + eps && r <= 1.0 + 3.0 * eps)
            throw AnnulusViolation(
                "product: eigenvalue of A_N inside the annulus {1+eps <= |z| <= 1+3eps}", lambda);
    }
    std::vector<cdouble> predictions = outside_disk(a_eigs, 1.0 + 3.0 * eps);

    ProductTrialResult res;
    Eigen::VectorXcd d_eigs = eigenvalues(sample.product).eigenvalues;
    res.spectral_radius = d_eigs.size() ? d_eigs.cwiseAbs().maxCoeff() : 0.0;
    res.radius_ok = res.spectral_radius <= 1.0 + eps;

    Eigen::VectorXcd p_eigs = eigenvalues(sample.perturbed).eigenvalues;
    res.perturbed_eigenvalues.assign(p_eigs.begin(), p_eigs.end());
    std::vector<cdouble> observed = outside_disk(p_eigs, 1.0 + 2.0 * eps);
    res.report = match(observed, predictions, match_cap);
    res.outliers_ok = observed.size() == predictions.size() &&
                      res.report.matches.size() == predictions.size();
    return res;
}

ProductExperimentAggregate product_outlier_experiment(const ProductSpec& spec, int trials,
                                                      std::uint64_t seed, double match_cap) {
    if (trials < 1) throw std::invalid_argument("product experiment: trials must be >= 1");
    ProductExperimentAggregate agg;
    agg.trials = trials;
    agg.results.reserve(trials);
    for (int t = 0; t < trials; ++t) {
        ProductTrialResult res = run_product_trial(spec, seed, t, match_cap);
        agg.radius_successes += res.radius_ok ? 1 : 0;
        agg.outlier_successes += res.outliers_ok ? 1 : 0;
        agg.results.push_back(std::move(res));
    }
    return agg;
}

}  // namespace rmlab
