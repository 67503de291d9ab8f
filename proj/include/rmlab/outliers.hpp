#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rmlab/geometry.hpp"
#include "rmlab/spectral.hpp"

namespace rmlab {

// Thin factorization C = a_factor * b_factor of a low-rank deterministic
// perturbation, with the eigenvalues of C carried by the k x k compression
// b_factor * a_factor.
struct Perturbation {
    Eigen::MatrixXcd a_factor;     // n x k
    Eigen::MatrixXcd b_factor;     // k x n
    Eigen::MatrixXcd compression;  // b_factor * a_factor
    Eigen::VectorXcd eigenvalues_c;

    int rank() const { return static_cast<int>(a_factor.cols()); }
    int n() const { return static_cast<int>(a_factor.rows()); }
    Eigen::MatrixXcd matrix() const { return a_factor * b_factor; }

    static Perturbation from_factors(Eigen::MatrixXcd a, Eigen::MatrixXcd b);
};

class RankCapExceeded : public std::runtime_error {
public:
    RankCapExceeded(const std::string& what, int rank)
        : std::runtime_error(what), detected_rank(rank) {}
    int detected_rank;
};

// SVD-based thin factorization at threshold 1e-10 * ||C||, with the factor
// norms balanced at sqrt(sigma). Rank above the cap is a configuration error.
Perturbation factor(const Eigen::MatrixXcd& c, int rank_cap = 16);

struct OutlierPrediction {
    cdouble source;     // eigenvalue of C
    cdouble predicted;  // source + rho / source
    bool admissible;    // |source| >= 1 and predicted outside E_{rho, eps}
};

class AnnulusViolation : public std::runtime_error {
public:
    AnnulusViolation(const std::string& what, cdouble lambda)
        : std::runtime_error(what), offending(lambda) {}
    cdouble offending;
};

// One prediction lambda + rho/lambda per eigenvalue of C. Eigenvalues with
// |lambda| > 1 whose prediction lands in the exclusion annulus
// E_{rho,3eps} \ E_{rho,eps} cannot be located reliably and raise
// AnnulusViolation as a configuration error.
std::vector<OutlierPrediction> predict(const Perturbation& pert, cdouble rho, double epsilon);

// f(z) = det(I_k + B (X - z)^{-1} A), evaluated with k linear solves.
// f(z) = 0 exactly when z is an eigenvalue of X + C but not of X.
cdouble det_f(cdouble z, const Eigen::MatrixXcd& x, const Perturbation& pert);

// Immutable f(z) evaluator over one sample, sharing a Hessenberg reduction
// across shifts; safe for concurrent evaluation.
class DetCriterion {
public:
    DetCriterion(const Eigen::MatrixXcd& x, Perturbation pert);
    cdouble operator()(cdouble z) const;
    const Perturbation& perturbation() const { return pert_; }

private:
    Perturbation pert_;
    ResolventEvaluator resolvent_;
    Eigen::MatrixXcd frame_a_;  // Q^* A
    Eigen::MatrixXcd frame_b_;  // B Q
};

// Deterministic limit g(z) = det(I_k + b(z) B A) with b(z) the closed-form
// resolvent limit; its roots outside E_rho are exactly
// {lambda + rho/lambda : lambda eigenvalue of C, |lambda| > 1}.
cdouble det_g(cdouble z, const Perturbation& pert, cdouble rho);

class ContourNearRoot : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument-principle winding number of f over the circle |z - center| = radius
// by trapezoidal phase tracking; 64 points with one adaptive doubling, then
// one radius perturbation. For meromorphic f this counts zeros minus poles.
int winding_number(const std::function<cdouble(cdouble)>& f, cdouble center, double radius);

struct RootResult {
    cdouble location;
    int winding;  // enclosed multiplicity
};

// For each seed outside the region: winding of f around B(seed, radius) and,
// when nonzero, the Newton-refined root location (central-difference
// derivative, tolerance 1e-10).
std::vector<RootResult> find_roots(const std::function<cdouble(cdouble)>& f,
                                   std::span<const cdouble> seeds, const EllipticRegion& region,
                                   double radius);

struct OutlierMatch {
    cdouble predicted;
    cdouble observed;
    double distance;
};

struct OutlierReport {
    std::vector<cdouble> observed;
    std::vector<OutlierMatch> matches;  // sorted by distance
    std::vector<cdouble> unmatched_predictions;
    std::vector<cdouble> unmatched_observed;
};

// Greedy globally-nearest matching under the distance cap; each side is
// matched at most once and leftovers are reported, not raised.
OutlierReport match(std::span<const cdouble> observed, std::span<const cdouble> predictions,
                    double cap_distance);

}  // namespace rmlab
