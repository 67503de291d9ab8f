#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace rmlab {

using cdouble = std::complex<double>;

// Spectral parameters of the 2x2-block matrix Dyson equation for the
// Hermitized free model: z is the non-Hermitian spectral location, v the
// Hermitized parameter (Im v > 0), rho0 the effective correlation.
struct DysonParams {
    cdouble z;
    cdouble v;
    cdouble rho0;
};

// Scalar entries of the block Stieltjes transform G = [[a, b],[b21, c]].
// For purely imaginary v the solution has a = c = iV with V > 0 and
// b21 = conj(b); for general v the lower-left entry is kept independent.
// The imaginary part of G is positive definite at a converged solution.
struct DysonSolution {
    cdouble a;
    cdouble b;
    cdouble c;
    cdouble b21;
    double residual = 0.0;  // max-entry defect of the self-consistency equation
    int iterations = 0;
    bool converged = false;

    bool positive_imaginary_part() const;
};

class DysonConvergenceError : public std::runtime_error {
public:
    DysonConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
    double last_residual;
};

// Damped fixed-point solve of
//   S[G] + G^{-1} + [[v, z],[conj(z), v]] = 0,
//   S[G] = [[c, rho0 conj(b)],[conj(rho0) b, a]],
// with G <- (1-theta) G + theta (-M - S[G])^{-1}, theta = 1/2 halved on
// residual increase, starting from G = i I. Throws DysonConvergenceError
// when max_iter is exhausted.
DysonSolution solve(const DysonParams& params, double tol = 1e-12, int max_iter = 200000);

// Reduced-system solution for v = i eta: a = c = iV with V > 0 and b solving
//   rho0 conj(b) + b / (V^2 + |b|^2) + z = 0.
// Found by a scalar bracketed root-find in S = V^2 + |b|^2; agrees with
// solve() to solver tolerance and costs O(1).
struct ReducedSolution {
    double V;
    cdouble b;
    double S;  // V^2 + |b|^2
};
ReducedSolution solve_reduced(cdouble z, double eta, cdouble rho0);

// sqrt(z^2 - 4 rho0) with branch cut on the segment joining -2 sqrt(rho0)
// and 2 sqrt(rho0), normalized so sqrt(z^2 - 4 rho0) - z -> 0 at infinity.
cdouble branch_sqrt(cdouble z, cdouble rho0);

// The eta -> 0+ limit of conj(b), i.e. the scalar predicting
// <u, (X - z)^{-1} w> / <u, w>:
//   (-z + sqrt(z^2 - 4 rho0)) / (2 rho0), reducing to -1/z at rho0 = 0,
// evaluated in the cancellation-free form -2 / (z + sqrt(z^2 - 4 rho0)).
// Throws std::domain_error for z inside E_{rho0, 1e-9}.
cdouble limit_b(cdouble z, cdouble rho0);

enum class SupportClass { Inside, Outside, Boundary };

// Classifies z against the spectral support of the free model by the decay
// of V(z, eta) along the eta schedule: outside the support V = O(eta) and
// extrapolates to 0, inside V stays order one. Ambiguous scaling yields an
// explicit Boundary verdict.
SupportClass classify_support(cdouble z, cdouble rho0,
                              std::span<const double> eta_schedule = {});

class GapBracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Spectral gap of the Hermitized free model around 0, i.e. the minimal
// singular value of the free shifted elliptic element. Bisection in E >= 0
// on the density indicator Im a(z, E + i 1e-6) against threshold 1e-4;
// returns 0 when z is not outside the support.
double gap_estimate(cdouble z, cdouble rho0);

}  // namespace rmlab
