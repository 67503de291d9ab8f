#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace rmlab {

using cdouble = std::complex<double>;

// All n eigenvalues of a dense matrix, with the backend's accuracy scale.
// The sum of the eigenvalues agrees with the trace to backend_tolerance.
struct Spectrum {
    Eigen::VectorXcd eigenvalues;
    int n = 0;
    double backend_tolerance = 0.0;
};

class NearSingularShift : public std::runtime_error {
public:
    NearSingularShift(const std::string& what, double smin)
        : std::runtime_error(what), sigma_min(smin) {}
    double sigma_min;
};

// Hermitization of X at z with Hermitized spectral parameter v:
//   [[-v I, X - z I], [(X - z I)^*, -v I]].
// Self-adjoint for real v; its spectrum at v = 0 is {+-sigma_k(X - z I)}.
Eigen::MatrixXcd hermitize(const Eigen::MatrixXcd& x, cdouble z, cdouble v);

// Dense eigendecomposition (LAPACK backend). Routes to the symmetric / real
// drivers when the matrix is exactly Hermitian / real.
Spectrum eigenvalues(const Eigen::MatrixXcd& m);

// Smallest singular value of X - z I: direct SVD up to n = 512, then a
// shift-invert Lanczos on the Hermitization.
double sigma_min(const Eigen::MatrixXcd& x, cdouble z);

// <u, (X - z)^{-1} w> by one LU solve; rejects near-singular shifts.
cdouble resolvent_bilinear(const Eigen::MatrixXcd& x, cdouble z, const Eigen::VectorXcd& u,
                           const Eigen::VectorXcd& w);

// Multi-shift resolvent access: one Hessenberg reduction of X up front, then
// each shift costs O(n^2) via Givens elimination of H - z. Real matrices use
// the real reduction. Immutable after construction; concurrent use is safe.
class ResolventEvaluator {
public:
    explicit ResolventEvaluator(const Eigen::MatrixXcd& x);
    ~ResolventEvaluator();
    ResolventEvaluator(ResolventEvaluator&&) noexcept;

    int n() const;

    Eigen::VectorXcd solve(cdouble z, const Eigen::VectorXcd& rhs) const;
    cdouble bilinear(cdouble z, const Eigen::VectorXcd& u, const Eigen::VectorXcd& w) const;

    // Hessenberg-frame access, for evaluating many shifts against fixed
    // vectors: y solving (H - z) y = to_frame(rhs) satisfies
    // (X - z)^{-1} rhs = from_frame(y).
    Eigen::VectorXcd to_frame(const Eigen::VectorXcd& v) const;
    Eigen::VectorXcd from_frame(const Eigen::VectorXcd& v) const;
    Eigen::VectorXcd frame_solve(cdouble z, const Eigen::VectorXcd& b) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Max over the grid of |<u, (X - z)^{-1} w> - b(z, 0+) <u, w>| with the
// closed-form resolvent limit as prediction. Grid points must lie outside
// the elliptic region of rho.
double isotropic_deviation(const Eigen::MatrixXcd& x, cdouble rho,
                           std::span<const cdouble> grid, const Eigen::VectorXcd& u,
                           const Eigen::VectorXcd& w);

}  // namespace rmlab
