#define LAPACK_COMPLEX_CUSTOM
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include "rmlab/spectral.hpp"

#include <lapacke.h>

#include <cmath>
#include <optional>

#include "rmlab/dyson.hpp"
#include "rmlab/rng.hpp"

namespace rmlab {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

bool is_real(const MatrixXcd& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            if (m(r, c).imag() != 0.0) return false;
    return true;
}

bool is_hermitian(const MatrixXcd& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r <= c; ++r)
            if (m(r, c) != std::conj(m(c, r))) return false;
    return true;
}

void check_finite(const MatrixXcd& m) {
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag()))
                throw std::invalid_argument("eigenvalues: non-finite matrix entry");
}

void lapack_check(int info, const char* routine) {
    if (info != 0)
        throw std::runtime_error(std::string(routine) + " failed to converge, info=" +
                                 std::to_string(info));
}

// Symmetric Lanczos with full reorthogonalization; returns 1 / max |Ritz|,
// i.e. the reciprocal of the extreme eigenvalue of the applied operator.
template <typename Vec, typename Apply, typename Fill>
double lanczos_extreme_inverse(const Apply& apply, int dim, const Fill& fill) {
    const int max_steps = 400;
    std::vector<Vec> basis;
    std::vector<double> alpha, beta;
    RngStream rng(0x73696D696E);
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v(i) = fill(rng);
    v.normalize();
    basis.push_back(v);

    double best = 0.0;
    int stable = 0;
    for (int k = 0; k < max_steps; ++k) {
        Vec w = apply(basis[k]);
        if (!w.allFinite()) return 0.0;  // shift is numerically an eigenvalue
        double a_k = std::real(basis[k].dot(w));
        w -= a_k * basis[k];
        if (k > 0) w -= beta[k - 1] * basis[k - 1];
        for (const auto& q : basis) w -= q.dot(w) * q;  // full reorthogonalization
        double b_k = w.norm();
        alpha.push_back(a_k);

        int m = static_cast<int>(alpha.size());
        MatrixXd t = MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            t(i, i) = alpha[i];
            if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(t, Eigen::EigenvaluesOnly);
        double top = std::max(std::abs(es.eigenvalues()(0)), std::abs(es.eigenvalues()(m - 1)));
        double est = top > 0.0 ? 1.0 / top : 0.0;
        if (best > 0.0 && std::abs(est - best) <= 1e-12 * best)
            ++stable;
        else
            stable = 0;
        best = est;
        if (stable >= 8 || b_k < 1e-14) break;
        beta.push_back(b_k);
        basis.push_back(w / b_k);
    }
    return best;
}

}  // namespace

MatrixXcd hermitize(const MatrixXcd& x, cdouble z, cdouble v) {
    const int n = static_cast<int>(x.rows());
    MatrixXcd a = x - z * MatrixXcd::Identity(n, n);
    MatrixXcd h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = -v * MatrixXcd::Identity(n, n);
    h.bottomRightCorner(n, n) = -v * MatrixXcd::Identity(n, n);
    h.topRightCorner(n, n) = a;
    h.bottomLeftCorner(n, n) = a.adjoint();
    return h;
}

Spectrum eigenvalues(const MatrixXcd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("eigenvalues: matrix must be square");
    check_finite(m);
    const int n = static_cast<int>(m.rows());
    Spectrum spec;
    spec.n = n;
    spec.backend_tolerance = 1e-8 * std::max(1.0, m.norm());
    spec.eigenvalues.resize(n);
    if (n == 0) return spec;

    const bool herm = is_hermitian(m);
    const bool real = is_real(m);
    if (herm && real) {
        MatrixXd a = m.real();
        VectorXd w(n);
        lapack_check(
            LAPACKE_dsyev(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, w.data()), "dsyev");
        for (int i = 0; i < n; ++i) spec.eigenvalues(i) = w(i);
    } else if (herm) {
        MatrixXcd a = m;
        VectorXd w(n);
        lapack_check(
            LAPACKE_zheev(LAPACK_COL_MAJOR, 'N', 'U', n, a.data(), n, w.data()), "zheev");
        for (int i = 0; i < n; ++i) spec.eigenvalues(i) = w(i);
    } else if (real) {
        MatrixXd a = m.real();
        VectorXd wr(n), wi(n);
        lapack_check(LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, wr.data(),
                                   wi.data(), nullptr, 1, nullptr, 1),
                     "dgeev");
        for (int i = 0; i < n; ++i) spec.eigenvalues(i) = cdouble(wr(i), wi(i));
    } else {
        MatrixXcd a = m;
        lapack_check(LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n,
                                   spec.eigenvalues.data(), nullptr, 1, nullptr, 1),
                     "zgeev");
    }
    return spec;
}

double sigma_min(const MatrixXcd& x, cdouble z) {
    const int n = static_cast<int>(x.rows());
    MatrixXcd a = x - z * MatrixXcd::Identity(n, n);
    if (n <= 512) {
        VectorXd s(n);
        if (is_real(a)) {
            MatrixXd ar = a.real();
            std::vector<double> superb(n);
            lapack_check(LAPACKE_dgesvd(LAPACK_COL_MAJOR, 'N', 'N', n, n, ar.data(), n,
                                        s.data(), nullptr, 1, nullptr, 1, superb.data()),
                         "dgesvd");
        } else {
            std::vector<double> superb(n);
            lapack_check(LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'N', 'N', n, n, a.data(), n, s.data(),
                                        nullptr, 1, nullptr, 1, superb.data()),
                         "zgesvd");
        }
        return s(n - 1);
    }

    // Shift-invert Lanczos on the Hermitization at 0: the extreme eigenvalue
    // of [[0, A^{-*}],[A^{-1}, 0]] is 1/sigma_min(A). Real shifted matrices
    // run entirely in real arithmetic.
    if (is_real(a)) {
        Eigen::PartialPivLU<MatrixXd> lu(a.real());
        auto apply = [&](const VectorXd& v) {
            VectorXd out(2 * n);
            out.head(n) = lu.transpose().solve(v.tail(n));
            out.tail(n) = lu.solve(v.head(n));
            return out;
        };
        return lanczos_extreme_inverse<VectorXd>(apply, 2 * n, [](RngStream& rng) {
            return rng.normal();
        });
    }
    Eigen::PartialPivLU<MatrixXcd> lu(a);
    auto apply = [&](const VectorXcd& v) {
        VectorXcd out(2 * n);
        out.head(n) = lu.adjoint().solve(v.tail(n));
        out.tail(n) = lu.solve(v.head(n));
        return out;
    };
    return lanczos_extreme_inverse<VectorXcd>(apply, 2 * n, [](RngStream& rng) {
        return cdouble(rng.normal(), rng.normal());
    });
}

cdouble resolvent_bilinear(const MatrixXcd& x, cdouble z, const VectorXcd& u,
                           const VectorXcd& w) {
    const int n = static_cast<int>(x.rows());
    MatrixXcd a = x - z * MatrixXcd::Identity(n, n);
    Eigen::PartialPivLU<MatrixXcd> lu(a);
    VectorXcd sol = lu.solve(w);
    double resid = (a * sol - w).norm() / std::max(w.norm(), 1e-300);
    // ||sol|| / ||w|| bounds 1/sigma_min from below, so growth past 1e10
    // certifies a violation of the sigma_min > 1e-10 precondition
    if (!sol.allFinite() || resid > 1e-10 || sol.norm() > 1e10 * w.norm()) {
        double smin = sigma_min(x, z);
        throw NearSingularShift(
            "resolvent_bilinear: shift too close to the spectrum (sigma_min=" +
                std::to_string(smin) + ")",
            smin);
    }
    return u.dot(sol);
}

// ---------------------------------------------------------------------------

struct ResolventEvaluator::Impl {
    bool real = false;
    int n = 0;
    std::optional<Eigen::HessenbergDecomposition<MatrixXd>> hr;
    std::optional<Eigen::HessenbergDecomposition<MatrixXcd>> hc;
    MatrixXcd h;  // dense Hessenberg factor
};

ResolventEvaluator::ResolventEvaluator(const MatrixXcd& x) : impl_(std::make_unique<Impl>()) {
    if (x.rows() != x.cols())
        throw std::invalid_argument("ResolventEvaluator: matrix must be square");
    impl_->n = static_cast<int>(x.rows());
    impl_->real = is_real(x);
    if (impl_->real) {
        impl_->hr.emplace(x.real());
        impl_->h = impl_->hr->matrixH().cast<cdouble>();
    } else {
        impl_->hc.emplace(x);
        impl_->h = impl_->hc->matrixH();
    }
}

ResolventEvaluator::~ResolventEvaluator() = default;
ResolventEvaluator::ResolventEvaluator(ResolventEvaluator&&) noexcept = default;

int ResolventEvaluator::n() const { return impl_->n; }

VectorXcd ResolventEvaluator::to_frame(const VectorXcd& v) const {
    if (impl_->real) {
        VectorXd re = impl_->hr->matrixQ().transpose() * v.real();
        VectorXd im = impl_->hr->matrixQ().transpose() * v.imag();
        return re + cdouble(0, 1) * im;
    }
    return impl_->hc->matrixQ().adjoint() * v;
}

VectorXcd ResolventEvaluator::from_frame(const VectorXcd& v) const {
    if (impl_->real) {
        VectorXd re = impl_->hr->matrixQ() * v.real();
        VectorXd im = impl_->hr->matrixQ() * v.imag();
        return re + cdouble(0, 1) * im;
    }
    return impl_->hc->matrixQ() * v;
}

VectorXcd ResolventEvaluator::frame_solve(cdouble z, const VectorXcd& b) const {
    const int n = impl_->n;
    MatrixXcd w = impl_->h;
    w.diagonal().array() -= z;
    VectorXcd y = b;
    // Givens elimination of the subdiagonal, then back substitution
    for (int k = 0; k + 1 < n; ++k) {
        cdouble p = w(k, k), q = w(k + 1, k);
        double r = std::hypot(std::abs(p), std::abs(q));
        if (r == 0.0)
            throw NearSingularShift("frame_solve: exact singularity at shift", 0.0);
        cdouble c = std::conj(p) / r, s = std::conj(q) / r;
        for (int j = k; j < n; ++j) {
            cdouble t1 = w(k, j), t2 = w(k + 1, j);
            w(k, j) = c * t1 + s * t2;
            w(k + 1, j) = -std::conj(s) * t1 + std::conj(c) * t2;
        }
        cdouble t1 = y(k), t2 = y(k + 1);
        y(k) = c * t1 + s * t2;
        y(k + 1) = -std::conj(s) * t1 + std::conj(c) * t2;
    }
    for (int k = n - 1; k >= 0; --k) {
        cdouble acc = y(k);
        for (int j = k + 1; j < n; ++j) acc -= w(k, j) * y(j);
        if (w(k, k) == cdouble(0.0, 0.0))
            throw NearSingularShift("frame_solve: exact singularity at shift", 0.0);
        y(k) = acc / w(k, k);
    }
    // residual contract, checked in the Hessenberg frame
    VectorXcd hy(n);
    for (int i = 0; i < n; ++i) {
        cdouble acc = -z * y(i);
        int lo = std::max(0, i - 1);
        for (int j = lo; j < n; ++j) acc += impl_->h(i, j) * y(j);
        hy(i) = acc;
    }
    double resid = (hy - b).norm() / std::max(b.norm(), 1e-300);
    if (resid > 1e-10)
        throw NearSingularShift("frame_solve: residual " + std::to_string(resid) +
                                    " exceeds contract; shift near the spectrum",
                                resid);
    if (y.norm() > 1e10 * b.norm())
        throw NearSingularShift("frame_solve: shift within 1e-10 of the spectrum", 0.0);
    return y;
}

VectorXcd ResolventEvaluator::solve(cdouble z, const VectorXcd& rhs) const {
    return from_frame(frame_solve(z, to_frame(rhs)));
}

cdouble ResolventEvaluator::bilinear(cdouble z, const VectorXcd& u, const VectorXcd& w) const {
    VectorXcd qu = to_frame(u);
    VectorXcd y = frame_solve(z, to_frame(w));
    return qu.dot(y);
}

// ---------------------------------------------------------------------------

double isotropic_deviation(const MatrixXcd& x, cdouble rho, std::span<const cdouble> grid,
                           const VectorXcd& u, const VectorXcd& w) {
    ResolventEvaluator eval(x);
    VectorXcd qu = eval.to_frame(u);
    VectorXcd qw = eval.to_frame(w);
    cdouble uw = u.dot(w);
    double worst = 0.0;
    for (cdouble z : grid) {
        cdouble pred = limit_b(z, rho) * uw;  // throws for z inside the region
        cdouble val = qu.dot(eval.frame_solve(z, qw));
        worst = std::max(worst, std::abs(val - pred));
    }
    return worst;
}

}  // namespace rmlab
