#include "rmlab/dyson.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <array>
#include <cmath>

#include "rmlab/geometry.hpp"

namespace rmlab {

namespace {

using Eigen::Matrix2cd;

Matrix2cd self_energy(const Matrix2cd& g, cdouble rho0) {
    Matrix2cd s;
    s << g(1, 1), rho0 * g(1, 0), std::conj(rho0) * g(0, 1), g(0, 0);
    return s;
}

double defect(const Matrix2cd& g, const Matrix2cd& m, cdouble rho0) {
    Matrix2cd e = self_energy(g, rho0) + g.inverse() + m;
    return e.cwiseAbs().maxCoeff();
}

}  // namespace

bool DysonSolution::positive_imaginary_part() const {
    const double im_a = a.imag();
    const double im_c = c.imag();
    const cdouble off = (b - std::conj(b21)) / cdouble(0.0, 2.0);
    return im_a > 0.0 && im_c > 0.0 && im_a * im_c > std::norm(off);
}

DysonSolution solve(const DysonParams& p, double tol, int max_iter) {
    if (p.v.imag() <= 0.0) throw std::invalid_argument("dyson solve: Im v must be positive");
    if (tol <= 0.0) throw std::invalid_argument("dyson solve: tol must be positive");

    Matrix2cd m;
    m << p.v, p.z, std::conj(p.z), p.v;
    Matrix2cd g = cdouble(0, 1) * Matrix2cd::Identity();
    double res = defect(g, m, p.rho0);
    double theta = 0.5;
    int it = 0;
    for (; it < max_iter && res > tol; ++it) {
        Matrix2cd fix = (-m - self_energy(g, p.rho0)).inverse();
        Matrix2cd next = (1.0 - theta) * g + theta * fix;
        double res_next = defect(next, m, p.rho0);
        // every step is taken: the residual is not monotone along the
        // converging spiral, so rejection can stall the iteration
        g = next;
        if (res_next > res)
            theta = std::max(0.5 * theta, 1e-3);  // geometric fallback
        else
            theta = std::min(0.5, theta * 1.02);
        res = res_next;
    }
    if (res > tol)
        throw DysonConvergenceError(
            "dyson solve: no convergence after " + std::to_string(max_iter) +
                " iterations (eta may be too small for the damping schedule)",
            res);

    DysonSolution sol;
    sol.a = g(0, 0);
    sol.b = g(0, 1);
    sol.b21 = g(1, 0);
    sol.c = g(1, 1);
    sol.residual = res;
    sol.iterations = it;
    sol.converged = true;
    return sol;
}

ReducedSolution solve_reduced(cdouble z, double eta, cdouble rho0) {
    if (eta <= 0.0) throw std::invalid_argument("solve_reduced: eta must be positive");
    const double r2 = std::norm(rho0);
    // b as a function of S = V^2 + |b|^2, from the real-linear system
    //   (1/S) b + rho0 conj(b) = -z
    auto b_of = [&](double s) -> cdouble {
        return s * (-z + s * rho0 * std::conj(z)) / (1.0 - s * s * r2);
    };
    auto f = [&](double s) {
        double v = eta * s / (1.0 - s);
        return v * v + std::norm(b_of(s)) - s;
    };
    // Exactly one root in (0, 1): f < 0 near 0, f -> +inf at 1.
    double lo = 1e-14, hi = 1.0 - 1e-14;
    if (f(lo) > 0.0) lo = 1e-300;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double s = 0.5 * (lo + hi);
    ReducedSolution sol;
    sol.S = s;
    sol.V = eta * s / (1.0 - s);
    sol.b = b_of(s);
    return sol;
}

cdouble branch_sqrt(cdouble z, cdouble rho0) {
    if (rho0 == cdouble(0.0, 0.0)) return z;
    cdouble s = 2.0 * std::sqrt(rho0);
    // cut exactly on the segment [-s, s]; ~ z at infinity
    return z * std::sqrt(1.0 - s / z) * std::sqrt(1.0 + s / z);
}

cdouble limit_b(cdouble z, cdouble rho0) {
    EllipticRegion region(rho0, 1e-9);
    if (region.contains(z))
        throw std::domain_error("limit_b: z inside the elliptic region, limit formula invalid");
    // (-z + sqrt(z^2 - 4 rho0)) / (2 rho0) without the rho0 -> 0 cancellation;
    // |z + branch_sqrt| >= 2 on the exterior domain.
    return -2.0 / (z + branch_sqrt(z, rho0));
}

SupportClass classify_support(cdouble z, cdouble rho0, std::span<const double> eta_schedule) {
    static constexpr std::array<double, 3> kDefault{1e-2, 1e-3, 1e-4};
    std::span<const double> etas =
        eta_schedule.empty() ? std::span<const double>(kDefault) : eta_schedule;
    if (etas.size() < 2)
        throw std::invalid_argument("classify_support: schedule needs at least two etas");

    std::vector<double> v;
    v.reserve(etas.size());
    for (double eta : etas) v.push_back(solve_reduced(z, eta, rho0).V);

    const double eta_min = etas.back();
    const double eta_prev = etas[etas.size() - 2];
    if (v.back() < 10.0 * eta_min) return SupportClass::Outside;
    if (v.back() > 0.2) return SupportClass::Inside;
    // outside the support V is linear in eta, inside it saturates
    const double scale = eta_prev / eta_min;
    const double ratio = v[v.size() - 2] / v.back();
    if (ratio >= 0.4 * scale) return SupportClass::Outside;
    if (ratio <= 0.2 * scale) return SupportClass::Inside;
    return SupportClass::Boundary;
}

double gap_estimate(cdouble z, cdouble rho0) {
    if (classify_support(z, rho0) != SupportClass::Outside) return 0.0;

    const double eta = 1e-6;
    const double dens_threshold = 1e-4;
    auto density = [&](double e) {
        try {
            DysonSolution s = solve({z, cdouble(e, eta), rho0}, 1e-10, 100000);
            return std::max(s.a.imag(), s.c.imag());
        } catch (const DysonConvergenceError&) {
            // the iteration only slows down this much at or inside the band
            // edge, where the density is far above threshold
            return std::numeric_limits<double>::infinity();
        }
    };

    const double e_max = std::abs(z) + 3.0;
    const int coarse = 256;
    double lo = 0.0, hi = -1.0;
    for (int k = 1; k <= coarse; ++k) {
        double e = e_max * k / coarse;
        if (density(e) > dens_threshold) {
            hi = e;
            break;
        }
        lo = e;
    }
    if (hi < 0.0)
        throw GapBracketError("gap_estimate: no spectral density found below E = " +
                              std::to_string(e_max));
    while (hi - lo > 1e-8) {
        double mid = 0.5 * (lo + hi);
        if (density(mid) > dens_threshold)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace rmlab
