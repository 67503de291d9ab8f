#include "rmlab/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace rmlab {

namespace {

constexpr int kGridPoints = 4096;
constexpr double kTwoPi = 6.283185307179586477;

}  // namespace

EllipticRegion::EllipticRegion(cdouble rho, double epsilon) : rho_(rho), epsilon_(epsilon) {
    if (std::abs(rho) > 1.0 + 1e-12)
        throw std::invalid_argument("elliptic region: |rho| must be <= 1");
    if (epsilon < 0.0) throw std::invalid_argument("elliptic region: epsilon must be >= 0");
    degenerate_ = std::abs(rho) >= 1.0 - 1e-12;
}

cdouble EllipticRegion::boundary_at(double phi) const {
    cdouble e = std::polar(1.0, phi);
    return e + rho_ * std::conj(e);
}

double EllipticRegion::map_radius(cdouble z) const {
    // invert the real-linear map x -> x + rho conj(x); determinant 1 - |rho|^2
    const double p = rho_.real(), q = rho_.imag();
    const double det = 1.0 - p * p - q * q;
    const double u = ((1.0 - p) * z.real() - q * z.imag()) / det;
    const double v = (-q * z.real() + (1.0 + p) * z.imag()) / det;
    return std::sqrt(u * u + v * v);
}

bool EllipticRegion::strictly_inside(cdouble z) const {
    if (degenerate_) return false;
    return map_radius(z) <= 1.0 + 1e-12;
}

double EllipticRegion::nearest_boundary_param(cdouble z) const {
    double best = 0.0, best_d = std::abs(z - boundary_at(0.0));
    for (int k = 1; k < kGridPoints; ++k) {
        double phi = kTwoPi * k / kGridPoints;
        double d = std::abs(z - boundary_at(phi));
        if (d < best_d) {
            best_d = d;
            best = phi;
        }
    }
    // golden-section refinement around the best grid cell
    const double gr = 0.6180339887498949;
    double lo = best - kTwoPi / kGridPoints, hi = best + kTwoPi / kGridPoints;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = std::abs(z - boundary_at(x1)), f2 = std::abs(z - boundary_at(x2));
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = std::abs(z - boundary_at(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = std::abs(z - boundary_at(x2));
        }
    }
    return 0.5 * (lo + hi);
}

double EllipticRegion::boundary_distance(cdouble z) const {
    return std::abs(z - boundary_at(nearest_boundary_param(z)));
}

double EllipticRegion::distance(cdouble z) const {
    if (degenerate_) {
        // segment e^{i arg(rho)/2} [-2, 2]
        cdouble u = std::polar(1.0, 0.5 * std::arg(rho_));
        cdouble w = z * std::conj(u);
        double along = std::max(std::abs(w.real()) - 2.0, 0.0);
        return std::hypot(along, w.imag());
    }
    if (strictly_inside(z)) return 0.0;
    return boundary_distance(z);
}

bool EllipticRegion::contains(cdouble z) const {
    if (degenerate_) return distance(z) <= epsilon_ + 1e-12;
    double r = map_radius(z);
    if (r <= 1.0 + 1e-12) return true;
    if (epsilon_ <= 0.0) return false;
    // the map x -> x + rho conj(x) has smallest singular value 1 - |rho|,
    // so dist(z, E_rho) >= (r - 1)(1 - |rho|): a cheap exterior early-out
    if ((r - 1.0) * (1.0 - std::abs(rho_)) > epsilon_) return false;
    return boundary_distance(z) <= epsilon_;
}

std::vector<cdouble> EllipticRegion::boundary_points(int m) const {
    if (m < 3) throw std::invalid_argument("boundary_points: need at least 3 points");
    std::vector<cdouble> pts;
    pts.reserve(m);
    for (int k = 0; k < m; ++k) {
        double phi = kTwoPi * k / m;
        cdouble p = boundary_at(phi);
        if (epsilon_ > 0.0) {
            cdouble e = std::polar(1.0, phi);
            cdouble tangent = cdouble(0, 1) * e - cdouble(0, 1) * rho_ * std::conj(e);
            double tn = std::abs(tangent);
            cdouble outward;
            if (tn > 1e-9)
                outward = cdouble(0, -1) * tangent / tn;
            else if (std::abs(p) > 1e-12)
                outward = p / std::abs(p);  // degenerate segment endpoint: radial
            else
                outward = 0.0;
            p += epsilon_ * outward;
        }
        pts.push_back(p);
    }
    return pts;
}

}  // namespace rmlab
