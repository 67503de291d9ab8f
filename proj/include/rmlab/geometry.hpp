#pragma once

#include <complex>
#include <vector>

namespace rmlab {

using cdouble = std::complex<double>;

// The elliptic region E_rho = { x + rho * conj(x) : |x| <= 1 } together with
// its epsilon-fattening in Euclidean distance. For real rho this is the
// ellipse with semi-axes 1 + rho and 1 - rho; for complex rho it is the real
// case rotated by arg(rho)/2; at |rho| = 1 it degenerates to a segment of
// length 4.
class EllipticRegion {
public:
    EllipticRegion(cdouble rho, double epsilon);

    cdouble rho() const { return rho_; }
    double epsilon() const { return epsilon_; }
    EllipticRegion with_epsilon(double eps) const { return {rho_, eps}; }

    // dist(z, E_rho) <= epsilon
    bool contains(cdouble z) const;

    // Euclidean distance from z to E_rho (0 inside), independent of epsilon.
    double distance(cdouble z) const;

    // Distance from z to the boundary curve of E_rho, regardless of side.
    double boundary_distance(cdouble z) const;

    // Points e^{i phi_k} + rho e^{-i phi_k}, phi_k = 2 pi k / m, pushed
    // outward by epsilon when epsilon > 0.
    std::vector<cdouble> boundary_points(int m) const;

    // z in the open interior of E_rho (strictly, ignoring epsilon)
    bool strictly_inside(cdouble z) const;

private:
    cdouble boundary_at(double phi) const;
    double nearest_boundary_param(cdouble z) const;
    double map_radius(cdouble z) const;

    cdouble rho_;
    double epsilon_;
    bool degenerate_;  // |rho| within 1e-12 of 1
};

}  // namespace rmlab
