#include "rmlab/outliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "rmlab/dyson.hpp"

namespace rmlab {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

VectorXcd compression_eigenvalues(const MatrixXcd& m) {
    if (m.rows() == 0) return VectorXcd(0);
    return eigenvalues(m).eigenvalues;
}

}  // namespace

Perturbation Perturbation::from_factors(MatrixXcd a, MatrixXcd b) {
    if (a.cols() != b.rows() || a.rows() != b.cols())
        throw std::invalid_argument("perturbation: factor shapes must be (n,k) and (k,n)");
    Perturbation p;
    p.compression = b * a;
    p.eigenvalues_c = compression_eigenvalues(p.compression);
    p.a_factor = std::move(a);
    p.b_factor = std::move(b);
    return p;
}

Perturbation factor(const MatrixXcd& c, int rank_cap) {
    Eigen::BDCSVD<MatrixXcd> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    int k = 0;
    while (k < sv.size() && sv(k) > cut) ++k;
    if (k > rank_cap)
        throw RankCapExceeded("factor: numerical rank " + std::to_string(k) +
                                  " exceeds the O(1) cap " + std::to_string(rank_cap),
                              k);
    VectorXcd root = sv.head(k).cwiseSqrt().cast<cdouble>();
    MatrixXcd a = svd.matrixU().leftCols(k) * root.asDiagonal();
    MatrixXcd b = root.asDiagonal() * svd.matrixV().leftCols(k).adjoint();
    return Perturbation::from_factors(std::move(a), std::move(b));
}

std::vector<OutlierPrediction> predict(const Perturbation& pert, cdouble rho, double epsilon) {
    if (std::abs(rho) > 1.0 + 1e-15) throw std::invalid_argument("predict: |rho| must be <= 1");
    if (epsilon <= 0.0) throw std::invalid_argument("predict: epsilon must be positive");
    EllipticRegion inner(rho, epsilon);
    EllipticRegion outer(rho, 3.0 * epsilon);
    std::vector<OutlierPrediction> out;
    out.reserve(pert.eigenvalues_c.size());
    for (cdouble lambda : pert.eigenvalues_c) {
        OutlierPrediction p;
        p.source = lambda;
        p.predicted = lambda == cdouble(0.0, 0.0) ? cdouble(0.0, 0.0) : lambda + rho / lambda;
        p.admissible = std::abs(lambda) >= 1.0 && !inner.contains(p.predicted);
        if (std::abs(lambda) > 1.0 && outer.contains(p.predicted) && !inner.contains(p.predicted))
            throw AnnulusViolation(
                "predict: prediction lands in the exclusion annulus E_{rho,3eps} \\ E_{rho,eps} "
                "where outlier locations are unreliable",
                lambda);
        out.push_back(p);
    }
    return out;
}

cdouble det_f(cdouble z, const MatrixXcd& x, const Perturbation& pert) {
    const int n = static_cast<int>(x.rows());
    const int k = pert.rank();
    if (k == 0) return 1.0;
    MatrixXcd a = x - z * MatrixXcd::Identity(n, n);
    Eigen::PartialPivLU<MatrixXcd> lu(a);
    MatrixXcd y = lu.solve(pert.a_factor);
    double resid = (a * y - pert.a_factor).norm() / std::max(pert.a_factor.norm(), 1e-300);
    if (!y.allFinite() || resid > 1e-10 || y.norm() > 1e10 * pert.a_factor.norm()) {
        double smin = sigma_min(x, z);
        throw NearSingularShift("det_f: shift too close to the spectrum (sigma_min=" +
                                    std::to_string(smin) + ")",
                                smin);
    }
    MatrixXcd m = MatrixXcd::Identity(k, k) + pert.b_factor * y;
    return m.determinant();
}

DetCriterion::DetCriterion(const MatrixXcd& x, Perturbation pert)
    : pert_(std::move(pert)), resolvent_(x) {
    const int k = pert_.rank();
    frame_a_.resize(x.rows(), k);
    frame_b_.resize(k, x.rows());
    for (int j = 0; j < k; ++j) {
        frame_a_.col(j) = resolvent_.to_frame(pert_.a_factor.col(j));
        frame_b_.row(j) = resolvent_.to_frame(pert_.b_factor.row(j).adjoint()).adjoint();
    }
}

cdouble DetCriterion::operator()(cdouble z) const {
    const int k = pert_.rank();
    if (k == 0) return 1.0;
    MatrixXcd m = MatrixXcd::Identity(k, k);
    for (int j = 0; j < k; ++j)
        m.col(j) += frame_b_ * resolvent_.frame_solve(z, frame_a_.col(j));
    return m.determinant();
}

cdouble det_g(cdouble z, const Perturbation& pert, cdouble rho) {
    const int k = pert.rank();
    if (k == 0) return 1.0;
    cdouble b = limit_b(z, rho);  // rejects z inside the region
    MatrixXcd m = MatrixXcd::Identity(k, k) + b * pert.compression;
    return m.determinant();
}

namespace {

// single pass of trapezoidal phase tracking; empty when the discretization
// is too coarse or the contour runs into a zero of f
std::optional<int> winding_attempt(const std::function<cdouble(cdouble)>& f, cdouble center,
                                   double radius, int points) {
    constexpr double kTwoPi = 6.283185307179586477;
    std::vector<cdouble> vals(points);
    for (int j = 0; j < points; ++j) {
        cdouble zj = center + std::polar(radius, kTwoPi * j / points);
        cdouble fj = f(zj);
        if (!std::isfinite(fj.real()) || !std::isfinite(fj.imag()) || std::abs(fj) < 1e-280)
            return std::nullopt;
        vals[j] = fj;
    }
    double total = 0.0;
    for (int j = 0; j < points; ++j) {
        double step = std::arg(vals[(j + 1) % points] / vals[j]);
        if (std::abs(step) > 1.5708) return std::nullopt;  // phase step above pi/2
        total += step;
    }
    double w = total / kTwoPi;
    int rounded = static_cast<int>(std::lround(w));
    if (std::abs(w - rounded) > 0.15) return std::nullopt;
    return rounded;
}

cdouble newton_refine(const std::function<cdouble(cdouble)>& f, cdouble start) {
    cdouble z = start;
    for (int it = 0; it < 200; ++it) {
        cdouble fz = f(z);
        if (std::abs(fz) < 1e-13) return z;
        double h = 1e-6 * (1.0 + std::abs(z));
        cdouble d = (f(z + h) - f(z - h)) / (2.0 * h);
        if (d == cdouble(0.0, 0.0)) return z;
        cdouble step = fz / d;
        z -= step;
        if (std::abs(step) <= 1e-10 * (1.0 + std::abs(z))) return z;
    }
    return z;
}

}  // namespace

int winding_number(const std::function<cdouble(cdouble)>& f, cdouble center, double radius) {
    for (double r : {radius, radius * 1.13}) {
        if (auto w = winding_attempt(f, center, r, 64)) return *w;
        if (auto w = winding_attempt(f, center, r, 128)) return *w;
    }
    throw ContourNearRoot("winding_number: contour passes too close to a root of f");
}

std::vector<RootResult> find_roots(const std::function<cdouble(cdouble)>& f,
                                   std::span<const cdouble> seeds, const EllipticRegion& region,
                                   double radius) {
    if (radius <= 0.0) throw std::invalid_argument("find_roots: radius must be positive");
    for (cdouble s : seeds)
        if (region.contains(s))
            throw std::invalid_argument("find_roots: seed inside the elliptic region");
    std::vector<RootResult> out;
    for (cdouble seed : seeds) {
        int w = winding_number(f, seed, radius);
        if (w == 0) continue;
        out.push_back({newton_refine(f, seed), w});
    }
    return out;
}

OutlierReport match(std::span<const cdouble> observed, std::span<const cdouble> predictions,
                    double cap_distance) {
    OutlierReport rep;
    rep.observed.assign(observed.begin(), observed.end());
    std::vector<bool> obs_used(observed.size(), false);
    std::vector<bool> pred_used(predictions.size(), false);
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < observed.size(); ++i) {
            if (obs_used[i]) continue;
            for (std::size_t j = 0; j < predictions.size(); ++j) {
                if (pred_used[j]) continue;
                double d = std::abs(observed[i] - predictions[j]);
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (!std::isfinite(best) || best > cap_distance) break;
        obs_used[bi] = true;
        pred_used[bj] = true;
        rep.matches.push_back({predictions[bj], observed[bi], best});
    }
    for (std::size_t j = 0; j < predictions.size(); ++j)
        if (!pred_used[j]) rep.unmatched_predictions.push_back(predictions[j]);
    for (std::size_t i = 0; i < observed.size(); ++i)
        if (!obs_used[i]) rep.unmatched_observed.push_back(observed[i]);
    return rep;
}

}  // namespace rmlab
