#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rmlab/dyson.hpp"
#include "rmlab/ensemble.hpp"
#include "rmlab/outliers.hpp"

using namespace rmlab;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

MatrixXcd scaled_gaussian(int n, std::uint64_t seed, cdouble rho = 0.0) {
    EnsembleSpec spec;
    spec.graph = {GraphKind::Complete, n, SelfLoops::All, false};
    spec.entries = {EntryFamily::GaussianReal, rho, 1.0};
    return sample_matrix(spec, seed, 0).entries;
}

// rank-k matrix with prescribed eigenvalues: C = X diag(theta) Y^*,
// Y^* X = I_k
MatrixXcd with_eigenvalues(int n, const std::vector<cdouble>& thetas, std::uint64_t key) {
    const int k = static_cast<int>(thetas.size());
    RngStream rng(key);
    MatrixXcd x(n, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = rng.normal_complex();
    MatrixXcd y = x * (x.adjoint() * x).inverse();
    MatrixXcd diag = MatrixXcd::Zero(k, k);
    for (int j = 0; j < k; ++j) diag(j, j) = thetas[j];
    return x * diag * y.adjoint();
}

}  // namespace

TEST_CASE("factor: rank-one spike") {
    const int n = 20;
    RngStream rng(1);
    VectorXcd u(n);
    for (int i = 0; i < n; ++i) u(i) = rng.normal_complex();
    u.normalize();
    MatrixXcd c = 2.0 * u * u.adjoint();
    Perturbation p = factor(c);
    CHECK(p.rank() == 1);
    CHECK(std::abs(p.eigenvalues_c(0) - cdouble(2.0, 0.0)) < 1e-10);
    CHECK((p.matrix() - c).norm() < 1e-10);
    CHECK(p.a_factor.norm() == doctest::Approx(p.b_factor.norm()).epsilon(1e-10));
}

TEST_CASE("factor: diagonal rank two and nilpotent block") {
    MatrixXcd c = MatrixXcd::Zero(10, 10);
    c(0, 0) = 2.0;
    c(1, 1) = 0.5;
    Perturbation p = factor(c);
    CHECK(p.rank() == 2);
    std::vector<double> eigs{std::abs(p.eigenvalues_c(0)), std::abs(p.eigenvalues_c(1))};
    std::sort(eigs.begin(), eigs.end());
    CHECK(eigs[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(eigs[1] == doctest::Approx(2.0).epsilon(1e-10));

    MatrixXcd nil = MatrixXcd::Zero(10, 10);
    nil(0, 1) = 1.0;  // e1 e2^*, nilpotent
    Perturbation np = factor(nil);
    CHECK(np.rank() == 1);
    CHECK(std::abs(np.eigenvalues_c(0)) < 1e-10);
}

TEST_CASE("factor: nonzero eigenvalues transfer through the compression") {
    MatrixXcd c = with_eigenvalues(30, {cdouble(2.0, 0.5), cdouble(-1.3, 0.0)}, 2);
    Perturbation p = factor(c);
    CHECK(p.rank() == 2);
    Spectrum full = eigenvalues(c);
    std::vector<cdouble> nonzero;
    for (cdouble e : full.eigenvalues)
        if (std::abs(e) > 1e-8) nonzero.push_back(e);
    REQUIRE(nonzero.size() == 2);
    for (cdouble e : nonzero) {
        double best = 1e9;
        for (cdouble q : p.eigenvalues_c) best = std::min(best, std::abs(q - e));
        CHECK(best < 1e-8);
    }
}

TEST_CASE("factor: rank above the cap is rejected") {
    RngStream rng(3);
    MatrixXcd big = MatrixXcd::Zero(40, 40);
    for (int j = 0; j < 20; ++j) big(j, j) = 1.0 + rng.uniform01();
    CHECK_THROWS_AS(factor(big), RankCapExceeded);
    CHECK_NOTHROW(factor(big, 24));
}

TEST_CASE("predict: admissibility filtering") {
    MatrixXcd c = MatrixXcd::Zero(12, 12);
    c(0, 0) = 2.0;
    c(1, 1) = 0.5;
    Perturbation p = factor(c);
    auto preds = predict(p, 0.0, 0.1);
    int admissible = 0;
    for (const auto& pr : preds) {
        if (!pr.admissible) continue;
        ++admissible;
        CHECK(std::abs(pr.predicted - cdouble(2.0, 0.0)) < 1e-10);
        CHECK(std::abs(pr.source - cdouble(2.0, 0.0)) < 1e-10);
    }
    CHECK(admissible == 1);
}

TEST_CASE("predict: BBP values for rho=1 and rho=0.5") {
    MatrixXcd c = MatrixXcd::Zero(8, 8);
    c(0, 0) = 2.0;
    Perturbation p = factor(c);
    for (const auto& pr : predict(p, 1.0, 0.1))
        if (pr.admissible) CHECK(std::abs(pr.predicted - cdouble(2.5, 0.0)) < 1e-10);
    for (const auto& pr : predict(p, cdouble(0.5, 0.0), 0.1))
        if (pr.admissible) CHECK(std::abs(pr.predicted - cdouble(2.25, 0.0)) < 1e-10);
}

TEST_CASE("predict: exclusion annulus violation raises with the offender") {
    MatrixXcd c = MatrixXcd::Zero(8, 8);
    c(0, 0) = 1.5;  // prediction 1.5 lands in E_{0, 0.9} \ E_{0, 0.3}
    Perturbation p = factor(c);
    try {
        predict(p, 0.0, 0.3);
        FAIL("expected AnnulusViolation");
    } catch (const AnnulusViolation& e) {
        CHECK(std::abs(e.offending - cdouble(1.5, 0.0)) < 1e-10);
    }
}

TEST_CASE("det_f on the zero matrix is 1 - theta/z") {
    const int n = 20;
    MatrixXcd zero = MatrixXcd::Zero(n, n);
    MatrixXcd c = MatrixXcd::Zero(n, n);
    c(0, 0) = 2.0;
    Perturbation p = factor(c);
    for (cdouble z : {cdouble(3.0, 0.0), cdouble(1.0, 2.0), cdouble(-4.0, 0.5)})
        CHECK(std::abs(det_f(z, zero, p) - (1.0 - 2.0 / z)) < 1e-12);
    CHECK(std::abs(det_f(cdouble(3.0, 0.0), zero, p) - cdouble(1.0 / 3.0, 0.0)) < 1e-12);
}

TEST_CASE("det_f equals the n x n determinant route (det(1+AB) = det(1+BA))") {
    const int n = 24;
    MatrixXcd x = scaled_gaussian(n, 4);
    MatrixXcd c = with_eigenvalues(n, {cdouble(1.8, 0.2), cdouble(-2.2, 0.4)}, 5);
    Perturbation p = factor(c);
    MatrixXcd id = MatrixXcd::Identity(n, n);
    for (cdouble z : {cdouble(2.5, 0.3), cdouble(-1.9, -1.0)}) {
        MatrixXcd resolvent = (x - z * id).partialPivLu().solve(p.matrix());
        cdouble big = (id + resolvent).determinant();
        CHECK(std::abs(det_f(z, x, p) - big) < 1e-10 * std::abs(big));
    }
}

TEST_CASE("DetCriterion evaluator agrees with det_f") {
    const int n = 30;
    MatrixXcd x = scaled_gaussian(n, 6);
    MatrixXcd c = with_eigenvalues(n, {cdouble(2.0, 0.0)}, 7);
    Perturbation p = factor(c);
    DetCriterion f(x, p);
    for (cdouble z : {cdouble(2.2, 0.1), cdouble(-3.0, 0.0), cdouble(0.5, 2.5)})
        CHECK(std::abs(f(z) - det_f(z, x, p)) < 1e-11);
}

TEST_CASE("det_g: closed-form roots and values") {
    MatrixXcd c = MatrixXcd::Zero(10, 10);
    c(0, 0) = 2.0;
    Perturbation p = factor(c);
    CHECK(std::abs(det_g(cdouble(3.0, 0.0), p, 0.0) - cdouble(1.0 / 3.0, 0.0)) < 1e-12);
    CHECK(std::abs(det_g(cdouble(2.0 + 1e-12, 0.0), p, 0.0)) < 1e-9);
    // rho = 0.5: root at 2 + 0.5/2 = 2.25
    CHECK(std::abs(det_g(cdouble(2.25, 0.0), p, cdouble(0.5, 0.0))) < 1e-12);
    CHECK_THROWS_AS(det_g(cdouble(0.3, 0.0), p, 0.0), std::domain_error);
}

TEST_CASE("winding numbers: simple root, no root, double root") {
    auto f1 = [](cdouble z) { return 1.0 - 2.0 / z; };
    CHECK(winding_number(f1, cdouble(2.0, 0.0), 0.5) == 1);
    auto fconst = [](cdouble) { return cdouble(1.0, 0.0); };
    CHECK(winding_number(fconst, cdouble(2.0, 0.0), 0.5) == 0);
    auto f2 = [&](cdouble z) { return f1(z) * f1(z); };
    CHECK(winding_number(f2, cdouble(2.0, 0.0), 0.5) == 2);
}

TEST_CASE("winding additivity over a partition of the disk") {
    auto f = [](cdouble z) { return (1.0 - 2.0 / z) * (1.0 - cdouble(2.4, 0.3) / z); };
    // half-disk contours assembled from arc + diameter segments
    auto path_winding = [&](const std::vector<cdouble>& path) {
        double total = 0.0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            cdouble a = f(path[i]);
            cdouble b = f(path[(i + 1) % path.size()]);
            total += std::arg(b / a);
        }
        return static_cast<int>(std::lround(total / (2.0 * M_PI)));
    };
    cdouble center(2.2, 0.15);
    double radius = 0.6;
    std::vector<cdouble> upper, lower;
    for (int k = 0; k <= 64; ++k) upper.push_back(center + std::polar(radius, M_PI * k / 64));
    for (int k = 62; k >= 1; --k)
        upper.push_back(center + cdouble(-radius + 2.0 * radius * k / 63, 0.0));
    for (int k = 0; k <= 64; ++k)
        lower.push_back(center + std::polar(radius, M_PI + M_PI * k / 64));
    for (int k = 1; k <= 62; ++k)
        lower.push_back(center + cdouble(-radius + 2.0 * radius * k / 63, 0.0));
    int whole = winding_number(f, center, radius);
    CHECK(whole == 2);
    CHECK(path_winding(upper) + path_winding(lower) == whole);
}

TEST_CASE("find_roots: refinement, multiplicities, and seed validation") {
    auto f1 = [](cdouble z) { return 1.0 - 2.0 / z; };
    EllipticRegion region(0.0, 0.1);
    std::vector<cdouble> seeds{cdouble(2.1, 0.05)};
    auto roots = find_roots(f1, seeds, region, 0.4);
    REQUIRE(roots.size() == 1);
    CHECK(roots[0].winding == 1);
    CHECK(std::abs(roots[0].location - cdouble(2.0, 0.0)) < 1e-9);

    auto f2 = [&](cdouble z) { return f1(z) * f1(z); };
    auto double_root = find_roots(f2, std::vector<cdouble>{cdouble(2.0, 0.0)}, region, 0.3);
    REQUIRE(double_root.size() == 1);
    CHECK(double_root[0].winding == 2);
    CHECK(std::abs(double_root[0].location - cdouble(2.0, 0.0)) < 1e-8);

    CHECK(find_roots([](cdouble) { return cdouble(1.0, 0.0); },
                     std::vector<cdouble>{cdouble(3.0, 0.0)}, region, 0.3)
              .empty());
    CHECK_THROWS_AS(
        find_roots(f1, std::vector<cdouble>{cdouble(0.5, 0.0)}, region, 0.3),
        std::invalid_argument);
}

TEST_CASE("det criterion exactness at n=60 against the brute-force oracle") {
    const int n = 60;
    for (cdouble rho : {cdouble(0.0, 0.0), cdouble(0.5, 0.0)}) {
        for (int trial = 0; trial < 3; ++trial) {
            MatrixXcd x = scaled_gaussian(n, 100 + trial, rho);
            MatrixXcd c =
                with_eigenvalues(n, {cdouble(2.0, 0.3), cdouble(-1.6, -0.8)}, 200 + trial);
            Perturbation p = factor(c);
            DetCriterion f(x, p);
            EllipticRegion region(rho, 0.1);

            Eigen::VectorXcd perturbed_eigs = eigenvalues(x + c).eigenvalues;
            Eigen::VectorXcd plain_eigs = eigenvalues(x).eigenvalues;
            std::vector<cdouble> oracle;
            for (cdouble e : perturbed_eigs)
                if (!region.contains(e)) oracle.push_back(e);
            std::vector<cdouble> xout;
            for (cdouble e : plain_eigs)
                if (!region.contains(e)) xout.push_back(e);

            for (cdouble o : oracle) {
                bool shadowed = false;
                for (cdouble q : xout) shadowed = shadowed || std::abs(q - o) < 1e-9;
                if (shadowed) continue;
                // keep every pole and every other zero outside the contour
                double sep = 0.25;
                for (cdouble q : plain_eigs) sep = std::min(sep, 0.45 * std::abs(q - o));
                for (cdouble q : perturbed_eigs)
                    if (std::abs(q - o) > 1e-9) sep = std::min(sep, 0.45 * std::abs(q - o));
                auto roots = find_roots([&](cdouble z) { return f(z); },
                                        std::vector<cdouble>{o}, region, sep);
                REQUIRE(roots.size() == 1);
                CHECK(roots[0].winding >= 1);
                CHECK(std::abs(roots[0].location - o) < 1e-6);
            }
        }
    }
}

TEST_CASE("g-roots recover lambda + rho/lambda for random rank-3 perturbations") {
    RngStream rng(300);
    for (cdouble rho : {cdouble(0.0, 0.0), cdouble(0.5, 0.0), cdouble(-0.5, 0.0),
                        cdouble(0.9, 0.0)}) {
        std::vector<cdouble> thetas;
        for (int j = 0; j < 3; ++j)
            thetas.push_back(std::polar(1.2 + 1.8 * rng.uniform01(), 2.0 * M_PI * rng.uniform01()));
        MatrixXcd c = with_eigenvalues(24, thetas, 400 + static_cast<int>(10 * rho.real()));
        Perturbation p = factor(c);
        EllipticRegion region(rho, 1e-6);
        for (cdouble theta : thetas) {
            cdouble target = theta + rho / theta;
            if (region.with_epsilon(0.05).contains(target)) continue;  // too close to the region
            auto roots = find_roots([&](cdouble z) { return det_g(z, p, rho); },
                                    std::vector<cdouble>{target}, region, 0.04);
            REQUIRE(roots.size() == 1);
            CHECK(std::abs(roots[0].location - target) < 1e-8);
        }
    }
}

TEST_CASE("the conformal map sends the exterior into the unit disk") {
    for (cdouble rho : {cdouble(0.5, 0.0), cdouble(-0.9, 0.0), cdouble(0.3, 0.4)}) {
        EllipticRegion ring(rho, 0.05);
        for (double off : {0.05, 0.4, 2.0})
            for (cdouble z : ring.with_epsilon(off).boundary_points(24)) {
                cdouble w = limit_b(z, rho);
                CHECK(std::abs(w) < 1.0);
            }
    }
}

TEST_CASE("match: nearest assignment, caps, and leftovers") {
    std::vector<cdouble> obs{cdouble(2.01, 0.0)};
    std::vector<cdouble> pred{cdouble(2.0, 0.0)};
    OutlierReport rep = match(obs, pred, 0.1);
    REQUIRE(rep.matches.size() == 1);
    CHECK(rep.matches[0].distance == doctest::Approx(0.01));
    CHECK(rep.unmatched_observed.empty());
    CHECK(rep.unmatched_predictions.empty());

    OutlierReport none = match(std::vector<cdouble>{}, std::vector<cdouble>{cdouble(2.25, 0.0)},
                               0.1);
    CHECK(none.matches.empty());
    CHECK(none.unmatched_predictions.size() == 1);

    std::vector<cdouble> obs2{cdouble(2.01, 0.0), cdouble(-1.99, 0.0)};
    std::vector<cdouble> pred2{cdouble(2.0, 0.0), cdouble(-2.0, 0.0)};
    OutlierReport two = match(obs2, pred2, 0.1);
    REQUIRE(two.matches.size() == 2);
    for (const auto& m : two.matches)
        CHECK(std::abs(m.predicted - m.observed) < 0.05);  // no crossover
    CHECK(two.matches[0].distance <= two.matches[1].distance);
}
