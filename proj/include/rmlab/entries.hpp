#pragma once

#include <complex>
#include <utility>

#include "rmlab/rng.hpp"

namespace rmlab {

using cdouble = std::complex<double>;

enum class EntryFamily { GaussianReal, GaussianComplex, BoundedSymmetric, HeavyP, BernoulliSparse };

// Law of the matrix entries attached to graph edges. Off-diagonal marginals
// have mean 0 and variance 1; transpose pairs satisfy E[g1 g2] = rho; self
// loops carry E[g^2] = diag_second_moment.
//
// Concrete laws:
//   bounded-symmetric : uniform on [-sqrt(3), sqrt(3)], or Rademacher
//   heavy-p           : symmetrized Pareto with tail exponent p+1,
//                       normalized to unit variance
//   bernoulli-sparse  : sqrt(n/k) * Ber(k/n) mask * bounded variable
struct EntryModel {
    EntryFamily family = EntryFamily::GaussianReal;
    cdouble rho = 0.0;
    cdouble diag_second_moment = 1.0;
    bool rademacher = false;  // bounded-symmetric variant
    double p = 5.0;           // heavy-p moment parameter, > 4
    double sparse_k = 0.0;    // bernoulli-sparse: mask probability k/n

    bool real_valued() const { return family != EntryFamily::GaussianComplex; }

    // a.s. bound on |g| for bounded laws at matrix dimension n; infinity otherwise
    double entry_bound(int n) const;

    // throws std::invalid_argument on inconsistent configuration
    void validate(int n) const;
};

// One off-diagonal variable: E[g] = 0, E[|g|^2] = 1.
cdouble draw_single(const EntryModel& model, RngStream& rng, int n);

// A transpose pair with E[g1 g2] = rho.
// Real families use g2 = rho*g1 + sqrt(1-rho^2)*g1' (rho real);
// the complex Gaussian family uses g1 = a, g2 = rho*conj(a) + sqrt(1-|rho|^2)*b.
// rho = +1 and -1 produce exactly equal / negated values.
std::pair<cdouble, cdouble> draw_pair(const EntryModel& model, RngStream& rng, int n);

// Self-loop variable: E[g] = 0, E[|g|^2] = 1, E[g^2] = diag_second_moment.
cdouble draw_diagonal(const EntryModel& model, RngStream& rng, int n);

// E[g^2 1_{|g| <= t}] for the real single-entry law, by closed form where
// available (Gaussian) and 1e6-sample Monte Carlo otherwise; the Monte Carlo
// path returns a standard error. Used by the truncation step.
struct TruncatedSecondMoment {
    double value;
    double stderr_estimate;  // 0 for analytic results
};
TruncatedSecondMoment truncated_second_moment(const EntryModel& model, int n, double t_new,
                                              double t_old);

}  // namespace rmlab
