#include "rmlab/entries.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rmlab {

namespace {

constexpr double kSqrt3 = 1.7320508075688772935;

double pareto_norm(double alpha) { return std::sqrt(alpha / (alpha - 2.0)); }

// real scalar draw from a family, in law units (mean 0, variance 1)
double draw_real_scalar(const EntryModel& m, RngStream& rng) {
    switch (m.family) {
        case EntryFamily::GaussianReal:
            return rng.normal();
        case EntryFamily::BoundedSymmetric:
            if (m.rademacher) return rng.uniform01() < 0.5 ? -1.0 : 1.0;
            return kSqrt3 * (2.0 * rng.uniform01() - 1.0);
        case EntryFamily::HeavyP: {
            const double alpha = m.p + 1.0;
            double t = std::pow(1.0 - rng.uniform01(), -1.0 / alpha);  // Pareto(alpha), >= 1
            double s = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            return s * t / pareto_norm(alpha);
        }
        default:
            throw std::logic_error("draw_real_scalar: not a scalar real family");
    }
}

// bounded base variable of the bernoulli-sparse product
double sparse_base(const EntryModel& m, RngStream& rng) {
    if (m.rademacher) return rng.uniform01() < 0.5 ? -1.0 : 1.0;
    return kSqrt3 * (2.0 * rng.uniform01() - 1.0);
}

}  // namespace

double EntryModel::entry_bound(int n) const {
    switch (family) {
        case EntryFamily::BoundedSymmetric:
            return rademacher ? 1.0 : kSqrt3;
        case EntryFamily::BernoulliSparse:
            return (rademacher ? 1.0 : kSqrt3) * std::sqrt(static_cast<double>(n) / sparse_k);
        default:
            return std::numeric_limits<double>::infinity();
    }
}

void EntryModel::validate(int n) const {
    if (std::abs(rho) > 1.0 + 1e-15)
        throw std::invalid_argument("entry model: |rho| must be <= 1");
    if (std::abs(diag_second_moment) > 1.0 + 1e-15)
        throw std::invalid_argument("entry model: |diag_second_moment| must be <= 1");
    if (real_valued()) {
        if (rho.imag() != 0.0)
            throw std::invalid_argument(
                "entry model: real-valued family cannot realize a non-real rho");
        if (diag_second_moment != cdouble(1.0, 0.0))
            throw std::invalid_argument(
                "entry model: real-valued family forces E[g^2] = 1 on the diagonal");
    }
    if (family == EntryFamily::HeavyP && p <= 4.0)
        throw std::invalid_argument("entry model: heavy-p requires p > 4");
    if (family == EntryFamily::BernoulliSparse && (sparse_k <= 0.0 || sparse_k > n))
        throw std::invalid_argument("entry model: bernoulli-sparse requires 0 < k <= n");
}

cdouble draw_single(const EntryModel& m, RngStream& rng, int n) {
    switch (m.family) {
        case EntryFamily::GaussianComplex:
            return rng.normal_complex();
        case EntryFamily::BernoulliSparse: {
            bool on = rng.uniform01() < m.sparse_k / n;
            double h = sparse_base(m, rng);  // always drawn: fixed stream layout
            return on ? std::sqrt(n / m.sparse_k) * h : 0.0;
        }
        default:
            return draw_real_scalar(m, rng);
    }
}

std::pair<cdouble, cdouble> draw_pair(const EntryModel& m, RngStream& rng, int n) {
    if (m.family == EntryFamily::GaussianComplex) {
        cdouble a = rng.normal_complex();
        if (m.rho == cdouble(1.0, 0.0)) return {a, std::conj(a)};
        cdouble b = rng.normal_complex();
        cdouble g2 = m.rho * std::conj(a) + std::sqrt(1.0 - std::norm(m.rho)) * b;
        return {a, g2};
    }
    const double r = m.rho.real();
    if (m.family == EntryFamily::BernoulliSparse) {
        // symmetric mask shared by the pair
        bool on = rng.uniform01() < m.sparse_k / n;
        double h1 = sparse_base(m, rng);
        double h2;
        if (r == 1.0)
            h2 = h1;
        else if (r == -1.0)
            h2 = -h1;
        else
            h2 = r * h1 + std::sqrt(1.0 - r * r) * sparse_base(m, rng);
        double scale = on ? std::sqrt(n / m.sparse_k) : 0.0;
        return {scale * h1, scale * h2};
    }
    double g1 = draw_real_scalar(m, rng);
    if (r == 1.0) return {g1, g1};
    if (r == -1.0) return {g1, -g1};
    if (r == 0.0) return {g1, draw_real_scalar(m, rng)};
    double g2 = r * g1 + std::sqrt(1.0 - r * r) * draw_real_scalar(m, rng);
    return {g1, g2};
}

cdouble draw_diagonal(const EntryModel& m, RngStream& rng, int n) {
    if (m.family != EntryFamily::GaussianComplex) return draw_single(m, rng, n);
    // complex Gaussian with E[g^2] = D: stretch a standard pair along
    // arg(D)/2 so that E[g^2] = |D| e^{i arg D} while E[|g|^2] stays 1
    const cdouble d = m.diag_second_moment;
    const double mag = std::abs(d);
    const double alpha = std::sqrt((1.0 + mag) / 2.0);
    const double beta = std::sqrt((1.0 - mag) / 2.0);
    cdouble base(alpha * rng.normal(), beta * rng.normal());
    if (mag == 0.0) return base;
    const double half = 0.5 * std::arg(d);
    return std::polar(1.0, half) * base;
}

TruncatedSecondMoment truncated_second_moment(const EntryModel& m, int n, double t_new,
                                              double t_old) {
    const double t = std::min(t_new, t_old);
    if (m.family == EntryFamily::GaussianReal) {
        // E[g^2 1_{|g|<=t}] = erf(t/sqrt(2)) - t sqrt(2/pi) exp(-t^2/2)
        auto trunc = [](double s) {
            if (std::isinf(s)) return 1.0;
            return std::erf(s / std::sqrt(2.0)) -
                   s * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * s * s);
        };
        return {trunc(t) / trunc(t_old), 0.0};
    }
    if (m.family == EntryFamily::GaussianComplex) {
        // |g|^2 is Exp(1): E[|g|^2 1_{|g|<=t}] = 1 - (1 + t^2) exp(-t^2)
        auto trunc = [](double s) {
            if (std::isinf(s)) return 1.0;
            return 1.0 - (1.0 + s * s) * std::exp(-s * s);
        };
        return {trunc(t) / trunc(t_old), 0.0};
    }
    // Monte Carlo ratio over a deterministic stream. Pairs are drawn so both
    // marginal laws of a correlated pair enter the estimate; numerator and
    // denominator share samples, so t_new >= t_old gives exactly 1.
    const int kPairs = 500'000;
    const int kSamples = 2 * kPairs;
    RngStream rng = RngStream::keyed(0x7472756E63617465ull, static_cast<std::uint64_t>(n));
    double num = 0.0, den = 0.0, num_sq = 0.0;
    for (int i = 0; i < kPairs; ++i) {
        auto [ga, gb] = draw_pair(m, rng, n);
        for (double g : {std::abs(ga), std::abs(gb)}) {
            double g2 = g * g;
            double kept_new = (g <= t) ? g2 : 0.0;
            double kept_old = (g <= t_old) ? g2 : 0.0;
            num += kept_new;
            den += kept_old;
            double diff = kept_old - kept_new;  // mass removed by the new cut
            num_sq += diff * diff;
        }
    }
    if (den == 0.0) return {0.0, 0.0};
    double removed_mean = (den - num) / kSamples;
    double removed_var = num_sq / kSamples - removed_mean * removed_mean;
    double se = std::sqrt(std::max(removed_var, 0.0) / kSamples) / (den / kSamples);
    return {num / den, se};
}

}  // namespace rmlab
