#include "rmlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmlab {

MatrixSample sample_matrix(const EnsembleSpec& spec, std::uint64_t seed,
                           std::uint64_t trial_index) {
    Graph graph = build_graph(spec.graph);
    const int n = graph.n();
    spec.entries.validate(n);
    if (graph.directed() && spec.entries.rho != cdouble(0.0, 0.0))
        throw std::invalid_argument("sample_matrix: elliptic correlation requires an undirected graph");

    MatrixSample out;
    out.n = n;
    out.degree = graph.degree();
    out.seed = seed;
    out.trial_index = trial_index;
    out.spec = spec;
    out.entry_scale = 1.0 / std::sqrt(static_cast<double>(graph.degree()));
    out.entries = Eigen::MatrixXcd::Zero(n, n);

    const double s = out.entry_scale;
    const EntryModel& model = spec.entries;
    if (graph.directed()) {
        graph.for_each_offdiag_edge([&](int x, int y) {
            RngStream rng = RngStream::keyed(seed, trial_index, x, y);
            out.entries(x, y) = s * draw_single(model, rng, n);
        });
    } else {
        graph.for_each_pair([&](int x, int y) {
            RngStream rng = RngStream::keyed(seed, trial_index, x, y);
            auto [g1, g2] = draw_pair(model, rng, n);
            out.entries(x, y) = s * g1;
            out.entries(y, x) = s * g2;
        });
    }
    if (graph.has_loops())
        for (int x = 0; x < n; ++x) {
            RngStream rng = RngStream::keyed(seed, trial_index, x, x);
            out.entries(x, x) = s * draw_diagonal(model, rng, n);
        }
    return out;
}

TruncationResult truncate(const MatrixSample& sample, double a_n) {
    if (a_n <= 0.0) throw std::invalid_argument("truncate: a_n must be positive");
    const int n = sample.n;
    const double d = sample.degree;
    const double logn2 = std::pow(std::log(static_cast<double>(n)), 2.0);
    const double t_new = a_n * std::sqrt(d) / logn2;
    const double t_old = sample.truncation_threshold;
    const double t_eff = std::min(t_new, t_old);

    auto [v, se] = truncated_second_moment(sample.spec.entries, n, t_new, t_old);

    TruncationResult res;
    res.v_n = v;
    res.v_n_stderr = se;
    res.threshold = t_eff;
    res.sample = sample;
    res.sample.truncation_threshold = t_eff;
    // v = 0 means the cut removed all second-moment mass; every surviving
    // entry is zero and no renormalization is meaningful
    const double rescale = v > 0.0 ? 1.0 / std::sqrt(v) : 1.0;
    res.sample.entry_scale = sample.entry_scale * rescale;
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            cdouble e = sample.entries(r, c);
            if (e == cdouble(0.0, 0.0)) continue;
            if (std::abs(e) / sample.entry_scale > t_eff) {
                res.sample.entries(r, c) = 0.0;
                ++res.truncated_entries;
            } else if (rescale != 1.0) {
                res.sample.entries(r, c) = e * rescale;
            }
        }
    Graph graph = build_graph(sample.spec.graph);
    const std::size_t edge_entries =
        graph.offdiag_edge_count() + (graph.has_loops() ? static_cast<std::size_t>(n) : 0);
    res.excessive = edge_entries > 0 && res.truncated_entries > 0.1 * edge_entries;
    return res;
}

ModelDiagnostics diagnostics(const EnsembleSpec& spec) {
    Graph graph = build_graph(spec.graph);
    const int n = graph.n();
    spec.entries.validate(n);
    const double d = graph.degree();
    const EntryModel& m = spec.entries;

    ModelDiagnostics diag;
    // Doubly stochastic profile: every row and column of the variance matrix
    // sums to exactly 1 by d-regularity.
    diag.sigma = 1.0;
    const bool correlated_real = m.real_valued() && m.rho.real() != 0.0;
    // Real correlated pairs couple (x,y) and (y,x) in the covariance profile
    // through 2x2 blocks [[1, rho],[rho, 1]]/d; the complex-Gaussian pair
    // construction leaves the conjugate covariance diagonal.
    const double pair_factor = correlated_real ? 1.0 + std::abs(m.rho.real()) : 1.0;
    diag.v = std::sqrt(pair_factor / d);
    diag.sigma_star = std::sqrt(pair_factor / d);
    diag.v_tilde = std::sqrt(diag.v * diag.sigma);
    diag.r_bound = m.entry_bound(n) / std::sqrt(d);

    if (graph.has_loops())
        diag.rho0 = m.rho + (m.diag_second_moment - m.rho) / d;
    else
        diag.rho0 = m.rho;
    diag.diag_offset = diag.rho0 - m.rho;

    const double logn = std::log(static_cast<double>(n));
    diag.threshold_v_tilde = 1.0 / logn;
    diag.threshold_sigma_star = std::pow(logn, -1.5);
    diag.threshold_r_bound = std::pow(logn, -2.0);
    diag.pass_v_tilde = diag.v_tilde <= diag.threshold_v_tilde;
    diag.pass_sigma_star = diag.sigma_star <= diag.threshold_sigma_star;
    diag.pass_r_bound = diag.r_bound <= diag.threshold_r_bound;
    diag.pass_diag_offset = logn * std::abs(diag.diag_offset) <= 0.1;
    return diag;
}

VarianceProfileReport validate_variance_profile(const std::vector<MatrixSample>& batch) {
    if (batch.size() < 100)
        throw std::invalid_argument("validate_variance_profile: need at least 100 samples");
    const int n = batch.front().n;
    const double d = batch.front().degree;
    for (const auto& s : batch)
        if (s.n != n) throw std::invalid_argument("validate_variance_profile: mixed dimensions");

    Eigen::MatrixXcd xxs = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd xsx = Eigen::MatrixXcd::Zero(n, n);
    Eigen::MatrixXcd xsq = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& s : batch) {
        xxs += s.entries * s.entries.adjoint();
        xsx += s.entries.adjoint() * s.entries;
        xsq += s.entries * s.entries;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    xxs *= inv;
    xsx *= inv;
    xsq *= inv;

    VarianceProfileReport rep;
    rep.tolerance = 5.0 / std::sqrt(static_cast<double>(batch.size()) * d);
    rep.expected_rho0 = diagnostics(batch.front().spec).rho0;

    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXd dev1 = (xxs - id).cwiseAbs();
    Eigen::MatrixXd dev2 = (xsx - id).cwiseAbs();
    Eigen::MatrixXd dev3 = (xsq - rep.expected_rho0 * id).cwiseAbs();
    rep.max_dev_xxstar = dev1.maxCoeff();
    rep.max_dev_xstarx = dev2.maxCoeff();
    rep.max_dev_xsquare = dev3.maxCoeff();
    rep.pass = rep.max_dev_xxstar <= rep.tolerance && rep.max_dev_xstarx <= rep.tolerance &&
               rep.max_dev_xsquare <= rep.tolerance;

    if (!rep.pass) {
        Eigen::MatrixXd dev = dev1.cwiseMax(dev2).cwiseMax(dev3);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                if (dev(r, c) > rep.tolerance) rep.worst.emplace_back(r, c, dev(r, c));
        std::sort(rep.worst.begin(), rep.worst.end(),
                  [](const auto& a, const auto& b) { return std::get<2>(a) > std::get<2>(b); });
        if (rep.worst.size() > 10) rep.worst.resize(10);
    }
    return rep;
}

}  // namespace rmlab
