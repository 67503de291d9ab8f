#include "rmlab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "rmlab/dyson.hpp"

namespace rmlab {

namespace fs = std::filesystem;

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::NoOutliers: return "no-outliers";
        case ExperimentKind::Perturbed: return "perturbed";
        case ExperimentKind::Isotropic: return "isotropic";
        case ExperimentKind::DysonSweep: return "dyson-sweep";
        case ExperimentKind::Product: return "product";
        case ExperimentKind::Diagnostics: return "diagnostics";
    }
    return "?";
}

ExperimentKind kind_from_name(const std::string& s) {
    if (s == "no-outliers") return ExperimentKind::NoOutliers;
    if (s == "perturbed") return ExperimentKind::Perturbed;
    if (s == "isotropic") return ExperimentKind::Isotropic;
    if (s == "dyson-sweep") return ExperimentKind::DysonSweep;
    if (s == "product") return ExperimentKind::Product;
    if (s == "diagnostics") return ExperimentKind::Diagnostics;
    throw std::invalid_argument("unknown experiment kind: " + s);
}

// --------------------------------------------------------------------------
// perturbation spec

Eigen::MatrixXcd PerturbationSpec::materialize(int n) const {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
    switch (form) {
        case Form::None:
            break;
        case Form::Diag:
            if (static_cast<int>(diag.size()) > n)
                throw std::invalid_argument("perturbation: more diagonal entries than dimension");
            for (std::size_t i = 0; i < diag.size(); ++i) c(i, i) = diag[i];
            break;
        case Form::Dense:
            if (dense.rows() > n || dense.cols() > n)
                throw std::invalid_argument("perturbation: dense block larger than dimension");
            c.topLeftCorner(dense.rows(), dense.cols()) = dense;
            break;
        case Form::Factored:
            if (factor_a.rows() != n || factor_b.cols() != n ||
                factor_a.cols() != factor_b.rows())
                throw std::invalid_argument("perturbation: factor shape mismatch");
            c = factor_a * factor_b;
            break;
    }
    return c;
}

namespace {

json matrix_to_json(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXcd matrix_from_json(const json& j) {
    const int rows = static_cast<int>(j.size());
    const int cols = rows > 0 ? static_cast<int>(j[0].size()) : 0;
    Eigen::MatrixXcd m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = complex_from_json(j[r][c]);
    return m;
}

}  // namespace

void to_json(json& j, const PerturbationSpec& p) {
    j = json::object();
    switch (p.form) {
        case PerturbationSpec::Form::None:
            break;
        case PerturbationSpec::Form::Diag: {
            json d = json::array();
            for (cdouble v : p.diag) d.push_back(complex_to_json(v));
            j["diag"] = d;
            break;
        }
        case PerturbationSpec::Form::Dense:
            j["dense"] = matrix_to_json(p.dense);
            break;
        case PerturbationSpec::Form::Factored:
            j["factors"] = json{{"a", matrix_to_json(p.factor_a)},
                                {"b", matrix_to_json(p.factor_b)}};
            break;
    }
}

void from_json(const json& j, PerturbationSpec& p) {
    p = PerturbationSpec{};
    if (j.contains("diag")) {
        p.form = PerturbationSpec::Form::Diag;
        for (const auto& v : j.at("diag")) p.diag.push_back(complex_from_json(v));
    } else if (j.contains("dense")) {
        p.form = PerturbationSpec::Form::Dense;
        p.dense = matrix_from_json(j.at("dense"));
    } else if (j.contains("factors")) {
        p.form = PerturbationSpec::Form::Factored;
        p.factor_a = matrix_from_json(j.at("factors").at("a"));
        p.factor_b = matrix_from_json(j.at("factors").at("b"));
    }
}

// --------------------------------------------------------------------------
// experiment config

double ExperimentConfig::effective_match_cap() const {
    if (match_cap > 0.0) return match_cap;
    return 10.0 / std::sqrt(std::log(std::log(static_cast<double>(std::max(n(), 16)))));
}

ProductSpec ExperimentConfig::product_spec() const {
    ProductSpec spec;
    spec.factors = ensembles;
    spec.epsilon = epsilon;
    if (!perturbations.empty()) {
        const int dim = n();
        for (const auto& p : perturbations) spec.perturbations.push_back(p.materialize(dim));
    }
    return spec;
}

void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"kind", kind_name(c.kind)},
             {"epsilon", c.epsilon},
             {"trials", c.trials},
             {"seed", c.seed},
             {"output_dir", c.output_dir}};
    if (c.ensembles.size() == 1)
        j["ensemble"] = c.ensembles.front();
    else
        j["ensembles"] = c.ensembles;
    if (c.perturbations.size() == 1)
        j["perturbation"] = c.perturbations.front();
    else if (!c.perturbations.empty())
        j["perturbations"] = c.perturbations;
    if (c.match_cap > 0.0) j["match_cap"] = c.match_cap;
    if (c.kind == ExperimentKind::Isotropic) {
        j["isotropic_threshold"] = c.isotropic_threshold;
        j["grid_margin"] = c.grid_margin;
        j["grid_count"] = c.grid_count;
        j["isotropic_random_pair"] = c.isotropic_random_pair;
    }
    if (c.kind == ExperimentKind::DysonSweep) {
        j["sweep"] = json{{"rho0", complex_to_json(c.sweep.rho0)},
                          {"box", {c.sweep.x_min, c.sweep.x_max, c.sweep.y_min, c.sweep.y_max}},
                          {"resolution", c.sweep.resolution}};
    }
    if (!c.min_successes.empty()) j["assertions"] = json{{"min_successes", c.min_successes}};
}

void from_json(const json& j, ExperimentConfig& c) {
    c = ExperimentConfig{};
    c.kind = kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("ensemble"))
        c.ensembles = {j.at("ensemble").get<EnsembleSpec>()};
    else if (j.contains("ensembles"))
        c.ensembles = j.at("ensembles").get<std::vector<EnsembleSpec>>();
    else if (c.kind != ExperimentKind::DysonSweep)
        throw std::invalid_argument("config: missing ensemble");
    if (j.contains("perturbation"))
        c.perturbations = {j.at("perturbation").get<PerturbationSpec>()};
    else if (j.contains("perturbations"))
        c.perturbations = j.at("perturbations").get<std::vector<PerturbationSpec>>();
    c.epsilon = j.value("epsilon", 0.1);
    c.trials = j.value("trials", 1);
    c.seed = j.value("seed", std::uint64_t{0});
    c.match_cap = j.value("match_cap", 0.0);
    c.isotropic_threshold = j.value("isotropic_threshold", 0.15);
    c.grid_margin = j.value("grid_margin", 0.2);
    c.grid_count = j.value("grid_count", 20);
    c.isotropic_random_pair = j.value("isotropic_random_pair", true);
    c.output_dir = j.value("output_dir", "out");
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        c.sweep.rho0 = complex_from_json(s.at("rho0"));
        if (s.contains("box")) {
            c.sweep.x_min = s.at("box").at(0).get<double>();
            c.sweep.x_max = s.at("box").at(1).get<double>();
            c.sweep.y_min = s.at("box").at(2).get<double>();
            c.sweep.y_max = s.at("box").at(3).get<double>();
        }
        c.sweep.resolution = s.value("resolution", 60);
    }
    if (j.contains("assertions") && j.at("assertions").contains("min_successes"))
        c.min_successes =
            j.at("assertions").at("min_successes").get<std::map<std::string, int>>();
}

ExperimentConfig load_config(const fs::path& path) {
    return json::parse(read_text_file(path)).get<ExperimentConfig>();
}

// --------------------------------------------------------------------------
// validation

void validate_config(const ExperimentConfig& c) {
    if (c.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    if (c.kind != ExperimentKind::DysonSweep) {
        if (c.ensembles.empty()) throw std::invalid_argument("config: missing ensemble");
        if (c.n() < 4) throw std::invalid_argument("config: n must be >= 4");
        build_graph(c.primary().graph);
        for (const auto& e : c.ensembles) e.entries.validate(e.graph.n);
    }
    switch (c.kind) {
        case ExperimentKind::NoOutliers:
            if (c.epsilon <= 0.0)
                throw std::invalid_argument("config: epsilon must be positive");
            break;
        case ExperimentKind::Perturbed: {
            if (c.epsilon <= 0.0)
                throw std::invalid_argument("config: epsilon must be positive");
            if (c.perturbations.size() != 1 || c.perturbations.front().empty())
                throw std::invalid_argument("config: perturbed experiment needs a perturbation");
            // annulus and rank-cap hypotheses, checked before any sampling
            Perturbation p = factor(c.perturbations.front().materialize(c.n()));
            predict(p, c.rho(), c.epsilon);
            break;
        }
        case ExperimentKind::Isotropic:
            if (c.grid_count < 1) throw std::invalid_argument("config: grid_count must be >= 1");
            break;
        case ExperimentKind::DysonSweep:
            if (c.trials != 1)
                throw std::invalid_argument("config: dyson-sweep runs as a single trial");
            if (c.sweep.resolution < 2)
                throw std::invalid_argument("config: sweep resolution must be >= 2");
            break;
        case ExperimentKind::Product:
            c.product_spec().validate();
            if (!c.perturbations.empty()) {
                // annulus hypothesis on the product of the deformations
                ProductSpec spec = c.product_spec();
                Eigen::MatrixXcd a_prod = Eigen::MatrixXcd::Identity(c.n(), c.n());
                for (const auto& a : spec.perturbations) a_prod = a_prod * a;
                for (cdouble lambda : eigenvalues(a_prod).eigenvalues) {
                    double r = std::abs(lambda);
                    if (r >= 1.0 + c.epsilon && r <= 1.0 + 3.0 * c.epsilon)
                        throw AnnulusViolation(
                            "config: eigenvalue of the deformation product lies in the "
                            "hypothesis annulus",
                            lambda);
                }
            }
            break;
        case ExperimentKind::Diagnostics:
            if (c.trials < 100)
                throw std::invalid_argument(
                    "config: diagnostics needs >= 100 trials for the variance profile");
            break;
    }
}

// --------------------------------------------------------------------------
// trials

namespace {

std::vector<cdouble> outside_region(const Eigen::VectorXcd& eigs, const EllipticRegion& region) {
    std::vector<cdouble> out;
    for (cdouble e : eigs)
        if (!region.contains(e)) out.push_back(e);
    return out;
}

json report_to_json(const OutlierReport& rep) {
    json matches = json::array();
    for (const auto& m : rep.matches)
        matches.push_back(json{{"predicted", complex_to_json(m.predicted)},
                               {"observed", complex_to_json(m.observed)},
                               {"distance", m.distance}});
    json unmatched_p = json::array(), unmatched_o = json::array();
    for (cdouble v : rep.unmatched_predictions) unmatched_p.push_back(complex_to_json(v));
    for (cdouble v : rep.unmatched_observed) unmatched_o.push_back(complex_to_json(v));
    return json{{"matches", matches},
                {"unmatched_predictions", unmatched_p},
                {"unmatched_observed", unmatched_o}};
}

TrialOutcome trial_no_outliers(const ExperimentConfig& c, int t) {
    TrialOutcome out;
    MatrixSample sample = sample_matrix(c.primary(), c.seed, t);
    Spectrum spec = eigenvalues(sample.entries);
    EllipticRegion region(c.rho(), c.epsilon);
    auto outliers = outside_region(spec.eigenvalues, region);
    out.eigenvalues.assign(spec.eigenvalues.begin(), spec.eigenvalues.end());
    out.metrics["outside_count"] = static_cast<double>(outliers.size());
    out.metrics["spectral_radius"] = spec.eigenvalues.cwiseAbs().maxCoeff();
    out.flags["no_outliers"] = outliers.empty();
    return out;
}

TrialOutcome trial_perturbed(const ExperimentConfig& c, int t) {
    TrialOutcome out;
    const int n = c.n();
    MatrixSample sample = sample_matrix(c.primary(), c.seed, t);
    Eigen::MatrixXcd cmat = c.perturbations.front().materialize(n);
    Perturbation pert = factor(cmat);
    auto preds = predict(pert, c.rho(), c.epsilon);
    std::vector<cdouble> admissible;
    for (const auto& p : preds)
        if (p.admissible) admissible.push_back(p.predicted);

    Spectrum spec = eigenvalues(sample.entries + cmat);
    EllipticRegion collect(c.rho(), 2.0 * c.epsilon);
    std::vector<cdouble> observed = outside_region(spec.eigenvalues, collect);
    OutlierReport rep = match(observed, admissible, c.effective_match_cap());

    out.eigenvalues.assign(spec.eigenvalues.begin(), spec.eigenvalues.end());
    out.metrics["n_observed"] = static_cast<double>(observed.size());
    out.metrics["n_predicted"] = static_cast<double>(admissible.size());
    out.metrics["n_matched"] = static_cast<double>(rep.matches.size());
    out.metrics["max_match_distance"] =
        rep.matches.empty() ? 0.0 : rep.matches.back().distance;
    out.flags["outlier_match"] =
        observed.size() == admissible.size() && rep.matches.size() == admissible.size();
    out.detail["report"] = report_to_json(rep);
    return out;
}

TrialOutcome trial_isotropic(const ExperimentConfig& c, int t) {
    TrialOutcome out;
    const int n = c.n();
    MatrixSample sample = sample_matrix(c.primary(), c.seed, t);
    EllipticRegion ring(c.rho(), c.grid_margin);
    std::vector<cdouble> grid = ring.boundary_points(c.grid_count);

    Eigen::VectorXcd e1 = Eigen::VectorXcd::Zero(n);
    e1(0) = 1.0;
    double dev = isotropic_deviation(sample.entries, c.rho(), grid, e1, e1);
    out.metrics["deviation_e1"] = dev;
    double worst = dev;
    if (c.isotropic_random_pair) {
        RngStream rng = RngStream::keyed(c.seed, t, 0x697369, 0);
        Eigen::VectorXcd u(n), w(n);
        for (int i = 0; i < n; ++i) u(i) = rng.normal();
        for (int i = 0; i < n; ++i) w(i) = rng.normal();
        u.normalize();
        w -= u.dot(w) * u;  // orthogonal pair: prediction term vanishes
        w.normalize();
        double dev2 = isotropic_deviation(sample.entries, c.rho(), grid, u, w);
        out.metrics["deviation_orthogonal"] = dev2;
        worst = std::max(worst, dev2);
    }
    out.metrics["deviation_max"] = worst;
    out.flags["isotropic"] = worst <= c.isotropic_threshold;
    return out;
}

TrialOutcome trial_dyson_sweep(const ExperimentConfig& c, int) {
    TrialOutcome out;
    const DysonSweepSpec& s = c.sweep;
    EllipticRegion region(s.rho0, 0.0);
    json rows = json::array();
    int agree = 0, boundary = 0, total = 0;
    for (int iy = 0; iy < s.resolution; ++iy)
        for (int ix = 0; ix < s.resolution; ++ix) {
            double x = s.x_min + (s.x_max - s.x_min) * ix / (s.resolution - 1);
            double y = s.y_min + (s.y_max - s.y_min) * iy / (s.resolution - 1);
            cdouble z(x, y);
            SupportClass verdict = classify_support(z, s.rho0);
            ReducedSolution sol = solve_reduced(z, 1e-4, s.rho0);
            json row{{"z", complex_to_json(z)},
                     {"V", sol.V},
                     {"b", complex_to_json(sol.b)},
                     {"verdict", verdict == SupportClass::Inside    ? "inside"
                                 : verdict == SupportClass::Outside ? "outside"
                                                                    : "boundary"}};
            rows.push_back(row);
            ++total;
            if (verdict == SupportClass::Boundary)
                ++boundary;
            else if ((verdict == SupportClass::Inside) == region.contains(z))
                ++agree;
        }
    out.detail["rows"] = rows;
    out.metrics["points"] = total;
    out.metrics["geometry_agreement"] = agree;
    out.metrics["boundary_verdicts"] = boundary;
    out.flags["sweep_complete"] = true;
    return out;
}

TrialOutcome trial_product(const ExperimentConfig& c, int t) {
    TrialOutcome out;
    ProductTrialResult res =
        run_product_trial(c.product_spec(), c.seed, t, c.effective_match_cap());
    out.eigenvalues = res.perturbed_eigenvalues;
    out.metrics["spectral_radius"] = res.spectral_radius;
    out.metrics["n_observed"] = static_cast<double>(res.report.observed.size());
    out.metrics["n_predicted"] = static_cast<double>(res.report.matches.size() +
                                                     res.report.unmatched_predictions.size());
    out.metrics["n_matched"] = static_cast<double>(res.report.matches.size());
    out.metrics["max_match_distance"] =
        res.report.matches.empty() ? 0.0 : res.report.matches.back().distance;
    out.flags["product_radius"] = res.radius_ok;
    out.flags["product_outliers"] = res.outliers_ok;
    out.detail["report"] = report_to_json(res.report);
    return out;
}

TrialOutcome trial_diagnostics(const ExperimentConfig& c, int t) {
    TrialOutcome out;
    MatrixSample sample = sample_matrix(c.primary(), c.seed, t);
    Graph graph = build_graph(c.primary().graph);
    // support invariant: entries vanish exactly off the edge set
    int support_violations = 0;
    for (int r = 0; r < sample.n; ++r)
        for (int col = 0; col < sample.n; ++col)
            if (sample.entries(r, col) != cdouble(0.0, 0.0) && !graph.has_edge(r, col))
                ++support_violations;
    double worst_row = 0.0;
    for (int r = 0; r < sample.n; ++r)
        worst_row = std::max(worst_row,
                             std::abs(sample.entries.row(r).squaredNorm() - 1.0));
    out.metrics["support_violations"] = support_violations;
    out.metrics["max_row_sum_deviation"] = worst_row;
    out.flags["support_ok"] = support_violations == 0;
    return out;
}

TrialOutcome dispatch_trial(const ExperimentConfig& c, int t) {
    switch (c.kind) {
        case ExperimentKind::NoOutliers: return trial_no_outliers(c, t);
        case ExperimentKind::Perturbed: return trial_perturbed(c, t);
        case ExperimentKind::Isotropic: return trial_isotropic(c, t);
        case ExperimentKind::DysonSweep: return trial_dyson_sweep(c, t);
        case ExperimentKind::Product: return trial_product(c, t);
        case ExperimentKind::Diagnostics: return trial_diagnostics(c, t);
    }
    throw std::logic_error("unreachable");
}

}  // namespace

TrialOutcome run_trial(const ExperimentConfig& c, int t) {
    auto t0 = std::chrono::steady_clock::now();
    TrialOutcome out;
    try {
        out = dispatch_trial(c, t);
        out.flags["completed"] = true;
    } catch (const std::exception& e) {
        // numeric failure: recorded, batch continues
        out.flags["completed"] = false;
        out.detail["error"] = e.what();
    }
    out.trial_index = t;
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// --------------------------------------------------------------------------
// persistence + summary

namespace {

std::string trial_basename(int t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "trial_%05d", t);
    return buf;
}

json outcome_to_json(const TrialOutcome& o) {
    return json{{"trial_index", o.trial_index},
                {"flags", o.flags},
                {"metrics", o.metrics},
                {"detail", o.detail},
                {"wall_seconds", o.wall_seconds}};
}

TrialOutcome outcome_from_json(const json& j) {
    TrialOutcome o;
    o.trial_index = j.at("trial_index").get<int>();
    o.flags = j.at("flags").get<std::map<std::string, bool>>();
    o.metrics = j.at("metrics").get<std::map<std::string, double>>();
    o.detail = j.at("detail");
    o.wall_seconds = j.value("wall_seconds", 0.0);
    return o;
}

void persist_outcome(const fs::path& trials_dir, const TrialOutcome& o) {
    const std::string base = trial_basename(o.trial_index);
    if (!o.eigenvalues.empty())
        write_text_file(trials_dir / (base + ".csv"),
                        eigenvalue_csv(o.trial_index, o.eigenvalues));
    write_text_file(trials_dir / (base + ".json"), outcome_to_json(o).dump(2) + "\n");
}

json summarize(const ExperimentConfig& c, const std::vector<TrialOutcome>& outcomes) {
    json s;
    s["kind"] = kind_name(c.kind);
    // the echoed config identifies the experiment; the output location is
    // not part of that identity and would break byte-level reproducibility
    json cfg = c;
    cfg.erase("output_dir");
    s["config"] = cfg;
    s["trials"] = c.trials;

    std::map<std::string, int> flag_counts;
    for (const auto& o : outcomes)
        for (const auto& [name, val] : o.flags)
            flag_counts[name] += val ? 1 : 0;
    json flags = json::object();
    for (const auto& [name, successes] : flag_counts) {
        json f = wilson_interval(successes, c.trials);
        flags[name] = f;
    }
    s["flags"] = flags;

    json metrics = json::object();
    std::map<std::string, std::vector<double>> by_name;
    for (const auto& o : outcomes)
        for (const auto& [name, val] : o.metrics) by_name[name].push_back(val);
    for (const auto& [name, vals] : by_name) {
        double mn = vals.front(), mx = vals.front(), sum = 0.0;
        for (double v : vals) {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
            sum += v;
        }
        metrics[name] = json{{"mean", sum / vals.size()}, {"min", mn}, {"max", mx},
                             {"count", vals.size()}};
    }
    s["metrics"] = metrics;

    bool all_passed = true;
    json checks = json::array();
    for (const auto& [flag, required] : c.min_successes) {
        int got = flag_counts.count(flag) ? flag_counts[flag] : 0;
        bool ok = got >= required;
        all_passed = all_passed && ok;
        checks.push_back(json{
            {"flag", flag}, {"min_successes", required}, {"successes", got}, {"passed", ok}});
    }
    s["assertions"] = json{{"passed", all_passed}, {"checks", checks}};

    if (c.kind == ExperimentKind::Diagnostics) {
        ModelDiagnostics d = diagnostics(c.primary());
        s["diagnostics"] = json{{"v", d.v},
                                {"sigma", d.sigma},
                                {"sigma_star", d.sigma_star},
                                {"v_tilde", d.v_tilde},
                                {"r_bound", std::isfinite(d.r_bound) ? json(d.r_bound) : json()},
                                {"rho0", complex_to_json(d.rho0)},
                                {"diag_offset", complex_to_json(d.diag_offset)},
                                {"threshold_v_tilde", d.threshold_v_tilde},
                                {"threshold_sigma_star", d.threshold_sigma_star},
                                {"threshold_r_bound", d.threshold_r_bound},
                                {"pass_v_tilde", d.pass_v_tilde},
                                {"pass_sigma_star", d.pass_sigma_star},
                                {"pass_r_bound", d.pass_r_bound},
                                {"pass_diag_offset", d.pass_diag_offset}};
        // profile accumulation re-samples sequentially in trial order so the
        // summary never depends on worker scheduling
        std::vector<MatrixSample> batch;
        batch.reserve(c.trials);
        for (int t = 0; t < c.trials; ++t) batch.push_back(sample_matrix(c.primary(), c.seed, t));
        VarianceProfileReport rep = validate_variance_profile(batch);
        json worst = json::array();
        for (const auto& [r, col, dev] : rep.worst)
            worst.push_back(json{{"row", r}, {"col", col}, {"deviation", dev}});
        s["variance_profile"] = json{{"tolerance", rep.tolerance},
                                     {"max_dev_xxstar", rep.max_dev_xxstar},
                                     {"max_dev_xstarx", rep.max_dev_xstarx},
                                     {"max_dev_xsquare", rep.max_dev_xsquare},
                                     {"expected_rho0", complex_to_json(rep.expected_rho0)},
                                     {"pass", rep.pass},
                                     {"worst", worst}};
    }
    return s;
}

}  // namespace

json wilson_interval(int successes, int trials) {
    const double z = 1.959963984540054;  // 95%
    const double nn = trials;
    const double p = trials > 0 ? successes / nn : 0.0;
    const double denom = 1.0 + z * z / nn;
    const double center = (p + z * z / (2.0 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
    return json{{"successes", successes},
                {"trials", trials},
                {"rate", p},
                {"wilson_low", std::max(0.0, center - half)},
                {"wilson_high", std::min(1.0, center + half)}};
}

ExperimentResult run_experiment(ExperimentConfig config, const RunOptions& options) {
    if (options.seed) config.seed = *options.seed;
    if (options.output_dir) config.output_dir = options.output_dir->string();
    validate_config(config);

    const fs::path out_dir = config.output_dir;
    const fs::path trials_dir = out_dir / "trials";
    fs::create_directories(trials_dir);
    fs::create_directories(out_dir / "plots");
    write_text_file(out_dir / "config.json", json(config).dump(2) + "\n");

    // crash-resume: only missing trial indices are executed
    std::vector<int> pending;
    for (int t = 0; t < config.trials; ++t)
        if (!fs::exists(trials_dir / (trial_basename(t) + ".json"))) pending.push_back(t);

    const int workers = std::max(1, options.workers);
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) break;
            persist_outcome(trials_dir, run_trial(config, pending[i]));
        }
    };
    if (workers == 1 || pending.size() <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    // summarization is single-threaded over completed trials in index order
    std::vector<TrialOutcome> outcomes;
    outcomes.reserve(config.trials);
    for (int t = 0; t < config.trials; ++t) {
        json j = json::parse(read_text_file(trials_dir / (trial_basename(t) + ".json")));
        outcomes.push_back(outcome_from_json(j));
    }

    ExperimentResult result;
    result.summary = summarize(config, outcomes);
    result.assertions_passed = result.summary.at("assertions").at("passed").get<bool>();
    result.output_dir = out_dir;
    write_text_file(out_dir / "summary.json", result.summary.dump(2) + "\n");
    return result;
}

// --------------------------------------------------------------------------
// export

namespace {

struct SvgMapper {
    double x0, y0, scale, size;
    double x(double re) const { return (re - x0) * scale; }
    double y(double im) const { return size - (im - y0) * scale; }
};

std::string svg_scatter(const std::vector<std::vector<cdouble>>& eigs_by_trial,
                        const std::vector<cdouble>& boundary,
                        const std::vector<cdouble>& predictions) {
    double lo_x = -1.5, hi_x = 1.5, lo_y = -1.5, hi_y = 1.5;
    auto grow = [&](cdouble z) {
        lo_x = std::min(lo_x, z.real() - 0.3);
        hi_x = std::max(hi_x, z.real() + 0.3);
        lo_y = std::min(lo_y, z.imag() - 0.3);
        hi_y = std::max(hi_y, z.imag() + 0.3);
    };
    for (const auto& trial : eigs_by_trial)
        for (cdouble z : trial) grow(z);
    for (cdouble z : boundary) grow(z);
    for (cdouble z : predictions) grow(z);

    const double size = 720.0;
    const double span = std::max(hi_x - lo_x, hi_y - lo_y);
    SvgMapper m{lo_x, lo_y, size / span, size};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
       << "\" viewBox=\"0 0 " << size << " " << size << "\">\n";
    os << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    if (!boundary.empty()) {
        os << "<polyline fill=\"none\" stroke=\"#555555\" stroke-width=\"1\" points=\"";
        for (cdouble z : boundary) os << m.x(z.real()) << "," << m.y(z.imag()) << " ";
        os << m.x(boundary.front().real()) << "," << m.y(boundary.front().imag());
        os << "\"/>\n";
    }
    for (const auto& trial : eigs_by_trial)
        for (cdouble z : trial)
            os << "<circle cx=\"" << m.x(z.real()) << "\" cy=\"" << m.y(z.imag())
               << "\" r=\"2\" fill=\"#1f6fb4\" fill-opacity=\"0.45\"/>\n";
    for (cdouble z : predictions) {
        double cx = m.x(z.real()), cy = m.y(z.imag());
        os << "<path stroke=\"#cc2222\" stroke-width=\"1.5\" d=\"M" << cx - 5 << " " << cy
           << " L" << cx + 5 << " " << cy << " M" << cx << " " << cy - 5 << " L" << cx << " "
           << cy + 5 << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<cdouble> parse_eigen_csv(const std::string& text) {
    std::vector<cdouble> out;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
        out.emplace_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)),
                         std::stod(line.substr(c2 + 1)));
    }
    return out;
}

}  // namespace

void export_artifacts(const fs::path& out_dir) {
    ExperimentConfig config =
        json::parse(read_text_file(out_dir / "config.json")).get<ExperimentConfig>();

    std::vector<std::vector<cdouble>> eigs_by_trial;
    std::ostringstream combined;
    combined << "trial,re,im\n";
    for (int t = 0; t < config.trials; ++t) {
        fs::path csv = out_dir / "trials" / (trial_basename(t) + ".csv");
        if (!fs::exists(csv)) continue;
        std::string text = read_text_file(csv);
        eigs_by_trial.push_back(parse_eigen_csv(text));
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line))
            if (!line.empty()) combined << line << "\n";
    }
    write_text_file(out_dir / "eigenvalues.csv", combined.str());

    cdouble region_rho = config.kind == ExperimentKind::Product
                             ? cdouble(0.0, 0.0)
                             : (config.kind == ExperimentKind::DysonSweep ? config.sweep.rho0
                                                                          : config.rho());
    EllipticRegion region(region_rho, config.kind == ExperimentKind::DysonSweep ? 0.0
                                                                                : config.epsilon);
    write_text_file(out_dir / "boundary.csv", boundary_csv(region, 512));

    std::vector<cdouble> predictions;
    if (config.kind == ExperimentKind::Perturbed) {
        Perturbation p = factor(config.perturbations.front().materialize(config.n()));
        for (const auto& pr : predict(p, config.rho(), config.epsilon))
            if (pr.admissible) predictions.push_back(pr.predicted);
    } else if (config.kind == ExperimentKind::Product && !config.perturbations.empty()) {
        ProductSpec spec = config.product_spec();
        Eigen::MatrixXcd a_prod = Eigen::MatrixXcd::Identity(config.n(), config.n());
        for (const auto& a : spec.perturbations) a_prod = a_prod * a;
        for (cdouble lambda : eigenvalues(a_prod).eigenvalues)
            if (std::abs(lambda) > 1.0 + 3.0 * config.epsilon) predictions.push_back(lambda);
    }
    std::ostringstream pcsv;
    pcsv << "re,im\n";
    for (cdouble z : predictions) pcsv << z.real() << "," << z.imag() << "\n";
    write_text_file(out_dir / "predictions.csv", pcsv.str());

    std::vector<cdouble> boundary = region.boundary_points(512);
    write_text_file(out_dir / "plots" / "scatter.svg",
                    svg_scatter(eigs_by_trial, boundary, predictions));

    if (config.kind == ExperimentKind::Perturbed || config.kind == ExperimentKind::Product) {
        std::ostringstream rows;
        rows << "trial,n_observed,n_predicted,max_match_distance,unmatched_predictions,"
                "unmatched_observed\n";
        for (int t = 0; t < config.trials; ++t) {
            fs::path tj = out_dir / "trials" / (trial_basename(t) + ".json");
            if (!fs::exists(tj)) continue;
            json j = json::parse(read_text_file(tj));
            const json& m = j.at("metrics");
            double obs = m.value("n_observed", 0.0);
            double pred = m.value("n_predicted", 0.0);
            double matched = m.value("n_matched", 0.0);
            rows << t << "," << static_cast<int>(obs) << "," << static_cast<int>(pred) << ","
                 << m.value("max_match_distance", 0.0) << ","
                 << static_cast<int>(pred - matched) << "," << static_cast<int>(obs - matched)
                 << "\n";
        }
        write_text_file(out_dir / "outlier_trials.csv", rows.str());
    }

    if (config.kind == ExperimentKind::DysonSweep) {
        json trial = json::parse(read_text_file(out_dir / "trials" / "trial_00000.json"));
        std::ostringstream sweep;
        sweep << "z_re,z_im,V,b_re,b_im,verdict\n";
        for (const auto& row : trial.at("detail").at("rows")) {
            cdouble z = complex_from_json(row.at("z"));
            cdouble b = complex_from_json(row.at("b"));
            sweep << z.real() << "," << z.imag() << "," << row.at("V").get<double>() << ","
                  << b.real() << "," << b.imag() << "," << row.at("verdict").get<std::string>()
                  << "\n";
        }
        write_text_file(out_dir / "sweep.csv", sweep.str());
    }
}

}  // namespace rmlab
