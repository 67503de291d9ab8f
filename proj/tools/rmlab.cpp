// Command-line entry point: ensemble generation, spectra, Dyson sweeps and
// the configuration-driven Monte Carlo experiment runner.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "rmlab/harness.hpp"
#include "rmlab/spectral.hpp"

namespace {

using namespace rmlab;

int resolve_workers(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("RMLAB_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    return 1;
}

struct EnsembleDocument {
    EnsembleSpec spec;
    std::uint64_t seed = 0;
};

EnsembleDocument load_ensemble(const std::string& path) {
    json j = json::parse(read_text_file(path));
    EnsembleDocument doc;
    doc.spec = j.get<EnsembleSpec>();
    doc.seed = j.value("seed", std::uint64_t{0});
    return doc;
}

int run_experiment_command(const std::string& config_path, const std::string& out,
                           std::uint64_t seed, bool seed_set, int workers,
                           std::optional<ExperimentKind> expected_kind) {
    ExperimentConfig config = load_config(config_path);
    if (expected_kind && config.kind != *expected_kind) {
        std::cerr << "config kind is '" << kind_name(config.kind) << "', expected '"
                  << kind_name(*expected_kind) << "'\n";
        return 1;
    }
    RunOptions options;
    options.workers = resolve_workers(workers);
    if (!out.empty()) options.output_dir = out;
    if (seed_set) options.seed = seed;
    ExperimentResult result = run_experiment(std::move(config), options);
    std::cout << "summary: " << (result.output_dir / "summary.json").string() << "\n";
    for (const auto& check : result.summary.at("assertions").at("checks"))
        std::cout << (check.at("passed").get<bool>() ? "[pass] " : "[FAIL] ")
                  << check.at("flag").get<std::string>() << ": "
                  << check.at("successes").get<int>() << "/" << result.summary.at("trials").get<int>()
                  << " (required " << check.at("min_successes").get<int>() << ")\n";
    return result.assertions_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rmlab: inhomogeneous non-Hermitian random matrix laboratory"};
    app.require_subcommand(1);

    std::string config_path, out;
    std::uint64_t seed = 0;
    int trial = 0;
    int workers = 0;

    auto* generate = app.add_subcommand("generate", "sample one matrix and write .bin/.json");
    generate->add_option("--config", config_path, "ensemble JSON document")->required();
    auto* gen_seed = generate->add_option("--seed", seed, "seed override");
    generate->add_option("--trial", trial, "trial index");
    generate->add_option("--out", out, "output basename")->required();

    auto* spectrum = app.add_subcommand("spectrum", "sample one matrix and write its spectrum");
    spectrum->add_option("--config", config_path, "ensemble JSON document")->required();
    auto* spec_seed = spectrum->add_option("--seed", seed, "seed override");
    spectrum->add_option("--trial", trial, "trial index");
    spectrum->add_option("--out", out, "output CSV path")->required();

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON")->required();
        cmd->add_option("--seed", seed, "seed override");
        cmd->add_option("--out", out, "output directory override");
        cmd->add_option("--workers", workers, "worker thread count (or RMLAB_WORKERS)");
    };
    auto* dyson = app.add_subcommand("dyson", "run a dyson-sweep experiment");
    add_run_options(dyson);
    auto* outliers_cmd = app.add_subcommand("outliers", "run a perturbed-ensemble experiment");
    add_run_options(outliers_cmd);
    auto* product = app.add_subcommand("product", "run a product-ensemble experiment");
    add_run_options(product);

    auto* experiment = app.add_subcommand("experiment", "experiment runner");
    experiment->require_subcommand(1);
    auto* exp_run = experiment->add_subcommand("run", "run any experiment config");
    add_run_options(exp_run);
    auto* exp_export = experiment->add_subcommand("export", "export plot data for a finished run");
    exp_export->add_option("--out", out, "experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            EnsembleDocument doc = load_ensemble(config_path);
            if (gen_seed->count()) doc.seed = seed;
            MatrixSample sample = sample_matrix(doc.spec, doc.seed, trial);
            write_sample(out, sample);
            std::cout << "wrote " << out << ".bin (n=" << sample.n << ", d=" << sample.degree
                      << ")\n";
            return 0;
        }
        if (spectrum->parsed()) {
            EnsembleDocument doc = load_ensemble(config_path);
            if (spec_seed->count()) doc.seed = seed;
            MatrixSample sample = sample_matrix(doc.spec, doc.seed, trial);
            Spectrum spec = eigenvalues(sample.entries);
            std::vector<cdouble> vals(spec.eigenvalues.begin(), spec.eigenvalues.end());
            write_text_file(out, eigenvalue_csv(trial, vals));
            std::cout << "wrote " << out << " (" << vals.size() << " eigenvalues)\n";
            return 0;
        }
        if (exp_export->parsed()) {
            export_artifacts(out);
            std::cout << "exported plot data under " << out << "\n";
            return 0;
        }
        std::optional<ExperimentKind> expected;
        if (dyson->parsed()) expected = ExperimentKind::DysonSweep;
        if (outliers_cmd->parsed()) expected = ExperimentKind::Perturbed;
        if (product->parsed()) expected = ExperimentKind::Product;
        bool seed_set = false;
        for (auto* cmd : {dyson, outliers_cmd, product, exp_run})
            if (cmd->parsed() && cmd->count("--seed")) seed_set = true;
        return run_experiment_command(config_path, out, seed, seed_set, workers, expected);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
