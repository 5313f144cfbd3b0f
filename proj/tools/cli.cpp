#include "cli.hpp"

#include "ivmcd/error.hpp"
#include "ivmcd/io.hpp"
#include "ivmcd/manifest.hpp"
#include "ivmcd/outlier.hpp"
#include "ivmcd/serialize.hpp"
#include "ivmcd/simulation.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ivmcd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Global {
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 1;
    std::string out = ".";
};

struct DataArgs {
    std::string data;
    std::string latent;
};

struct EstimateArgs {
    DataArgs in;
    std::string m;
    std::string reweight = "farness";
    double k = 1.5;
    double farness = 0.975;
    int starts = 500;
};

struct DetectArgs {
    DataArgs in;
    std::string fit;
    bool classical = false;
    std::string method = "farness";
    double k = 1.5;
    double farness = 0.95;
    double mild = 0.0;
    double fit_farness = 0.975;
};

struct SimulateArgs {
    std::string grid;
    bool paper_grid = false;
    int reps = 0;
    int starts = 0;
    bool dry_run = false;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
}

struct Loaded {
    IntervalDataset ds;
    LatentMoments mom;
};

Loaded load(const DataArgs& a, RunManifest& manifest, std::ostream& err) {
    std::vector<LatentSpec> latents;
    if (a.latent.empty()) {
        const auto schema = read_csv_schema(a.data);
        latents.assign(schema.variables.size(), LatentSpec::uniform());
        err << "note: no --latent given; assuming uniform latents for all " << schema.variables.size()
            << " variables\n";
    } else {
        latents = load_latent_config(a.latent);
        manifest.add_input(a.latent);
    }
    manifest.add_input(a.data);
    auto ds = load_interval_csv(a.data, std::move(latents));
    auto mom = build_moments(ds.latents());
    return {std::move(ds), std::move(mom)};
}

/// "0.75" is a fraction of n, "20" an absolute size.
void apply_subset_arg(const std::string& arg, ImcdConfig& cfg) {
    if (arg.empty()) return;
    if (arg.find_first_of(".eE") != std::string::npos) {
        double f = 0.0;
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), f);
        if (ec != std::errc() || ptr != arg.data() + arg.size() || !(f > 0.0 && f <= 1.0))
            throw InputError("--m: fraction must lie in (0, 1], got '" + arg + "'");
        cfg.m_fraction = f;
        cfg.m.reset();
    } else {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), v);
        if (ec != std::errc() || ptr != arg.data() + arg.size() || v < 1)
            throw InputError("--m: expected a positive integer or a fraction, got '" + arg + "'");
        cfg.m = static_cast<Index>(v);
    }
}

std::string fmt(double v) { return format_double(v); }

std::string format_vector(const Vector& v) {
    std::string s = "[";
    for (Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i));
    return s + "]";
}

double condition_number(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    return ev.minCoeff() > 0.0 ? ev.maxCoeff() / ev.minCoeff() : std::numeric_limits<double>::infinity();
}

void finish_manifest(RunManifest& manifest, const Global& g, std::ostream& out) {
    const fs::path path = fs::path(g.out) / (manifest.command + "_manifest.json");
    write_text_file(path, manifest.to_json().dump(2) + "\n");
    out << "manifest: " << path.string() << "\n";
}

int cmd_estimate(const Global& g, const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "estimate";
    manifest.seed = g.seed;
    manifest.threads = g.threads;
    auto [ds, mom] = load(a.in, manifest, err);

    ImcdConfig cfg;
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.n_starts = a.starts;
    cfg.n_keep = std::min(cfg.n_keep, a.starts);
    apply_subset_arg(a.m, cfg);
    if (a.reweight == "adjbox")
        cfg.reweight = AdjBoxRule{a.k};
    else
        cfg.reweight = FarnessRule{a.farness};
    const Index m = resolve_subset_size(cfg, ds.n(), ds.p());

    const auto fit = imcd_fit(ds, mom, cfg);
    const fs::path fit_path = fs::path(g.out) / "fit.json";
    write_text_file(fit_path, fit_to_json(fit, ds).dump(2) + "\n");
    manifest.add_output(fit_path);
    manifest.config = config_to_json(cfg);
    manifest.config["m"] = m;
    if (!a.m.empty()) manifest.config["m_arg"] = a.m;
    manifest.config["data"] = a.in.data;

    const auto retained = std::count(fit.weights.begin(), fit.weights.end(), 1);
    out << "n=" << ds.n() << " p=" << ds.p() << " subset size m=" << fit.m << "\n"
        << "barycenter centers: " << format_vector(fit.center.mu_c) << "\n"
        << "barycenter ranges:  " << format_vector(fit.center.mu_r) << "\n"
        << "covariance condition number: " << fmt(condition_number(fit.cov.sigma_b)) << "\n"
        << "reweighting (" << describe(cfg.reweight) << ") retained " << retained << " of " << ds.n()
        << " observations\n";
    if (fit.failed_starts > 0) err << "note: " << fit.failed_starts << " restarts hit a singular subset\n";
    out << "fit: " << fit_path.string() << "\n";
    finish_manifest(manifest, g, out);
    return kOk;
}

DetectMethod make_method(const DetectArgs& a) {
    if (a.method == "adjbox") return AdjBoxMethod{a.k};
    if (a.method == "mallows") return MallowsAdjBoxMethod{a.k};
    FarnessMethod f{a.farness, std::nullopt};
    if (a.mild > 0.0) f.mild = a.mild;
    return f;
}

int cmd_detect(const Global& g, const DetectArgs& a, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "detect";
    manifest.seed = g.seed;
    manifest.threads = g.threads;
    auto [ds, mom] = load(a.in, manifest, err);
    const DetectMethod method = make_method(a);

    Barycenter robust_center;
    SymbolicCov robust_cov;
    if (!a.fit.empty()) {
        const auto stored = fit_from_json(parse_json_file(a.fit));
        manifest.add_input(a.fit);
        if (stored.cov.sigma_b.rows() != ds.p())
            throw InputError("fit has p=" + std::to_string(stored.cov.sigma_b.rows()) + " but the data has p=" +
                             std::to_string(ds.p()));
        if (!stored.variables.empty() && !ds.variable_names.empty() && stored.variables != ds.variable_names)
            throw InputError("fit variables do not match the data columns");
        robust_center = stored.center;
        robust_cov = stored.cov;
    } else {
        ImcdConfig cfg;
        cfg.seed = g.seed;
        cfg.threads = g.threads;
        cfg.reweight = FarnessRule{a.fit_farness};
        const auto fit = imcd_fit(ds, mom, cfg);
        robust_center = fit.center;
        robust_cov = fit.cov;
    }
    const auto cl = classical_fit(ds, mom);
    const auto classical = detect_outliers(ds, cl.center, cl.cov, mom, method, EstimatorKind::Classical);
    const auto robust = detect_outliers(ds, robust_center, robust_cov, mom, method, EstimatorKind::Imcd);
    const auto& primary = a.classical ? classical : robust;

    const fs::path report_path = fs::path(g.out) / "report.json";
    const fs::path table_path = fs::path(g.out) / "distances.csv";
    auto report = report_to_json(primary, ds);
    write_text_file(report_path, report.dump(2) + "\n");
    const auto table = distance_distance_table(ds, classical, robust);
    std::ostringstream csv;
    write_distance_table_csv(csv, table);
    write_text_file(table_path, csv.str());
    json cutoffs = {{"schema_version", kSchemaVersion},
                    {"kind", "distance_cutoffs"},
                    {"method", describe(method)},
                    {"cutoff_classical", table.cutoff_classical},
                    {"cutoff_robust", table.cutoff_robust}};
    const fs::path cutoff_path = fs::path(g.out) / "distances_cutoffs.json";
    write_text_file(cutoff_path, cutoffs.dump(2) + "\n");
    for (const auto& p : {report_path, table_path, cutoff_path}) manifest.add_output(p);

    manifest.config = {{"method", describe(method)},
                       {"estimator", to_string(primary.estimator)},
                       {"fit", a.fit.empty() ? json(nullptr) : json(a.fit)},
                       {"data", a.in.data}};
    out << "estimator: " << to_string(primary.estimator) << ", method: " << describe(method)
        << ", cutoff d2 = " << fmt(primary.cutoff) << "\n";
    out << "flagged " << primary.flagged() << " of " << ds.n() << ":";
    for (const auto& id : report["flagged_ids"]) out << " " << id.get<std::string>();
    out << "\n";
    if (primary.mild_flags) {
        out << "mild (" << fmt(a.mild) << "):";
        for (std::size_t i = 0; i < primary.mild_flags->size(); ++i)
            if ((*primary.mild_flags)[i] && !primary.flags[i])
                out << " " << (i < ds.row_ids.size() ? ds.row_ids[i] : std::to_string(i + 1));
        out << "\n";
    }
    out << "report: " << report_path.string() << "\ndistances: " << table_path.string() << "\n";
    finish_manifest(manifest, g, out);
    return kOk;
}

int cmd_simulate(const Global& g, const SimulateArgs& a, std::ostream& out, std::ostream&) {
    RunManifest manifest;
    manifest.command = "simulate";
    manifest.threads = g.threads;
    GridConfig grid;
    if (a.paper_grid) {
        if (!a.grid.empty()) throw InputError("give either --grid or --paper-grid, not both");
        grid.cells = full_factorial_grid();
    } else {
        if (a.grid.empty()) throw InputError("simulate needs --grid FILE or --paper-grid");
        grid = grid_from_json(parse_json_file(a.grid));
        manifest.add_input(a.grid);
    }
    if (g.seed_given || a.paper_grid) grid.seed = g.seed;
    if (a.reps > 0) grid.reps = a.reps;
    if (a.starts > 0) {
        grid.imcd.n_starts = a.starts;
        grid.imcd.n_keep = std::min(grid.imcd.n_keep, a.starts);
    }
    grid.threads = g.threads;
    for (const auto& c : grid.cells) {
        IVMCD_REQUIRE(c.scenario.n >= 10, "grid cells need n >= 10");
        resolve_subset_size(grid.imcd, c.scenario.n, c.scenario.p);
    }
    manifest.seed = grid.seed;
    manifest.config = grid_to_json(grid);

    const fs::path grid_path = fs::path(g.out) / "grid.json";
    write_text_file(grid_path, manifest.config.dump(2) + "\n");
    manifest.add_output(grid_path);
    out << "grid: " << grid.cells.size() << " cells x " << grid.reps << " reps\n";
    if (!a.dry_run) {
        const auto result = run_grid(grid);
        std::ostringstream csv;
        write_results_csv(csv, grid, result);
        const fs::path results_path = fs::path(g.out) / "results.csv";
        write_text_file(results_path, csv.str());
        manifest.add_output(results_path);
        out << "rows: " << result.rows.size() << ", failed replicates: " << result.failed_reps << "\n"
            << "results: " << results_path.string() << "\n";
    }
    finish_manifest(manifest, g, out);
    return kOk;
}

int cmd_validate(const Global& g, const DataArgs& a, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "validate";
    manifest.seed = g.seed;
    manifest.threads = g.threads;
    auto [ds, mom] = load(a, manifest, err);
    const auto lint = lint_dataset(ds);
    json doc = {{"schema_version", kSchemaVersion}, {"kind", "validation"},      {"n", ds.n()},
                {"p", ds.p()},                      {"variables", ds.variable_names}, {"warnings", lint.warnings},
                {"latent", latents_to_json(ds.latents())}};
    const fs::path path = fs::path(g.out) / "validation.json";
    write_text_file(path, doc.dump(2) + "\n");
    manifest.add_output(path);
    manifest.config = {{"data", a.data}};
    out << "ok: n=" << ds.n() << " p=" << ds.p() << ", " << lint.warnings.size() << " warning(s)\n";
    for (const auto& w : lint.warnings) out << "warning: " << w << "\n";
    finish_manifest(manifest, g, out);
    return kOk;
}

void add_data_options(CLI::App* cmd, DataArgs& a) {
    cmd->add_option("--data", a.data, "Interval CSV (<var>_lo/<var>_hi or <var>_c/<var>_r columns)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--latent", a.latent, "Latent distribution config (JSON)")->check(CLI::ExistingFile);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust estimation and outlier detection for interval-valued data"};
    app.require_subcommand(1);
    Global g;
    app.add_option("--seed", g.seed, "Seed for every random choice")->each([&](const std::string&) {
        g.seed_given = true;
    });
    app.add_option("--threads", g.threads, "Worker cap; results do not depend on it")->check(CLI::Range(1u, 1024u));
    app.add_option("--out", g.out, "Output directory");
    app.set_version_flag("--version", std::string(kToolVersion));

    EstimateArgs est;
    auto* c_est = app.add_subcommand("estimate", "Fit the reweighted IMCD estimator");
    add_data_options(c_est, est.in);
    c_est->add_option("--m", est.m, "Subset size: integer, or fraction of n such as 0.75");
    c_est->add_option("--reweight", est.reweight, "Reweighting rule")->check(CLI::IsMember({"farness", "adjbox"}));
    c_est->add_option("--k", est.k, "Adjusted boxplot coefficient")->check(CLI::PositiveNumber);
    c_est->add_option("--farness", est.farness, "Farness threshold for reweighting")->check(CLI::Range(0.0, 1.0));
    c_est->add_option("--starts", est.starts, "Random restarts")->check(CLI::Range(1, 100000));

    DetectArgs det;
    auto* c_det = app.add_subcommand("detect", "Flag outliers by Interval-Mahalanobis distance");
    add_data_options(c_det, det.in);
    c_det->add_option("--fit", det.fit, "Fit JSON written by estimate")->check(CLI::ExistingFile);
    c_det->add_flag("--classical", det.classical, "Report the classical estimator's flags");
    c_det->add_option("--method", det.method, "Cutoff rule")->check(CLI::IsMember({"farness", "adjbox", "mallows"}));
    c_det->add_option("--k", det.k, "Adjusted boxplot coefficient")->check(CLI::PositiveNumber);
    c_det->add_option("--farness", det.farness, "Farness score threshold")->check(CLI::Range(0.0, 1.0));
    c_det->add_option("--mild", det.mild, "Lower farness tier reported as mild")->check(CLI::Range(0.0, 1.0));
    c_det->add_option("--fit-farness", det.fit_farness, "Reweighting threshold when fitting without --fit")
        ->check(CLI::Range(0.0, 1.0));

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Run the contamination simulation grid");
    c_sim->add_option("--grid", sim.grid, "Grid JSON")->check(CLI::ExistingFile);
    c_sim->add_flag("--paper-grid", sim.paper_grid, "Full factorial: 2 P x 2 N x 4 eps x 6 scenarios");
    c_sim->add_option("--reps", sim.reps, "Replicates per cell")->check(CLI::Range(1, 100000));
    c_sim->add_option("--starts", sim.starts, "Random restarts per fit")->check(CLI::Range(1, 100000));
    c_sim->add_flag("--dry-run", sim.dry_run, "Expand and record the grid without running it");

    DataArgs val;
    auto* c_val = app.add_subcommand("validate", "Check a dataset and report warnings");
    add_data_options(c_val, val);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*c_est) return cmd_estimate(g, est, out, err);
        if (*c_det) return cmd_detect(g, det, out, err);
        if (*c_sim) return cmd_simulate(g, sim, out, err);
        return cmd_validate(g, val, out, err);
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kInputError;
    } catch (const DegenerateError& e) {
        err << "numerical degeneracy: " << e.what()
            << "\nhint: reduce the number of variables or increase the subset size (--m)\n";
        return kDegenerate;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace ivmcd::cli
