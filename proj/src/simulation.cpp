#include "ivmcd/simulation.hpp"

#include "ivmcd/error.hpp"
#include "ivmcd/io.hpp"
#include "ivmcd/parallel.hpp"
#include "ivmcd/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace ivmcd {

namespace {

constexpr std::uint64_t kModeStream = 1;
constexpr std::uint64_t kSelectStream = 2;
constexpr std::uint64_t kDataStream = 3;
constexpr std::uint64_t kFitSalt = 0x1ced;
constexpr int kMaxResample = 10000;

double checked_logdet(const Matrix& a, const char* what) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) throw InputError(std::string(what) + " is not positive definite");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Vector eigenvalues(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();  // ascending
}

}  // namespace

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::CenterShift: return "center";
        case Scheme::RangeShift: return "range";
        case Scheme::BothShift: return "both";
    }
    return "?";
}

const char* to_string(LatentFamily f) { return f == LatentFamily::Uniform ? "uniform" : "triangular"; }

Scheme parse_scheme(const std::string& s) {
    if (s == "center") return Scheme::CenterShift;
    if (s == "range") return Scheme::RangeShift;
    if (s == "both") return Scheme::BothShift;
    throw InputError("unknown contamination scheme '" + s + "' (expected center, range or both)");
}

LatentFamily parse_latent_family(const std::string& s) {
    if (s == "uniform") return LatentFamily::Uniform;
    if (s == "triangular") return LatentFamily::Triangular;
    throw InputError("unknown latent family '" + s + "' (expected uniform or triangular)");
}

ScenarioConfig scenario_config(int number, Index p, Index n, double epsilon, std::uint64_t seed) {
    IVMCD_REQUIRE(number >= 1 && number <= 6, "scenario number must be in 1..6");
    ScenarioConfig cfg;
    cfg.p = p;
    cfg.n = n;
    cfg.epsilon = epsilon;
    cfg.seed = seed;
    cfg.latent = number <= 3 ? LatentFamily::Uniform : LatentFamily::Triangular;
    constexpr Scheme schemes[] = {Scheme::CenterShift, Scheme::RangeShift, Scheme::BothShift};
    cfg.scheme = schemes[(number - 1) % 3];
    return cfg;
}

int scenario_number(const ScenarioConfig& cfg) {
    return static_cast<int>(cfg.scheme) + 1 + (cfg.latent == LatentFamily::Triangular ? 3 : 0);
}

PopulationModel population_model(const ScenarioConfig& cfg) {
    IVMCD_REQUIRE(cfg.p >= 1, "p must be at least 1");
    IVMCD_REQUIRE(!cfg.corr_block || cfg.p >= 2, "the correlated block needs p >= 2");
    const Index p = cfg.p;
    PopulationModel m;
    m.mean_2p = Vector::Zero(2 * p);
    m.mean_2p.tail(p).setConstant(3.0);

    Matrix corr = Matrix::Identity(2 * p, 2 * p);
    for (Index j = 0; j < p; ++j) {
        const double rho = (j % 2 == 0) ? 0.1 : -0.1;  // j is 0-based, so even j is an odd variable
        corr(j, p + j) = corr(p + j, j) = rho;
    }
    if (cfg.corr_block) {
        corr(0, 1) = corr(1, 0) = 0.8;
        corr(p, p + 1) = corr(p + 1, p) = 0.8;
        corr(0, p + 1) = corr(p + 1, 0) = 0.1;
        corr(1, p) = corr(p, 1) = 0.1;
    }
    Vector sd(2 * p);
    for (Index j = 0; j < p; ++j) sd(j) = sd(p + j) = 3.0 * static_cast<double>(j + 1) / (4.0 * static_cast<double>(p));
    m.cov_2p = sd.asDiagonal() * corr * sd.asDiagonal();

    if (cfg.latent == LatentFamily::Uniform) {
        m.latents.assign(static_cast<std::size_t>(p), LatentSpec::uniform());
    } else {
        Philox rng(cfg.seed, kModeStream);
        for (Index j = 0; j < p; ++j) m.latents.push_back(LatentSpec::triangular(rng.uniform(-0.5, -0.2)));
    }
    m.moments = build_moments(m.latents);
    m.sigma_b = symbolic_cov_from_2p(m.cov_2p, m.moments);
    m.mu_b = {m.mean_2p.head(p), m.mean_2p.tail(p)};
    return m;
}

Scenario generate_scenario(const ScenarioConfig& cfg) {
    IVMCD_REQUIRE(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0, "epsilon must lie in [0, 1)");
    IVMCD_REQUIRE(cfg.n >= 1, "n must be at least 1");
    PopulationModel truth = population_model(cfg);
    const Index p = cfg.p;
    const Index n = cfg.n;
    const auto n_out = static_cast<Index>(std::floor(cfg.epsilon * static_cast<double>(n) + 1e-9));

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    {
        Philox rng(cfg.seed, kSelectStream);
        for (auto i : sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(n_out), rng))
            labels[i] = 1;
    }

    Vector shift = Vector::Zero(2 * p);
    if (cfg.scheme != Scheme::RangeShift) shift(0) = cfg.center_shift;
    if (cfg.scheme != Scheme::CenterShift) shift(p) = cfg.range_shift;

    const Eigen::LLT<Matrix> llt(truth.cov_2p);
    const Matrix l = llt.matrixL();
    Philox rng(cfg.seed, kDataStream);
    Matrix c(n, p), r(n, p);
    Vector z(2 * p);
    for (Index i = 0; i < n; ++i) {
        const Vector mean = labels[static_cast<std::size_t>(i)] ? Vector(truth.mean_2p + shift) : truth.mean_2p;
        Vector x;
        for (int attempt = 0;; ++attempt) {
            if (attempt == kMaxResample) throw DegenerateError("could not draw non-negative ranges");
            for (Index k = 0; k < 2 * p; ++k) z(k) = rng.normal();
            x = mean + l * z;
            if ((x.tail(p).array() >= 0.0).all()) break;
        }
        c.row(i) = x.head(p).transpose();
        r.row(i) = x.tail(p).transpose();
    }
    IntervalDataset ds(std::move(c), std::move(r), truth.latents, std::move(labels));
    for (Index j = 0; j < p; ++j) ds.variable_names.push_back("V" + std::to_string(j + 1));
    return {std::move(ds), std::move(truth), n_out};
}

double frobenius_rel_error(const Matrix& est, const Matrix& truth) {
    IVMCD_REQUIRE(est.rows() == truth.rows() && est.cols() == truth.cols(), "matrix shapes differ");
    const double denom = truth.norm();
    IVMCD_REQUIRE(denom > 0.0, "ground-truth matrix has zero norm");
    return (est - truth).norm() / denom;
}

double kl_divergence_gauss(const Matrix& est, const Matrix& truth) {
    IVMCD_REQUIRE(est.rows() == truth.rows() && est.cols() == truth.cols() && est.rows() == est.cols(),
                  "matrix shapes differ");
    const double ld_est = checked_logdet(est, "estimated covariance");
    const double ld_truth = checked_logdet(truth, "ground-truth covariance");
    const Eigen::LLT<Matrix> llt(truth);
    const double tr = llt.solve(est).trace();
    return std::max(0.0, 0.5 * (tr + ld_truth - ld_est - static_cast<double>(est.rows())));
}

double angle_error(const Matrix& est, const Matrix& truth) {
    IVMCD_REQUIRE(est.rows() == truth.rows() && est.cols() == truth.cols() && est.rows() == est.cols(),
                  "matrix shapes differ");
    const Vector a_hat = eigenvalues(est);
    const Vector a = eigenvalues(truth);
    const double denom = a_hat.norm() * a.norm();
    IVMCD_REQUIRE(denom > 0.0, "zero eigenvalue vector");
    return 1.0 - a_hat.dot(a) / denom;
}

ClassificationMetrics classification_metrics(const Mask& flags, const std::vector<int>& labels) {
    IVMCD_REQUIRE(flags.size() == labels.size(), "flags and labels differ in length");
    ClassificationMetrics m;
    for (std::size_t i = 0; i < flags.size(); ++i) {
        const bool f = flags[i] != 0;
        const bool y = labels[i] != 0;
        if (f && y) ++m.tp;
        else if (!f && !y) ++m.tn;
        else if (f) ++m.fp;
        else ++m.fn;
    }
    const auto ratio = [](std::size_t num, std::size_t den, double empty) {
        return den == 0 ? empty : static_cast<double>(num) / static_cast<double>(den);
    };
    const std::size_t pos = m.tp + m.fn;
    const std::size_t neg = m.tn + m.fp;
    m.re1 = ratio(m.tp, pos, 1.0);
    m.pr1 = ratio(m.tp, m.tp + m.fp, pos == 0 ? 1.0 : 0.0);
    m.re0 = ratio(m.tn, neg, 1.0);
    m.pr0 = ratio(m.tn, m.tn + m.fn, neg == 0 ? 1.0 : 0.0);
    m.acc = ratio(m.tp + m.tn, flags.size(), 1.0);
    m.f1 = (m.pr1 + m.re1) > 0.0 ? 2.0 * m.pr1 * m.re1 / (m.pr1 + m.re1) : 0.0;
    m.gmean = std::sqrt(m.re0 * m.re1);
    return m;
}

std::vector<GridCell> full_factorial_grid() {
    std::vector<GridCell> cells;
    for (Index p : {5, 20})
        for (Index n : {500, 1000})
            for (double eps : {0.0, 0.05, 0.1, 0.2})
                for (int s = 1; s <= 6; ++s) cells.push_back({scenario_config(s, p, n, eps)});
    return cells;
}

std::uint64_t replicate_seed(std::uint64_t grid_seed, std::size_t cell, int rep) {
    return derive_seed(grid_seed, cell, static_cast<std::uint64_t>(rep));
}

std::vector<ResultRow> run_replicate(const ScenarioConfig& cfg, const GridConfig& grid) {
    const Scenario sc = generate_scenario(cfg);
    const auto& ds = sc.data;
    const auto& mom = sc.truth.moments;
    const auto& labels = *ds.labels();

    ImcdConfig icfg = grid.imcd;
    icfg.seed = derive_seed(cfg.seed, kFitSalt);
    icfg.threads = 1;

    const ClassicalFit classic = classical_fit(ds, mom);
    const RawFit raw = imcd_raw(ds, mom, icfg);
    const Reweighted adj = reweight(ds, mom, raw, AdjBoxRule{grid.adjbox_k});
    const Reweighted far = reweight(ds, mom, raw, FarnessRule{grid.farness_threshold});

    std::vector<ResultRow> rows;
    const auto emit = [&](const char* method, const char* metric, double v) {
        rows.push_back({0, 0, method, metric, v});
    };
    const auto estimation = [&](const char* method, const Matrix& est) {
        emit(method, "frob", frobenius_rel_error(est, sc.truth.sigma_b));
        emit(method, "kl", kl_divergence_gauss(est, sc.truth.sigma_b));
        emit(method, "angle", angle_error(est, sc.truth.sigma_b));
    };
    estimation("raw.Classic", classic.cov.sigma_b);
    estimation("raw.IMCD", raw.cov.sigma_b);
    estimation("adjbox.IMCD", adj.cov.sigma_b);
    estimation("farness.IMCD", far.cov.sigma_b);

    const auto detection = [&](const char* method, const OutlierReport& rep) {
        const auto m = classification_metrics(rep.flags, labels);
        emit(method, "pr1", m.pr1);
        emit(method, "re1", m.re1);
        emit(method, "pr0", m.pr0);
        emit(method, "re0", m.re0);
        emit(method, "acc", m.acc);
        emit(method, "f1", m.f1);
        emit(method, "gmean", m.gmean);
    };
    detection("adjbox.Classic",
              detect_outliers(ds, classic.center, classic.cov, mom, AdjBoxMethod{grid.adjbox_k}, EstimatorKind::Classical));
    detection("adjbox.Classic_Mallows", detect_outliers(ds, classic.center, classic.cov, mom,
                                                        MallowsAdjBoxMethod{grid.adjbox_k}, EstimatorKind::Classical));
    detection("adjbox.IMCD", detect_outliers(ds, adj.center, adj.cov, mom, AdjBoxMethod{grid.adjbox_k}));
    detection("farness.IMCD",
              detect_outliers(ds, far.center, far.cov, mom, FarnessMethod{grid.farness_threshold, std::nullopt}));
    return rows;
}

GridResult run_grid(const GridConfig& grid) {
    IVMCD_REQUIRE(grid.reps >= 1, "reps must be at least 1");
    IVMCD_REQUIRE(!grid.cells.empty(), "grid has no cells");
    const std::size_t reps = static_cast<std::size_t>(grid.reps);
    const std::size_t jobs = grid.cells.size() * reps;
    std::vector<std::vector<ResultRow>> slots(jobs);
    std::vector<unsigned char> failed(jobs, 0);
    parallel_for(jobs, grid.threads, [&](std::size_t job) {
        const std::size_t cell = job / reps;
        const int rep = static_cast<int>(job % reps);
        ScenarioConfig cfg = grid.cells[cell].scenario;
        cfg.seed = replicate_seed(grid.seed, cell, rep);
        try {
            slots[job] = run_replicate(cfg, grid);
        } catch (const DegenerateError&) {
            slots[job] = {{0, 0, "all", "error", 1.0}};
            failed[job] = 1;
        }
        for (auto& row : slots[job]) {
            row.cell = cell;
            row.rep = rep;
        }
    });
    GridResult out;
    for (std::size_t job = 0; job < jobs; ++job) {
        out.failed_reps += failed[job];
        for (auto& row : slots[job]) out.rows.push_back(std::move(row));
    }
    return out;
}

void write_results_csv(std::ostream& out, const GridConfig& grid, const GridResult& result) {
    out << "scenario,p,n,epsilon,scheme,latent,method,rep,metric,value\n";
    for (const auto& row : result.rows) {
        const auto& sc = grid.cells[row.cell].scenario;
        out << scenario_number(sc) << ',' << sc.p << ',' << sc.n << ',' << format_double(sc.epsilon) << ','
            << to_string(sc.scheme) << ',' << to_string(sc.latent) << ',' << row.method << ',' << row.rep << ','
            << row.metric << ',' << format_double(row.value) << '\n';
    }
}

}  // namespace ivmcd
