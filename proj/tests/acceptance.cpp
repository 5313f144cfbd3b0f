// Acceptance checks: one PASS/FAIL line per criterion, tolerances pinned below.
#include "ivmcd/error.hpp"
#include "ivmcd/imcd.hpp"
#include "ivmcd/io.hpp"
#include "ivmcd/manifest.hpp"
#include "ivmcd/outlier.hpp"
#include "ivmcd/robust_univariate.hpp"
#include "ivmcd/simulation.hpp"
#include "test_support.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace ivmcd;

namespace {

namespace tol {
constexpr double kPopulationDecimals = 0.005;
constexpr double kPopulationSeconds = 1.0;
constexpr double kGradientRel = 1e-5;
constexpr double kGradientSeconds = 30.0;
constexpr double kExhaustiveRel = 1e-10;
constexpr double kExhaustiveSeconds = 60.0;
constexpr double kConventional = 1e-8;
constexpr double kDescentSlack = 1e-10;
constexpr double kFarnessRecall = 0.95;
constexpr double kClassicRecall = 0.2;
constexpr double kGridSeconds = 600.0;
constexpr double kAssembly = 1e-10;
constexpr double kExpansion = 1e-10;
constexpr double kTrace = 1e-12;
constexpr double kFalseAlarmLo = 0.02;
constexpr double kFalseAlarmHi = 0.09;
}  // namespace tol

constexpr std::uint64_t kGridSeed = 20240607;
const std::vector<double> kEpsilons = {0.05, 0.1, 0.2};

struct Outcome {
    int id;
    bool pass;
    std::string detail;
};

std::vector<Outcome> outcomes;
std::vector<RestartTrace> collected_traces;
std::map<unsigned, std::string> exhaustive_digest;
std::map<unsigned, std::string> grid_digest;

void report(int id, bool pass, const std::string& detail) {
    outcomes.push_back({id, pass, detail});
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

double median_of(std::vector<double> v) { return median(v); }

// 1. Population covariance of the uniform clean scenario.
void population_covariance() {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg;
    cfg.p = 5;
    cfg.n = 500;
    cfg.epsilon = 0.0;
    const auto sc = generate_scenario(cfg);
    const Matrix& s = sc.truth.sigma_b;
    const Vector expected = (Vector(5) << 0.02, 0.10, 0.22, 0.39, 0.61).finished();
    double worst = 0.0;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j) {
            const double target = i == j ? expected(i) : 0.0;
            worst = std::max(worst, std::abs(std::round(s(i, j) * 100.0) / 100.0 - target));
        }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "diag = (";
    for (Index i = 0; i < 5; ++i) d << (i ? ", " : "") << num(s(i, i), 4);
    d << "), max rounded deviation " << worst << ", " << num(secs, 3) << " s";
    report(1, worst < 1e-12 && secs < tol::kPopulationSeconds, d.str());
}

// 2. Analytic gradient against central differences.
void gradient_check() {
    const auto t0 = std::chrono::steady_clock::now();
    Philox rng(2002, 0);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const Index p = 1 + static_cast<Index>(rng.below(4));
        const Index n = std::max<Index>(2 * p + 4, 10 + static_cast<Index>(rng.below(51)));
        auto ds = testsupport::random_dataset(n, p, testsupport::mixed_latents(p, rng), rng);
        const auto mom = build_moments(ds.latents());
        Vector z(n);
        for (Index i = 0; i < n; ++i) z(i) = rng.uniform(0.1, 0.9);
        const double m = z.sum();
        const Vector g = gradient(ds, mom, WeightVector(z, m));
        const double floor = 1e-4 * g.cwiseAbs().maxCoeff();
        for (Index i = 0; i < n; ++i) {
            const double h = 1e-5;
            Vector zp = z, zm = z;
            zp(i) += h;
            zm(i) -= h;
            const double fd =
                (objective_logdet(ds, mom, WeightVector(zp, m)) - objective_logdet(ds, mom, WeightVector(zm, m))) /
                (2.0 * h);
            worst = std::max(worst, std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), floor}));
        }
        ImcdConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(rep);
        cfg.n_starts = 100;
        const auto raw = imcd_raw(ds, mom, cfg);
        collected_traces.insert(collected_traces.end(), raw.traces.begin(), raw.traces.end());
    }
    const double secs = seconds_since(t0);
    report(2, worst < tol::kGradientRel && secs < tol::kGradientSeconds,
           "max relative error " + num(worst, 3) + " over 50 datasets, " + num(secs, 3) + " s");
}

double block_logdet(const IntervalDataset& ds, const LatentMoments& mom, const std::vector<Index>& rows) {
    const Index p = ds.p();
    const double m = static_cast<double>(rows.size());
    Vector mc = Vector::Zero(p), mr = Vector::Zero(p);
    for (Index i : rows) {
        mc += ds.centers().row(i).transpose() / m;
        mr += ds.ranges().row(i).transpose() / m;
    }
    Matrix scc = Matrix::Zero(p, p), srr = Matrix::Zero(p, p), scr = Matrix::Zero(p, p);
    for (Index i : rows) {
        const Vector dc = ds.centers().row(i).transpose() - mc;
        const Vector dr = ds.ranges().row(i).transpose() - mr;
        scc += dc * dc.transpose() / m;
        srr += dr * dr.transpose() / m;
        scr += dc * dr.transpose() / m;
    }
    const Matrix psi = mom.psi.asDiagonal();
    const Matrix s = scc + 0.25 * mom.e_uu.cwiseProduct(srr) + 0.5 * scr * psi + 0.5 * psi * scr.transpose();
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// 3. Raw objective against the exhaustive minimum over all 220 subsets.
bool exhaustive_oracle(unsigned threads, bool emit) {
    const auto t0 = std::chrono::steady_clock::now();
    Philox rng(3003, 0);
    std::ostringstream table;
    table << "instance,logdet,subset\n";
    int matched = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 25; ++inst) {
        auto ds = testsupport::random_dataset(12, 2, testsupport::mixed_latents(2, rng), rng);
        const auto mom = build_moments(ds.latents());
        std::vector<std::pair<double, Mask>> all;
        std::vector<int> pick(12, 0);
        std::fill(pick.begin() + 3, pick.end(), 1);
        do {
            std::vector<Index> rows;
            Mask z(12, 0);
            for (Index i = 0; i < 12; ++i)
                if (pick[static_cast<std::size_t>(i)]) {
                    rows.push_back(i);
                    z[static_cast<std::size_t>(i)] = 1;
                }
            all.emplace_back(block_logdet(ds, mom, rows), z);
        } while (std::next_permutation(pick.begin(), pick.end()));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [v, z] : all) best = std::min(best, v);

        ImcdConfig cfg;
        cfg.m = 9;
        cfg.reweight = AdjBoxRule{};  // farness needs more than 12 distances
        cfg.seed = static_cast<std::uint64_t>(inst);
        cfg.threads = threads;
        const auto fit = imcd_fit(ds, mom, cfg);
        const double rel = std::abs(fit.raw_logdet - best) / std::max(1.0, std::abs(best));
        worst = std::max(worst, rel);
        bool subset_ok = false;
        for (const auto& [v, z] : all)
            if (z == fit.z_final && std::abs(v - best) <= tol::kExhaustiveRel * std::max(1.0, std::abs(best)))
                subset_ok = true;
        matched += rel <= tol::kExhaustiveRel && subset_ok;
        if (emit) collected_traces.insert(collected_traces.end(), fit.logdet_trace.begin(), fit.logdet_trace.end());
        table << inst << ',' << format_double(fit.raw_logdet) << ',';
        for (auto b : fit.z_final) table << int(b);
        table << '\n';
    }
    exhaustive_digest[threads] = sha256_hex(table.str());
    const double secs = seconds_since(t0);
    const bool pass = matched == 25 && secs < tol::kExhaustiveSeconds;
    if (emit)
        report(3, pass,
               std::to_string(matched) + "/25 instances at the exhaustive minimum (max relative gap " + num(worst, 3) +
                   "), " + num(secs, 3) + " s");
    return pass;
}

// Conventional raw MCD on a plain data matrix, written independently of the
// library's search: random (p+1)-subsets grown until nonsingular, two
// concentration steps, the ten best iterated to convergence.
struct Classic {
    Vector mean;
    Matrix cov;
    double logdet;
};

Classic classic_estimate(const Matrix& x, const Mask& z) {
    const Index p = x.cols();
    double count = 0.0;
    Vector mean = Vector::Zero(p);
    for (Index i = 0; i < x.rows(); ++i)
        if (z[static_cast<std::size_t>(i)]) {
            mean += x.row(i).transpose();
            count += 1.0;
        }
    mean /= count;
    Matrix cov = Matrix::Zero(p, p);
    for (Index i = 0; i < x.rows(); ++i)
        if (z[static_cast<std::size_t>(i)]) {
            const Vector d = x.row(i).transpose() - mean;
            cov += d * d.transpose();
        }
    cov /= count;
    Eigen::LLT<Matrix> llt(cov);
    const double ld = llt.info() == Eigen::Success ? 2.0 * llt.matrixLLT().diagonal().array().log().sum()
                                                   : -std::numeric_limits<double>::infinity();
    return {mean, cov, ld};
}

Vector classic_distances(const Matrix& x, const Classic& e) {
    const Eigen::LLT<Matrix> llt(e.cov);
    Vector d(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const Vector r = x.row(i).transpose() - e.mean;
        d(i) = r.dot(llt.solve(r));
    }
    return d;
}

Mask classic_smallest(const Vector& d, Index m) {
    std::vector<Index> idx(static_cast<std::size_t>(d.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return d(a) < d(b); });
    Mask z(idx.size(), 0);
    for (Index k = 0; k < m; ++k) z[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])] = 1;
    return z;
}

Mask classic_csteps(const Matrix& x, Mask z, Index m, int steps, double tolerance) {
    Classic e = classic_estimate(x, z);
    for (int s = 0; s < steps; ++s) {
        Mask next = classic_smallest(classic_distances(x, e), m);
        if (next == z) break;
        Classic en = classic_estimate(x, next);
        const bool done = std::abs(en.logdet - e.logdet) < tolerance;
        z = std::move(next);
        e = std::move(en);
        if (done) break;
    }
    return z;
}

std::pair<Mask, double> classic_mcd(const Matrix& x, Index m, int n_starts, std::uint64_t seed) {
    const Index n = x.rows(), p = x.cols();
    struct Cand {
        double ld;
        std::size_t id;
        Mask z;
    };
    std::vector<Cand> warm;
    for (int s = 0; s < n_starts; ++s) {
        Philox rng(seed, static_cast<std::uint64_t>(s));
        const auto start = draw_start_subset(n, p, rng);
        Mask z(static_cast<std::size_t>(n), 0);
        for (auto i : start) z[i] = 1;
        for (;;) {
            const Classic e = classic_estimate(x, z);
            const double mean_diag = e.cov.diagonal().mean();
            if (mean_diag > 0 && e.logdet > std::log(1e-12) + static_cast<double>(p) * std::log(mean_diag)) break;
            Index best = -1;
            double bd = 0.0;
            for (Index i = 0; i < n; ++i) {
                if (z[static_cast<std::size_t>(i)]) continue;
                const double d = (x.row(i).transpose() - e.mean).squaredNorm();
                if (best < 0 || d < bd) {
                    best = i;
                    bd = d;
                }
            }
            z[static_cast<std::size_t>(best)] = 1;
        }
        Mask zm = classic_smallest(classic_distances(x, classic_estimate(x, z)), m);
        zm = classic_csteps(x, zm, m, 2, 0.0);
        warm.push_back({classic_estimate(x, zm).logdet, static_cast<std::size_t>(s), zm});
    }
    std::sort(warm.begin(), warm.end(), [](const Cand& a, const Cand& b) {
        return a.ld != b.ld ? a.ld < b.ld : a.id < b.id;
    });
    warm.resize(std::min<std::size_t>(warm.size(), 10));
    const Cand* best = nullptr;
    std::vector<Cand> done;
    for (const auto& c : warm) {
        Mask z = classic_csteps(x, c.z, m, 100, 1e-10);
        done.push_back({classic_estimate(x, z).logdet, c.id, z});
    }
    for (const auto& c : done)
        if (!best || c.ld < best->ld || (c.ld == best->ld && c.id < best->id)) best = &c;
    return {best->z, best->ld};
}

// 4. Degenerate intervals reduce to the conventional estimator on centers.
void conventional_degeneration() {
    Philox rng(4004, 0);
    double worst_obj = 0.0, worst_dist = 0.0;
    int same_subset = 0;
    const int cases = 12;
    for (int c = 0; c < cases; ++c) {
        const Index p = 1 + static_cast<Index>(rng.below(4));
        const Index n = 30 + static_cast<Index>(rng.below(40));
        auto base = testsupport::random_dataset(n, p, std::vector<LatentSpec>(static_cast<std::size_t>(p), LatentSpec::uniform()), rng);
        // A few displaced rows so that the subset choice matters.
        Matrix centers = base.centers();
        for (Index i = 0; i < n / 8; ++i) centers.row(i).array() += 6.0;
        IntervalDataset ds(centers, Matrix::Zero(n, p), std::vector<LatentSpec>(static_cast<std::size_t>(p), LatentSpec::degenerate()));
        const auto mom = build_moments(ds.latents());

        ImcdConfig cfg;
        cfg.seed = 100 + static_cast<std::uint64_t>(c);
        cfg.n_starts = 80;
        const Index m = resolve_subset_size(cfg, n, p);
        const auto raw = imcd_raw(ds, mom, cfg);
        collected_traces.insert(collected_traces.end(), raw.traces.begin(), raw.traces.end());

        const auto [z_ref, ld_ref] = classic_mcd(centers, m, cfg.n_starts, cfg.seed);
        worst_obj = std::max(worst_obj, std::abs(raw.logdet - ld_ref));
        same_subset += raw.z_final == z_ref;
        const Vector d_lib = cstep_distances(ds, mom, WeightVector::from_mask(raw.z_final));
        const Vector d_ref = classic_distances(centers, classic_estimate(centers, z_ref));
        worst_dist = std::max(worst_dist, (d_lib - d_ref).cwiseAbs().maxCoeff() / std::max(1.0, d_ref.cwiseAbs().maxCoeff()));
    }
    report(4, worst_obj < tol::kConventional && worst_dist < tol::kConventional && same_subset == cases,
           "objective gap " + num(worst_obj, 3) + ", distance gap " + num(worst_dist, 3) + ", identical subsets " +
               std::to_string(same_subset) + "/" + std::to_string(cases));
}

// 5. Every restart trace collected above is non-increasing.
void descent() {
    std::size_t steps = 0, violations = 0;
    double worst = 0.0;
    for (const auto& t : collected_traces)
        for (std::size_t k = 1; k < t.logdet.size(); ++k) {
            ++steps;
            const double rise = t.logdet[k] - t.logdet[k - 1];
            worst = std::max(worst, rise);
            if (rise > tol::kDescentSlack * std::max(1.0, std::abs(t.logdet[k - 1]))) ++violations;
        }
    report(5, violations == 0 && !collected_traces.empty(),
           std::to_string(collected_traces.size()) + " traces, " + std::to_string(steps) + " steps, " +
               std::to_string(violations) + " increases (largest rise " + num(worst, 3) + ")");
}

GridConfig trend_grid(int scenario, unsigned threads) {
    GridConfig g;
    g.seed = kGridSeed;
    g.reps = 20;
    g.threads = threads;
    for (double eps : kEpsilons) g.cells.push_back({scenario_config(scenario, 5, 500, eps, 0)});
    return g;
}

using Medians = std::map<std::pair<std::size_t, std::string>, double>;  // (cell, method.metric) -> median

Medians medians(const GridResult& r) {
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> acc;
    for (const auto& row : r.rows) acc[{row.cell, row.method + "." + row.metric}].push_back(row.value);
    Medians out;
    for (auto& [k, v] : acc) out[k] = median_of(v);
    return out;
}

std::string grid_csv(const GridConfig& g, const GridResult& r) {
    std::ostringstream os;
    write_results_csv(os, g, r);
    return os.str();
}

// 6 and 7. Scaled simulation: scenario 1 trends and the scenario 5 ordering.
void simulation_trends() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g1 = trend_grid(1, 1);
    const auto r1 = run_grid(g1);
    grid_digest[1] = sha256_hex(grid_csv(g1, r1));
    const double secs = seconds_since(t0);
    const auto m1 = medians(r1);

    bool a = true, b = true, c = true;
    std::ostringstream d;
    for (std::size_t k = 0; k < kEpsilons.size(); ++k) {
        const double re_far = m1.at({k, "farness.IMCD.re1"});
        const double re_cls = m1.at({k, "adjbox.Classic.re1"});
        const double fro_far = m1.at({k, "farness.IMCD.frob"});
        const double fro_raw = m1.at({k, "raw.Classic.frob"});
        a = a && re_far >= tol::kFarnessRecall;
        if (kEpsilons[k] >= 0.1) b = b && re_cls <= tol::kClassicRecall;
        c = c && fro_far < fro_raw;
        d << "eps=" << kEpsilons[k] << " [Re1 farness.IMCD " << num(re_far, 3) << ", Re1 adjbox.Classic "
          << num(re_cls, 3) << ", frob " << num(fro_far, 3) << " vs " << num(fro_raw, 3) << "] ";
    }
    d << "(a) " << (a ? "ok" : "no") << " (b) " << (b ? "ok" : "no") << " (c) " << (c ? "ok" : "no") << ", "
      << num(secs, 4) << " s";
    report(6, a && b && c && secs < tol::kGridSeconds, d.str());

    const auto g5 = trend_grid(5, 1);
    const auto r5 = run_grid(g5);
    const auto m5 = medians(r5);
    const std::vector<std::string> detectors = {"adjbox.Classic", "adjbox.Classic_Mallows", "adjbox.IMCD",
                                                "farness.IMCD"};
    double mean1 = 0.0, mean5 = 0.0;
    std::ostringstream per;
    for (const auto& det : detectors) {
        double s1 = 0.0, s5 = 0.0;
        for (std::size_t k = 0; k < kEpsilons.size(); ++k) {
            s1 += m1.at({k, det + ".re1"});
            s5 += m5.at({k, det + ".re1"});
        }
        const double n = static_cast<double>(kEpsilons.size());
        per << det << " " << num(s1 / n, 3) << "/" << num(s5 / n, 3) << "; ";
        mean1 += s1 / n / static_cast<double>(detectors.size());
        mean5 += s5 / n / static_cast<double>(detectors.size());
    }
    std::cout << "  per detector, mean over eps of median Re1 (scenario 1/scenario 5): " << per.str() << std::endl;
    report(7, mean5 < mean1,
           "median Re1 averaged over detectors and eps: scenario 5 " + num(mean5, 4) + " vs scenario 1 " +
               num(mean1, 4) + " (failed reps " + std::to_string(r1.failed_reps + r5.failed_reps) + ")");
}

// 8. Independent assembly paths agree on random inputs.
void dual_paths() {
    Philox rng(8008, 0);
    double worst_assembly = 0.0, worst_expansion = 0.0, worst_trace = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const Index p = 1 + static_cast<Index>(rng.below(5));
        const Index n = 2 * p + 3 + static_cast<Index>(rng.below(20));
        auto ds = testsupport::random_dataset(n, p, testsupport::mixed_latents(p, rng), rng);
        const auto mom = build_moments(ds.latents(), 512);
        Vector z(n);
        for (Index i = 0; i < n; ++i) z(i) = rng.uniform(0.1, 1.0);
        const WeightVector w(z);
        const Matrix s1 = symbolic_cov(ds, w, mom).sigma_b;
        const Matrix s2 = symbolic_cov_blocks(ds, w, mom).sigma_b;
        worst_assembly = std::max(worst_assembly, (s1 - s2).cwiseAbs().maxCoeff() / std::max(1.0, s1.cwiseAbs().maxCoeff()));

        const SymbolicCov cov{testsupport::random_spd(p, rng)};
        const Barycenter b = barycenter(ds, w);
        const Matrix h = interval_mahalanobis_form(cov, mom);
        const Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
        const auto x = ds.observation(i);
        Vector y(2 * p), eta(2 * p);
        y << x.c, x.r;
        eta << b.mu_c, b.mu_r;
        const double quad = (y - eta).dot(h * (y - eta));
        worst_expansion = std::max(worst_expansion, std::abs(quad - interval_mahalanobis_sq(x, b, cov, mom)) / std::max(1.0, std::abs(quad)));

        const Vector g1 = gradient(ds, mom, w);
        const Vector g2 = gradient_by_trace(ds, mom, w);
        worst_trace = std::max(worst_trace, (g1 - g2).cwiseAbs().maxCoeff() / std::max(1.0, g1.cwiseAbs().maxCoeff()));
    }
    report(8, worst_assembly < tol::kAssembly && worst_expansion < tol::kExpansion && worst_trace < tol::kTrace,
           "covariance assemblies " + num(worst_assembly, 3) + ", distance expansion " + num(worst_expansion, 3) +
               ", gradient trace identity " + num(worst_trace, 3) + " (1000 cases each)");
}

// 9. False-alarm rate of farness scores on clean chi-square-like distances.
// Squared distances of clean p-variate data have mean p, so chi-square with
// p = 5 degrees of freedom (the simulation dimension) is the reference.
double false_alarm_rate(int df, std::uint64_t seed) {
    Philox rng(9009, seed);
    std::vector<double> dsq(1000);
    for (auto& v : dsq) {
        v = 0.0;
        for (int k = 0; k < df; ++k) {
            const double g = rng.normal();
            v += g * g;
        }
    }
    const auto fr = farness_scores(dsq);
    return static_cast<double>(std::count_if(fr.scores.begin(), fr.scores.end(), [](double s) { return s > 0.95; })) /
           1000.0;
}

void farness_sanity() {
    constexpr int kDf = 5;
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const double rate = false_alarm_rate(kDf, seed);
        lo = std::min(lo, rate);
        hi = std::max(hi, rate);
        mean += rate / 20.0;
    }
    std::ostringstream other;
    for (int df : {1, 2, 10}) {
        double m = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) m += false_alarm_rate(df, seed) / 20.0;
        other << " df=" << df << ": " << num(m, 3);
    }
    std::cout << "  mean rate at other degrees of freedom (informational):" << other.str() << std::endl;
    report(9, lo >= tol::kFalseAlarmLo && hi <= tol::kFalseAlarmHi,
           "rate of scores > 0.95 in [" + num(lo, 3) + ", " + num(hi, 3) + "], mean " + num(mean, 3) +
               " over 20 seeds (chi-square, 5 df)");
}

// 10. Result tables do not depend on the worker count.
void determinism() {
    for (unsigned t : {2u, 8u}) {
        exhaustive_oracle(t, false);
        const auto g = trend_grid(1, t);
        grid_digest[t] = sha256_hex(grid_csv(g, run_grid(g)));
    }
    bool pass = true;
    for (unsigned t : {2u, 8u})
        pass = pass && exhaustive_digest.at(t) == exhaustive_digest.at(1) && grid_digest.at(t) == grid_digest.at(1);
    report(10, pass,
           "exhaustive table sha256 " + exhaustive_digest.at(1).substr(0, 12) + ", simulation table sha256 " +
               grid_digest.at(1).substr(0, 12) + (pass ? ", identical at 1, 2 and 8 threads" : ", tables differ"));
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
    const auto want = [&](int id) { return only.empty() || only.count(id); };
    try {
        if (want(1)) population_covariance();
        if (want(2) || want(5)) gradient_check();
        if (want(3) || want(5) || want(10)) exhaustive_oracle(1, true);
        if (want(4) || want(5)) conventional_degeneration();
        if (want(5)) descent();
        if (want(6) || want(7) || want(10)) simulation_trends();
        if (want(8)) dual_paths();
        if (want(9)) farness_sanity();
        if (want(10)) determinism();
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 1;
    }
    int failed = 0;
    for (const auto& o : outcomes) failed += !o.pass;
    std::cout << (outcomes.size() - static_cast<std::size_t>(failed)) << "/" << outcomes.size()
              << " acceptance criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
