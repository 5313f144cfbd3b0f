#include "ivmcd/error.hpp"
#include "ivmcd/outlier.hpp"
#include "ivmcd/simulation.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace ivmcd;

namespace {

std::vector<double> ranks(const Vector& v) {
    std::vector<Index> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::sort(idx.begin(), idx.end(), [&](Index a, Index b) { return v(a) < v(b); });
    std::vector<double> r(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[static_cast<std::size_t>(idx[k])] = static_cast<double>(k);
    return r;
}

double spearman(const Vector& a, const Vector& b) {
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(ra.size());
    double d2 = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

ImcdConfig quick(std::uint64_t seed) {
    ImcdConfig cfg;
    cfg.seed = seed;
    cfg.n_starts = 100;
    return cfg;
}

}  // namespace

TEST_CASE("expanded distance equals the quadratic form") {
    Philox rng(61, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const Index p = 1 + static_cast<Index>(rng.below(5));
        const auto mom = build_moments(testsupport::mixed_latents(p, rng));
        const SymbolicCov cov{testsupport::random_spd(p, rng)};
        Barycenter b{Vector::Random(p), Vector::Random(p).cwiseAbs()};
        IntervalObservation x{Vector::Random(p) * 3, Vector::Random(p).cwiseAbs() * 2};
        const Matrix h = interval_mahalanobis_form(cov, mom);
        Vector y(2 * p), eta(2 * p);
        y << x.c, x.r;
        eta << b.mu_c, b.mu_r;
        const double quad = (y - eta).dot(h * (y - eta));
        const double expanded = interval_mahalanobis_sq(x, b, cov, mom);
        CHECK(std::abs(quad - expanded) <= 1e-10 * std::max(1.0, std::abs(quad)));
        CHECK(expanded >= 0.0);
        CHECK(interval_mahalanobis_sq({b.mu_c, b.mu_r}, b, cov, mom) == doctest::Approx(0.0));
    }
}

TEST_CASE("identity covariance with uniform latents gives the Mallows distance") {
    Philox rng(62, 0);
    const Index p = 3;
    const auto mom = build_moments(std::vector<LatentSpec>(p, LatentSpec::uniform()));
    const SymbolicCov eye{Matrix::Identity(p, p)};
    for (int rep = 0; rep < 20; ++rep) {
        IntervalObservation x{Vector::Random(p), Vector::Random(p).cwiseAbs()};
        Barycenter b{Vector::Random(p), Vector::Random(p).cwiseAbs()};
        CHECK(interval_mahalanobis_sq(x, b, eye, mom) ==
              doctest::Approx(mallows_distance_sq(x, {b.mu_c, b.mu_r}, mom)));
    }
}

TEST_CASE("symmetric identical latents give the simplified distance") {
    Philox rng(63, 0);
    const Index p = 4;
    const auto mom = build_moments(std::vector<LatentSpec>(p, LatentSpec::uniform()));
    const double delta = 1.0 / 12.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix s = testsupport::random_spd(p, rng);
        const Matrix s_inv = s.inverse();
        IntervalObservation x{Vector::Random(p), Vector::Random(p).cwiseAbs()};
        Barycenter b{Vector::Random(p), Vector::Random(p).cwiseAbs()};
        const Vector dc = x.c - b.mu_c, dr = x.r - b.mu_r;
        const double simple = dc.dot(s_inv * dc) + delta * dr.dot(s_inv * dr);
        CHECK(interval_mahalanobis_sq(x, b, {s}, mom) == doctest::Approx(simple).epsilon(1e-10));
    }
}

TEST_CASE("singular covariance is rejected") {
    const auto mom = build_moments(std::vector<LatentSpec>(2, LatentSpec::uniform()));
    IntervalObservation x{Vector::Zero(2), Vector::Ones(2)};
    Barycenter b{Vector::Zero(2), Vector::Ones(2)};
    CHECK_THROWS_AS(interval_mahalanobis_sq(x, b, {Matrix::Zero(2, 2)}, mom), DegenerateError);
}

TEST_CASE("a single shifted center is the only flag") {
    Philox rng(64, 0);
    const Index n = 60, p = 2;
    Matrix c(n, p), r(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) {
            c(i, j) = 0.05 * rng.normal();
            r(i, j) = 1.0 + 0.05 * rng.normal();
        }
    c(17, 0) += 50.0;
    IntervalDataset ds(c, r, std::vector<LatentSpec>(p, LatentSpec::uniform()));
    const auto mom = build_moments(ds.latents());
    const auto cl = classical_fit(ds, mom);
    const auto fit = imcd_fit(ds, mom, quick(1));
    for (const DetectMethod& method : {DetectMethod{AdjBoxMethod{}}, DetectMethod{FarnessMethod{0.999, std::nullopt}}}) {
        const auto robust = detect_outliers(ds, fit.center, fit.cov, mom, method);
        CHECK(robust.flagged() == 1);
        CHECK(robust.flags[17] == 1);
    }
    const auto classical = detect_outliers(ds, cl.center, cl.cov, mom, AdjBoxMethod{}, EstimatorKind::Classical);
    CHECK(classical.flagged() == 1);
    CHECK(classical.flags[17] == 1);
}

TEST_CASE("report cutoffs and flags are consistent") {
    Philox rng(65, 0);
    auto ds = testsupport::random_dataset(80, 3, std::vector<LatentSpec>(3, LatentSpec::uniform()), rng);
    const auto mom = build_moments(ds.latents());
    const auto cl = classical_fit(ds, mom);

    const auto adj = detect_outliers(ds, cl.center, cl.cov, mom, AdjBoxMethod{1.5});
    const std::vector<double> d(adj.dsq.data(), adj.dsq.data() + adj.dsq.size());
    CHECK(adj.cutoff == doctest::Approx(adjusted_fences(d, 1.5).upper));
    for (Index i = 0; i < ds.n(); ++i) CHECK((adj.flags[static_cast<std::size_t>(i)] == 1) == (adj.dsq(i) > adj.cutoff));

    const auto far = detect_outliers(ds, cl.center, cl.cov, mom, FarnessMethod{0.95, 0.9});
    REQUIRE(far.scores.has_value());
    REQUIRE(far.mild_flags.has_value());
    for (std::size_t i = 0; i < far.flags.size(); ++i) {
        CHECK((far.flags[i] == 1) == ((*far.scores)[i] > 0.95));
        CHECK((far.flags[i] == 1) == (far.dsq(static_cast<Index>(i)) > far.cutoff));
        CHECK(((*far.mild_flags)[i] == 1) == (far.dsq(static_cast<Index>(i)) > *far.mild_cutoff));
        if (far.flags[i]) CHECK((*far.mild_flags)[i] == 1);
    }
    CHECK(*far.mild_cutoff <= far.cutoff);

    const auto mal = detect_outliers(ds, cl.center, cl.cov, mom, MallowsAdjBoxMethod{1.5}, EstimatorKind::Classical);
    for (Index i = 0; i < ds.n(); ++i)
        CHECK(mal.dsq(i) == doctest::Approx(mallows_distance_sq(ds.observation(i), {cl.center.mu_c, cl.center.mu_r}, mom)));
    CHECK(describe(DetectMethod{FarnessMethod{0.95, 0.9}}) == "farness(0.95, mild=0.9)");
}

TEST_CASE("flags follow a permutation of the observations") {
    Philox rng(66, 0);
    auto base = testsupport::random_dataset(60, 2, std::vector<LatentSpec>(2, LatentSpec::uniform()), rng);
    Matrix c = base.centers();
    for (Index i = 0; i < 5; ++i) c.row(i).array() += 8.0;
    IntervalDataset ds(c, base.ranges(), base.latents());
    const auto mom = build_moments(ds.latents());
    const auto cl = classical_fit(ds, mom);
    std::vector<Index> perm(60);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::rotate(perm.begin(), perm.begin() + 23, perm.end());
    const auto shuffled = ds.select(perm);
    for (const DetectMethod& method :
         {DetectMethod{AdjBoxMethod{}}, DetectMethod{FarnessMethod{}}, DetectMethod{MallowsAdjBoxMethod{}}}) {
        const auto a = detect_outliers(ds, cl.center, cl.cov, mom, method);
        const auto b = detect_outliers(shuffled, cl.center, cl.cov, mom, method);
        for (std::size_t k = 0; k < 60; ++k) CHECK(b.flags[k] == a.flags[static_cast<std::size_t>(perm[k])]);
    }
}

TEST_CASE("farness false-alarm rate on clean data") {
    // Population estimates isolate the cutoff from estimation noise.
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto cfg = scenario_config(1, 5, 1000, 0.0, seed);
        const auto sc = generate_scenario(cfg);
        const auto rep = detect_outliers(sc.data, sc.truth.mu_b, {sc.truth.sigma_b}, sc.truth.moments,
                                         FarnessMethod{0.95, std::nullopt});
        total += static_cast<double>(rep.flagged()) / 1000.0;
    }
    const double rate = total / 20.0;
    CHECK(rate > 0.02);
    CHECK(rate < 0.08);
}

TEST_CASE("moving one observation far away only changes its own flag") {
    Philox rng(67, 0);
    auto ds = testsupport::random_dataset(100, 2, std::vector<LatentSpec>(2, LatentSpec::uniform()), rng);
    const auto mom = build_moments(ds.latents());
    const auto fit = imcd_fit(ds, mom, quick(2));
    const auto before = detect_outliers(ds, fit.center, fit.cov, mom, AdjBoxMethod{});
    Matrix c = ds.centers();
    c.row(40).array() += 1e3;
    IntervalDataset moved(c, ds.ranges(), ds.latents());
    const auto fit2 = imcd_fit(moved, mom, quick(2));
    const auto after = detect_outliers(moved, fit2.center, fit2.cov, mom, AdjBoxMethod{});
    CHECK(after.flags[40] == 1);
    for (std::size_t i = 0; i < 100; ++i)
        if (i != 40) CHECK(after.flags[i] == before.flags[i]);
}

TEST_CASE("distance-distance table") {
    SUBCASE("clean data keeps the ordering") {
        const auto sc = generate_scenario(scenario_config(1, 3, 200, 0.0, 5));
        const auto& mom = sc.truth.moments;
        const auto cl = classical_fit(sc.data, mom);
        const auto fit = imcd_fit(sc.data, mom, quick(3));
        const auto rc = detect_outliers(sc.data, cl.center, cl.cov, mom, AdjBoxMethod{}, EstimatorKind::Classical);
        const auto rr = detect_outliers(sc.data, fit.center, fit.cov, mom, FarnessMethod{});
        const auto table = distance_distance_table(sc.data, rc, rr);
        CHECK(table.rows.size() == 200);
        CHECK(spearman(rc.dsq, rr.dsq) > 0.9);
        std::ostringstream out;
        write_distance_table_csv(out, table);
        const auto text = out.str();
        CHECK(text.rfind("id,d2_classical,d2_robust,flag_classical,flag_robust\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == 201);
    }
    SUBCASE("contamination is masked classically but exposed robustly") {
        const auto sc = generate_scenario(scenario_config(1, 5, 300, 0.2, 6));
        const auto& mom = sc.truth.moments;
        const auto cl = classical_fit(sc.data, mom);
        const auto fit = imcd_fit(sc.data, mom, quick(4));
        const auto rc = detect_outliers(sc.data, cl.center, cl.cov, mom, AdjBoxMethod{}, EstimatorKind::Classical);
        const auto rr = detect_outliers(sc.data, fit.center, fit.cov, mom, FarnessMethod{});
        const auto table = distance_distance_table(sc.data, rc, rr);
        const auto& labels = *sc.data.labels();
        int exposed = 0;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] && table.rows[i].d2_robust > table.cutoff_robust &&
                table.rows[i].d2_classical <= table.cutoff_classical)
                ++exposed;
        CHECK(exposed >= static_cast<int>(0.8 * sc.n_contaminated));
    }
}
