#include "ivmcd/outlier.hpp"

#include "ivmcd/error.hpp"
#include "ivmcd/io.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace ivmcd {

namespace {

Matrix inverse_spd(const SymbolicCov& cov) {
    const Index p = cov.sigma_b.rows();
    Eigen::LLT<Matrix> llt(cov.sigma_b);
    if (llt.info() != Eigen::Success) throw DegenerateError("symbolic covariance is singular");
    return llt.solve(Matrix::Identity(p, p));
}

void check_dims(const Barycenter& b, const SymbolicCov& cov, const LatentMoments& mom, Index p) {
    IVMCD_REQUIRE(b.mu_c.size() == p && b.mu_r.size() == p, "barycenter dimension mismatch");
    IVMCD_REQUIRE(cov.sigma_b.rows() == p && cov.sigma_b.cols() == p, "covariance dimension mismatch");
    IVMCD_REQUIRE(mom.dim() == p, "latent moments dimension mismatch");
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

double interval_mahalanobis_sq(const IntervalObservation& x, const Barycenter& b, const SymbolicCov& cov,
                               const LatentMoments& mom) {
    const Index p = x.c.size();
    check_dims(b, cov, mom, p);
    const Matrix s_inv = inverse_spd(cov);
    const Vector dc = x.c - b.mu_c;
    const Vector dr = x.r - b.mu_r;
    const Vector psi_dr = mom.psi.cwiseProduct(dr);
    const double value = dc.dot(s_inv * dc) + 0.25 * dr.dot(mom.e_uu.cwiseProduct(s_inv) * dr) +
                         0.5 * dc.dot(s_inv * psi_dr) + 0.5 * psi_dr.dot(s_inv * dc);
    return std::max(0.0, value);
}

Matrix interval_mahalanobis_form(const SymbolicCov& cov, const LatentMoments& mom) {
    const Index p = cov.sigma_b.rows();
    IVMCD_REQUIRE(mom.dim() == p, "latent moments dimension mismatch");
    const Matrix s_inv = inverse_spd(cov);
    const auto psi = mom.psi.asDiagonal();
    Matrix h(2 * p, 2 * p);
    h.topLeftCorner(p, p) = s_inv;
    h.topRightCorner(p, p) = 0.5 * s_inv * psi;
    h.bottomLeftCorner(p, p) = 0.5 * (psi * s_inv);
    h.bottomRightCorner(p, p) = 0.25 * mom.e_uu.cwiseProduct(s_inv);
    return h;
}

Vector interval_mahalanobis_all(const IntervalDataset& ds, const Barycenter& b, const SymbolicCov& cov,
                                const LatentMoments& mom) {
    check_dims(b, cov, mom, ds.p());
    const Matrix h = interval_mahalanobis_form(cov, mom);
    Vector eta(2 * ds.p());
    eta << b.mu_c, b.mu_r;
    const Matrix dev = ds.macrodata().rowwise() - eta.transpose();
    return (dev * h).cwiseProduct(dev).rowwise().sum().cwiseMax(0.0);
}

std::string describe(const DetectMethod& method) {
    std::ostringstream os;
    if (const auto* a = std::get_if<AdjBoxMethod>(&method)) {
        os << "adjbox(k=" << a->k << ")";
    } else if (const auto* f = std::get_if<FarnessMethod>(&method)) {
        os << "farness(" << f->threshold;
        if (f->mild) os << ", mild=" << *f->mild;
        os << ")";
    } else {
        os << "mallows-adjbox(k=" << std::get<MallowsAdjBoxMethod>(method).k << ")";
    }
    return os.str();
}

const char* to_string(EstimatorKind kind) { return kind == EstimatorKind::Classical ? "classical" : "imcd"; }

Index OutlierReport::flagged() const { return static_cast<Index>(std::count(flags.begin(), flags.end(), 1)); }

OutlierReport detect_outliers(const IntervalDataset& ds, const Barycenter& center, const SymbolicCov& cov,
                              const LatentMoments& mom, const DetectMethod& method, EstimatorKind estimator) {
    OutlierReport rep;
    rep.method = method;
    rep.estimator = estimator;
    const auto n = static_cast<std::size_t>(ds.n());
    rep.flags.assign(n, 0);

    if (const auto* mal = std::get_if<MallowsAdjBoxMethod>(&method)) {
        IVMCD_REQUIRE(center.mu_c.size() == ds.p() && center.mu_r.size() == ds.p(), "barycenter dimension mismatch");
        const IntervalObservation bar{center.mu_c, center.mu_r};
        rep.dsq.resize(ds.n());
        for (Index i = 0; i < ds.n(); ++i) rep.dsq(i) = mallows_distance_sq(ds.observation(i), bar, mom);
        rep.cutoff = adjusted_fences(as_span(rep.dsq), mal->k).upper;
        for (std::size_t i = 0; i < n; ++i) rep.flags[i] = rep.dsq(static_cast<Index>(i)) > rep.cutoff;
        return rep;
    }

    rep.dsq = interval_mahalanobis_all(ds, center, cov, mom);
    if (const auto* adj = std::get_if<AdjBoxMethod>(&method)) {
        rep.cutoff = adjusted_fences(as_span(rep.dsq), adj->k).upper;
        for (std::size_t i = 0; i < n; ++i) rep.flags[i] = rep.dsq(static_cast<Index>(i)) > rep.cutoff;
        return rep;
    }

    const auto& far = std::get<FarnessMethod>(method);
    IVMCD_REQUIRE(far.threshold > 0.0 && far.threshold < 1.0, "farness threshold must lie in (0, 1)");
    auto fr = farness_scores(as_span(rep.dsq));
    rep.cutoff = fr.model.inverse(far.threshold);
    for (std::size_t i = 0; i < n; ++i) rep.flags[i] = fr.scores[i] > far.threshold;
    if (far.mild) {
        IVMCD_REQUIRE(*far.mild > 0.0 && *far.mild <= far.threshold, "mild threshold must lie in (0, threshold]");
        rep.mild_cutoff = fr.model.inverse(*far.mild);
        Mask mild(n, 0);
        for (std::size_t i = 0; i < n; ++i) mild[i] = fr.scores[i] > *far.mild;
        rep.mild_flags = std::move(mild);
    }
    rep.scores = std::move(fr.scores);
    return rep;
}

ClassicalFit classical_fit(const IntervalDataset& ds, const LatentMoments& mom) {
    const auto w = WeightVector::ones(ds.n());
    return {barycenter(ds, w), symbolic_cov(ds, w, mom)};
}

DistanceTable distance_distance_table(const IntervalDataset& ds, const OutlierReport& classical,
                                      const OutlierReport& robust) {
    IVMCD_REQUIRE(classical.dsq.size() == ds.n() && robust.dsq.size() == ds.n(),
                  "reports do not match the dataset size");
    DistanceTable t;
    t.cutoff_classical = classical.cutoff;
    t.cutoff_robust = robust.cutoff;
    t.rows.reserve(static_cast<std::size_t>(ds.n()));
    for (Index i = 0; i < ds.n(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        std::string id = k < ds.row_ids.size() ? ds.row_ids[k] : std::to_string(i + 1);
        t.rows.push_back({std::move(id), classical.dsq(i), robust.dsq(i), classical.flags[k] != 0,
                          robust.flags[k] != 0});
    }
    return t;
}

void write_distance_table_csv(std::ostream& out, const DistanceTable& table) {
    out << "id,d2_classical,d2_robust,flag_classical,flag_robust\n";
    for (const auto& r : table.rows)
        out << r.id << ',' << format_double(r.d2_classical) << ',' << format_double(r.d2_robust) << ','
            << (r.flag_classical ? 1 : 0) << ',' << (r.flag_robust ? 1 : 0) << '\n';
}

}  // namespace ivmcd
