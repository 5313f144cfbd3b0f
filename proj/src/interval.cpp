#include "ivmcd/interval.hpp"

#include "ivmcd/error.hpp"

#include <cmath>

namespace ivmcd {

IntervalDataset::IntervalDataset(Matrix centers, Matrix ranges, std::vector<LatentSpec> latents,
                                 std::optional<std::vector<int>> labels)
    : centers_(std::move(centers)),
      ranges_(std::move(ranges)),
      latents_(std::move(latents)),
      labels_(std::move(labels)) {
    IVMCD_REQUIRE(centers_.rows() >= 1 && centers_.cols() >= 1, "dataset needs n >= 1 and p >= 1");
    IVMCD_REQUIRE(centers_.rows() == ranges_.rows() && centers_.cols() == ranges_.cols(),
                  "centers and ranges must have the same shape");
    IVMCD_REQUIRE(static_cast<Index>(latents_.size()) == centers_.cols(),
                  "one latent spec per variable is required (got " + std::to_string(latents_.size()) +
                      " for p=" + std::to_string(centers_.cols()) + ")");
    IVMCD_REQUIRE(centers_.allFinite() && ranges_.allFinite(), "dataset contains non-finite values");
    for (Index i = 0; i < ranges_.rows(); ++i)
        for (Index j = 0; j < ranges_.cols(); ++j)
            IVMCD_REQUIRE(ranges_(i, j) >= 0.0, "negative range at row " + std::to_string(i) +
                                                    ", variable " + std::to_string(j));
    if (labels_) {
        IVMCD_REQUIRE(static_cast<Index>(labels_->size()) == centers_.rows(), "label count must equal n");
        for (int l : *labels_) IVMCD_REQUIRE(l == 0 || l == 1, "labels must be 0 or 1");
    }
}

Matrix IntervalDataset::macrodata() const {
    Matrix x(n(), 2 * p());
    x.leftCols(p()) = centers_;
    x.rightCols(p()) = ranges_;
    return x;
}

IntervalObservation IntervalDataset::observation(Index i) const {
    return {centers_.row(i).transpose(), ranges_.row(i).transpose()};
}

IntervalDataset IntervalDataset::select(const std::vector<Index>& rows) const {
    Matrix c(static_cast<Index>(rows.size()), p());
    Matrix r(static_cast<Index>(rows.size()), p());
    std::optional<std::vector<int>> labels;
    if (labels_) labels.emplace();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        c.row(static_cast<Index>(k)) = centers_.row(rows[k]);
        r.row(static_cast<Index>(k)) = ranges_.row(rows[k]);
        if (labels_) labels->push_back((*labels_)[static_cast<std::size_t>(rows[k])]);
    }
    IntervalDataset out(std::move(c), std::move(r), latents_, std::move(labels));
    out.variable_names = variable_names;
    if (!row_ids.empty())
        for (Index k : rows) out.row_ids.push_back(row_ids[static_cast<std::size_t>(k)]);
    return out;
}

WeightVector::WeightVector(Vector z) : WeightVector(z, z.sum()) {}

WeightVector::WeightVector(Vector z, double m) : z_(std::move(z)), m_(m) {
    for (Index i = 0; i < z_.size(); ++i)
        IVMCD_REQUIRE(z_(i) >= 0.0 && z_(i) <= 1.0, "weights must lie in [0, 1]");
    IVMCD_REQUIRE(m_ > 0.0, "weight vector has zero total weight");
}

WeightVector WeightVector::ones(Index n) { return WeightVector(Vector::Ones(n)); }

WeightVector WeightVector::from_mask(const Mask& mask) {
    Vector z(static_cast<Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i) z(static_cast<Index>(i)) = mask[i] ? 1.0 : 0.0;
    return WeightVector(std::move(z));
}

bool WeightVector::is_binary() const {
    for (Index i = 0; i < z_.size(); ++i)
        if (z_(i) != 0.0 && z_(i) != 1.0) return false;
    return true;
}

double mallows_distance_sq(const IntervalObservation& x1, const IntervalObservation& x2,
                           const LatentMoments& mom) {
    const Index p = mom.dim();
    IVMCD_REQUIRE(x1.c.size() == p && x1.r.size() == p && x2.c.size() == p && x2.r.size() == p,
                  "mallows_distance_sq: dimension mismatch");
    const Vector dc = x1.c - x2.c;
    const Vector dr = x1.r - x2.r;
    const double d = dc.squaredNorm() + (dr.array().square() * mom.delta.array()).sum() +
                     (dc.array() * mom.psi.array() * dr.array()).sum();
    return std::max(0.0, d);
}

namespace {

void check_weights(const IntervalDataset& ds, const WeightVector& w) {
    IVMCD_REQUIRE(w.size() == ds.n(), "weight vector length " + std::to_string(w.size()) +
                                          " does not match n=" + std::to_string(ds.n()));
}

void check_cov_weights(const WeightVector& w) {
    if (w.is_binary() && w.m() < 2.0)
        throw DegenerateError("covariance needs at least 2 active observations");
}

}  // namespace

Barycenter barycenter(const IntervalDataset& ds, const WeightVector& w) {
    check_weights(ds, w);
    return {ds.centers().transpose() * w.z() / w.m(), ds.ranges().transpose() * w.z() / w.m()};
}

Matrix macrodata_cov_2p(const IntervalDataset& ds, const WeightVector& w) {
    check_weights(ds, w);
    check_cov_weights(w);
    const Matrix x = ds.macrodata();
    const Vector mean = x.transpose() * w.z() / w.m();
    const Matrix centered = x.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * w.z().asDiagonal() * centered / w.m();
    // Centering about the m-normalized mean equals the raw-moment form
    // sum z x x^T / m - xbar xbar^T only when sum z = m; correct for the rest.
    const double slack = 1.0 - w.z().sum() / w.m();
    if (slack != 0.0) cov += slack * mean * mean.transpose();
    return 0.5 * (cov + cov.transpose());
}

Matrix symbolic_cov_from_2p(const Matrix& cov_2p, const LatentMoments& mom) {
    const Index p = mom.dim();
    IVMCD_REQUIRE(cov_2p.rows() == 2 * p && cov_2p.cols() == 2 * p, "2p covariance has wrong shape");
    const Matrix s_rr = cov_2p.bottomRightCorner(p, p);
    Matrix s = mom.lambda * cov_2p * mom.lambda.transpose() + 0.25 * mom.xi.cwiseProduct(s_rr);
    return 0.5 * (s + s.transpose());
}

SymbolicCov symbolic_cov(const IntervalDataset& ds, const WeightVector& w, const LatentMoments& mom) {
    IVMCD_REQUIRE(mom.dim() == ds.p(), "latent moments do not match dataset dimension");
    return {symbolic_cov_from_2p(macrodata_cov_2p(ds, w), mom)};
}

SymbolicCov symbolic_cov_blocks(const IntervalDataset& ds, const WeightVector& w,
                                const LatentMoments& mom) {
    IVMCD_REQUIRE(mom.dim() == ds.p(), "latent moments do not match dataset dimension");
    const Index p = ds.p();
    const Matrix s2p = macrodata_cov_2p(ds, w);
    const Matrix s_cc = s2p.topLeftCorner(p, p);
    const Matrix s_cr = s2p.topRightCorner(p, p);
    const Matrix s_rc = s2p.bottomLeftCorner(p, p);
    const Matrix s_rr = s2p.bottomRightCorner(p, p);
    const auto psi = mom.psi.asDiagonal();
    Matrix s = s_cc + 0.25 * mom.e_uu.cwiseProduct(s_rr) + 0.5 * (s_cr * psi) + 0.5 * (psi * s_rc);
    return {0.5 * (s + s.transpose())};
}

DatasetLint lint_dataset(const IntervalDataset& ds) {
    DatasetLint lint;
    for (Index j = 0; j < ds.p(); ++j) {
        const auto& spec = ds.latents()[static_cast<std::size_t>(j)];
        Index zero_ranges = 0;
        for (Index i = 0; i < ds.n(); ++i)
            if (ds.ranges()(i, j) == 0.0) ++zero_ranges;
        if (zero_ranges > 0 && !spec.is_degenerate())
            lint.warnings.push_back("variable " + std::to_string(j) + ": " + std::to_string(zero_ranges) +
                                    " zero-width interval(s) with non-degenerate latent " + spec.name());
        if (zero_ranges < ds.n() && spec.is_degenerate())
            lint.warnings.push_back("variable " + std::to_string(j) +
                                    ": positive ranges with a degenerate latent; ranges are ignored");
        const double sd = std::sqrt((ds.centers().col(j).array() - ds.centers().col(j).mean()).square().mean());
        if (sd == 0.0) lint.warnings.push_back("variable " + std::to_string(j) + ": constant centers");
    }
    if (ds.n() <= 2 * ds.p())
        lint.warnings.push_back("n=" + std::to_string(ds.n()) + " is not larger than 2p=" +
                                std::to_string(2 * ds.p()) + "; robust fits may be unstable");
    return lint;
}

}  // namespace ivmcd
