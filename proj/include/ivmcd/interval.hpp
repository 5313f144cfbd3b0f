#pragma once

#include "ivmcd/latent.hpp"
#include "ivmcd/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ivmcd {

struct IntervalObservation {
    Vector c;  ///< centers
    Vector r;  ///< ranges, non-negative
};

/// n interval observations on p variables, stored as centers C and ranges R.
class IntervalDataset {
public:
    IntervalDataset(Matrix centers, Matrix ranges, std::vector<LatentSpec> latents,
                    std::optional<std::vector<int>> labels = std::nullopt);

    Index n() const noexcept { return centers_.rows(); }
    Index p() const noexcept { return centers_.cols(); }

    const Matrix& centers() const noexcept { return centers_; }
    const Matrix& ranges() const noexcept { return ranges_; }
    const std::vector<LatentSpec>& latents() const noexcept { return latents_; }
    const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }

    /// Macrodata X = [C, R], n x 2p.
    Matrix macrodata() const;
    IntervalObservation observation(Index i) const;

    /// Rows in the given order (duplicates allowed).
    IntervalDataset select(const std::vector<Index>& rows) const;

    std::vector<std::string> variable_names;
    std::vector<std::string> row_ids;

private:
    Matrix centers_;
    Matrix ranges_;
    std::vector<LatentSpec> latents_;
    std::optional<std::vector<int>> labels_;
};

/// Observation weights z in [0,1]^n with the normalizing count m.
///
/// m defaults to sum(z). The objective and its gradient treat m as a
/// constant, so it can be pinned while z is perturbed.
class WeightVector {
public:
    explicit WeightVector(Vector z);
    WeightVector(Vector z, double m);

    static WeightVector ones(Index n);
    static WeightVector from_mask(const Mask& mask);

    const Vector& z() const noexcept { return z_; }
    double m() const noexcept { return m_; }
    Index size() const noexcept { return z_.size(); }
    bool is_binary() const;

private:
    Vector z_;
    double m_;
};

struct Barycenter {
    Vector mu_c;
    Vector mu_r;
};

struct SymbolicCov {
    Matrix sigma_b;
};

double mallows_distance_sq(const IntervalObservation& x1, const IntervalObservation& x2,
                           const LatentMoments& mom);

Barycenter barycenter(const IntervalDataset& ds, const WeightVector& w);

/// Weighted 2p x 2p covariance of [C, R] with divisor m:
/// sum z_i x_i x_i^T / m - xbar xbar^T.
Matrix macrodata_cov_2p(const IntervalDataset& ds, const WeightVector& w);

/// S_B(z) = Lambda S_2p Lambda^T + 1/4 Xi o S_RR.
SymbolicCov symbolic_cov(const IntervalDataset& ds, const WeightVector& w, const LatentMoments& mom);

/// Same matrix assembled from its blocks:
/// S_CC + 1/4 E_UU o S_RR + 1/2 S_CR Psi + 1/2 Psi S_RC.
SymbolicCov symbolic_cov_blocks(const IntervalDataset& ds, const WeightVector& w,
                                const LatentMoments& mom);

/// The same assembly applied to a population 2p x 2p covariance.
Matrix symbolic_cov_from_2p(const Matrix& cov_2p, const LatentMoments& mom);

/// Issues that do not prevent estimation but deserve a warning.
struct DatasetLint {
    std::vector<std::string> warnings;
};
DatasetLint lint_dataset(const IntervalDataset& ds);

}  // namespace ivmcd
