#pragma once

#include "ivmcd/interval.hpp"
#include "ivmcd/robust_univariate.hpp"
#include "ivmcd/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ivmcd {

/// Reweight with the upper adjusted-boxplot fence of the raw distances.
struct AdjBoxRule {
    double k = 1.5;
};
/// Reweight where the farness score of the raw distances exceeds `threshold`.
struct FarnessRule {
    double threshold = 0.975;
};
using ReweightRule = std::variant<AdjBoxRule, FarnessRule>;

std::string describe(const ReweightRule& rule);

struct ImcdConfig {
    /// Subset size; when unset, floor(m_fraction * n).
    std::optional<Index> m;
    double m_fraction = 0.75;
    int n_starts = 500;
    int n_keep = 10;
    int warm_csteps = 2;
    int max_iter = 100;
    double tol = 1e-10;
    Index large_n_threshold = 600;
    Index merge_cap = 1500;
    ReweightRule reweight = FarnessRule{};
    std::uint64_t seed = 0;
    /// Worker cap for restarts; the result does not depend on it.
    unsigned threads = 1;
};

/// Resolve and validate the subset size: p + 1 <= m <= n.
Index resolve_subset_size(const ImcdConfig& cfg, Index n, Index p);

enum class SearchStage { Warm, Merge, Final };
const char* to_string(SearchStage stage);

/// Objective values visited by one restart in one stage, in order.
struct RestartTrace {
    std::size_t start = 0;
    SearchStage stage = SearchStage::Warm;
    Index subset_size = 0;
    std::vector<double> logdet;
};

/// log det S_B(z). Throws DegenerateError when S_B(z) is singular
/// (determinant below 1e-300, not positive definite, or non-finite).
double objective_logdet(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w);

/// Analytic gradient of log det S_B(z) with m held fixed.
Vector gradient(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w);

/// The same gradient evaluated as tr(S_B^{-1} dS_B/dz_i), one matrix per i.
Vector gradient_by_trace(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w);

/// Squared distances driving the concentration step:
/// (x_i - xbar)^T Lambda^T S^-1 Lambda (x_i - xbar) + 1/4 (r_i - rbar)^T (Xi o S^-1) (r_i - rbar).
Vector cstep_distances(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w);

/// Indices of the m smallest values; ties go to the lowest index.
Mask select_smallest(const Vector& dsq, Index m);

/// One majorization-minimization step from the active set `z` to the m
/// observations nearest to its estimates.
Mask minorization_step(const IntervalDataset& ds, const LatentMoments& mom, const Mask& z, Index m);

/// Iterate minorization steps until the subset is a fixed point, the
/// objective changes by less than `tol`, or `max_iter` steps were taken.
/// Every visited objective value is appended to `trace`.
Mask concentrate(const IntervalDataset& ds, const LatentMoments& mom, Mask z, Index m, int max_iter, double tol,
                 std::vector<double>* trace = nullptr);

/// p + 1 distinct indices from [0, n).
std::vector<std::size_t> draw_start_subset(Index n, Index p, Philox& rng);

/// Grow `start` one observation at a time, nearest by Mallows distance to
/// the current barycenter, until det S_B > 1e-12 * (mean diagonal)^p.
/// Returns nullopt when even the whole dataset is singular.
std::optional<Mask> make_nonsingular(const IntervalDataset& ds, const LatentMoments& mom,
                                     const std::vector<std::size_t>& start);

struct RawFit {
    Index m = 0;
    Mask z_final;
    double logdet = 0.0;
    Barycenter center;
    SymbolicCov cov;
    std::vector<RestartTrace> traces;
    std::size_t failed_starts = 0;
};

/// Multi-start search from explicit start subsets (small-n path): expand
/// each to m, apply the warm C-steps, keep the best `n_keep`, iterate those
/// to convergence, and return the minimizer (ties to the lower start).
RawFit search_from_starts(const IntervalDataset& ds, const LatentMoments& mom, const std::vector<Mask>& starts,
                          Index m, const ImcdConfig& cfg);

/// Raw IMCD: the m = n shortcut, the small-n path, or the partition and
/// merge path for n > large_n_threshold.
RawFit imcd_raw(const IntervalDataset& ds, const LatentMoments& mom, const ImcdConfig& cfg);

struct Reweighted {
    Mask weights;
    Barycenter center;
    SymbolicCov cov;
    double cutoff = 0.0;
    Vector dsq_raw;
    std::optional<FarnessModel> farness;
};

/// One-step reweighting: keep observations whose raw distance is within the
/// rule's cutoff.
Reweighted reweight(const IntervalDataset& ds, const LatentMoments& mom, const RawFit& raw,
                    const ReweightRule& rule);

struct ImcdFit {
    ImcdConfig config;
    Index m = 0;
    Mask z_final;
    Barycenter raw_center;
    SymbolicCov raw_cov;
    double raw_logdet = 0.0;
    Mask weights;
    Barycenter center;
    SymbolicCov cov;
    Vector dsq_raw;
    std::vector<RestartTrace> logdet_trace;
    double reweight_cutoff = 0.0;
    std::size_t failed_starts = 0;
};

ImcdFit imcd_fit(const IntervalDataset& ds, const LatentMoments& mom, const ImcdConfig& cfg);

}  // namespace ivmcd
