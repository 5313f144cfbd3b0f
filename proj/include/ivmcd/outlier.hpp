#pragma once

#include "ivmcd/imcd.hpp"
#include "ivmcd/interval.hpp"
#include "ivmcd/robust_univariate.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ivmcd {

/// Squared Interval-Mahalanobis distance in expanded form.
double interval_mahalanobis_sq(const IntervalObservation& x, const Barycenter& b, const SymbolicCov& cov,
                               const LatentMoments& mom);

/// The 2p x 2p matrix H of the quadratic form (y - eta)^T H (y - eta):
/// [[S^-1, S^-1 Psi / 2], [Psi S^-1 / 2, (E_UU o S^-1) / 4]].
Matrix interval_mahalanobis_form(const SymbolicCov& cov, const LatentMoments& mom);

/// Squared distances of every observation, via the quadratic form.
Vector interval_mahalanobis_all(const IntervalDataset& ds, const Barycenter& b, const SymbolicCov& cov,
                                const LatentMoments& mom);

struct AdjBoxMethod {
    double k = 1.5;
};
struct FarnessMethod {
    double threshold = 0.95;
    /// Optional lower tier; flagged in `mild_flags` when score > mild.
    std::optional<double> mild;
};
/// Adjusted boxplot on squared Mallows distances to the barycenter.
struct MallowsAdjBoxMethod {
    double k = 1.5;
};
using DetectMethod = std::variant<AdjBoxMethod, FarnessMethod, MallowsAdjBoxMethod>;

std::string describe(const DetectMethod& method);

enum class EstimatorKind { Classical, Imcd };
const char* to_string(EstimatorKind kind);

struct OutlierReport {
    Vector dsq;
    std::optional<std::vector<double>> scores;
    double cutoff = 0.0;
    std::optional<double> mild_cutoff;
    DetectMethod method;
    Mask flags;
    std::optional<Mask> mild_flags;
    EstimatorKind estimator = EstimatorKind::Classical;

    Index flagged() const;
};

OutlierReport detect_outliers(const IntervalDataset& ds, const Barycenter& center, const SymbolicCov& cov,
                              const LatentMoments& mom, const DetectMethod& method,
                              EstimatorKind estimator = EstimatorKind::Imcd);

/// Barycenter and symbolic covariance of the whole sample.
struct ClassicalFit {
    Barycenter center;
    SymbolicCov cov;
};
ClassicalFit classical_fit(const IntervalDataset& ds, const LatentMoments& mom);

struct DistanceRow {
    std::string id;
    double d2_classical;
    double d2_robust;
    bool flag_classical;
    bool flag_robust;
};

struct DistanceTable {
    std::vector<DistanceRow> rows;
    double cutoff_classical;
    double cutoff_robust;
};

/// Pair the classical and robust reports observation by observation.
DistanceTable distance_distance_table(const IntervalDataset& ds, const OutlierReport& classical,
                                      const OutlierReport& robust);

void write_distance_table_csv(std::ostream& out, const DistanceTable& table);

}  // namespace ivmcd
