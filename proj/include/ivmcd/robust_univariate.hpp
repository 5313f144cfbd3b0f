#pragma once

#include <span>
#include <vector>

namespace ivmcd {

/// MAD consistency constant for the normal model.
inline constexpr double kMadScale = 1.4826;

double median(std::span<const double> xs);
/// Type-7 quantile (linear interpolation of order statistics).
double quantile_type7(std::span<const double> xs, double prob);

double normal_cdf(double x);
double normal_quantile(double prob);

struct Standardized {
    std::vector<double> values;
    double median;
    double mad;  ///< scaled by kMadScale
};

/// (x - median) / (1.4826 * median|x - median|). Throws DegenerateError when
/// the MAD is zero.
Standardized median_mad_standardize(std::span<const double> xs);

/// Medcouple by full kernel enumeration, O(n^2).
double medcouple(std::span<const double> xs);

struct AdjustedFences {
    double lower;
    double upper;
    double mc;
    double q1;
    double q3;
    double k;
};

/// Skewness-adjusted boxplot fences.
AdjustedFences adjusted_fences(std::span<const double> xs, double k = 1.5);
/// Fences for given quartiles and medcouple.
AdjustedFences fences_from(double q1, double q3, double mc, double k);

double yeo_johnson(double x, double lambda);
/// Inverse transform; returns +/-inf outside the transform's range.
double yeo_johnson_inverse(double y, double lambda);

/// Gaussian profile log-likelihood of the Yeo-Johnson transformed sample,
/// restricted to observations with `mask[i] != 0`.
double yeo_johnson_loglik(std::span<const double> xs, std::span<const unsigned char> mask, double lambda);

/// Plain maximum likelihood over lambda in [-4, 6] using every observation.
double yj_ml_fit(std::span<const double> xs);

/// Two-stage reweighted maximum likelihood on a standardized sample.
/// Stage 1 keeps |x| <= z_{0.995}; stage 2 recomputes the weights from the
/// median/MAD-standardized stage-1 transform with the same cutoff.
double robust_yj_fit(std::span<const double> standardized);

/// Fitted farness transform: standardize, Yeo-Johnson, standardize, Phi.
struct FarnessModel {
    double med1;
    double mad1;
    double yj_lambda;
    double med2;
    double mad2;

    double score(double dsq) const;
    /// The squared distance whose score equals `prob`.
    double inverse(double prob) const;
};

struct FarnessResult {
    std::vector<double> scores;
    FarnessModel model;
};

FarnessResult farness_scores(std::span<const double> dsq);

}  // namespace ivmcd
