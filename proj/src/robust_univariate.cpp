#include "ivmcd/robust_univariate.hpp"

#include "ivmcd/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace ivmcd {

namespace {

constexpr double kLambdaLo = -4.0;
constexpr double kLambdaHi = 6.0;
constexpr std::size_t kMinFitSize = 10;

double sorted_median(const std::vector<double>& s) {
    const std::size_t n = s.size();
    return n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double hi = *mid;
    if (n % 2) return hi;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

double yj_cutoff() {
    static const double c = normal_quantile(0.995);
    return c;
}

/// Maximize `f` over [lo, hi]: coarse grid, then golden section on the
/// bracket around the best grid point.
template <class F>
double maximize_on_interval(F&& f, double lo, double hi) {
    constexpr int kGrid = 100;
    const double step = (hi - lo) / kGrid;
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int g = 0; g <= kGrid; ++g) {
        const double v = f(lo + step * g);
        if (v > best_val) {
            best_val = v;
            best = g;
        }
    }
    double a = lo + step * std::max(0, best - 1);
    double b = lo + step * std::min(kGrid, best + 1);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > 1e-9) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

std::vector<unsigned char> central_mask(std::span<const double> xs) {
    const double c = yj_cutoff();
    std::vector<unsigned char> mask(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) mask[i] = std::abs(xs[i]) <= c;
    return mask;
}

double fit_masked(std::span<const double> xs, const std::vector<unsigned char>& mask) {
    const auto kept = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    if (kept < kMinFitSize)
        throw DegenerateError("robust Yeo-Johnson fit: only " + std::to_string(kept) +
                              " observations inside the cutoff (need 10)");
    return maximize_on_interval([&](double lam) { return yeo_johnson_loglik(xs, mask, lam); }, kLambdaLo,
                                kLambdaHi);
}

}  // namespace

double median(std::span<const double> xs) {
    IVMCD_REQUIRE(!xs.empty(), "median of an empty sample");
    std::vector<double> v(xs.begin(), xs.end());
    return median_inplace(v);
}

double quantile_type7(std::span<const double> xs, double prob) {
    IVMCD_REQUIRE(!xs.empty(), "quantile of an empty sample");
    IVMCD_REQUIRE(prob >= 0.0 && prob <= 1.0, "quantile probability outside [0, 1]");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    const double h = prob * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] + (h - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double prob) {
    IVMCD_REQUIRE(prob > 0.0 && prob < 1.0, "normal quantile needs a probability in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

Standardized median_mad_standardize(std::span<const double> xs) {
    IVMCD_REQUIRE(xs.size() >= 2, "median/MAD standardization needs at least 2 values");
    const double med = median(xs);
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = std::abs(xs[i] - med);
    const double mad = kMadScale * median_inplace(dev);
    if (!(mad > 0.0)) throw DegenerateError("median absolute deviation is zero (degenerate spread)");
    Standardized out{std::vector<double>(xs.size()), med, mad};
    for (std::size_t i = 0; i < xs.size(); ++i) out.values[i] = (xs[i] - med) / mad;
    return out;
}

double medcouple(std::span<const double> xs) {
    IVMCD_REQUIRE(xs.size() >= 3, "medcouple needs at least 3 values");
    std::vector<double> s(xs.begin(), xs.end());
    std::sort(s.begin(), s.end());
    const double med = sorted_median(s);

    std::vector<double> lower, upper;  // x <= med and x >= med, as offsets from med
    for (double v : s) {
        if (v <= med) lower.push_back(v - med);
        if (v >= med) upper.push_back(v - med);
    }
    const auto ties = static_cast<std::ptrdiff_t>(std::count(s.begin(), s.end(), med));

    // Tied values sit at the end of `lower` and the start of `upper`.
    const auto lower_tie_start = static_cast<std::ptrdiff_t>(lower.size()) - ties;
    std::vector<double> kernel;
    kernel.reserve(lower.size() * upper.size());
    for (std::size_t a = 0; a < upper.size(); ++a) {
        for (std::size_t b = 0; b < lower.size(); ++b) {
            const double zp = upper[a];
            const double zm = lower[b];
            if (zp == 0.0 && zm == 0.0) {
                const auto i = static_cast<std::ptrdiff_t>(a) + 1;
                const auto j = static_cast<std::ptrdiff_t>(b) - lower_tie_start + 1;
                const auto s_idx = i + j - 1;
                kernel.push_back(s_idx < ties ? -1.0 : (s_idx == ties ? 0.0 : 1.0));
            } else {
                kernel.push_back((zp + zm) / (zp - zm));
            }
        }
    }
    return std::clamp(median_inplace(kernel), -1.0, 1.0);
}

AdjustedFences fences_from(double q1, double q3, double mc, double k) {
    IVMCD_REQUIRE(k > 0.0, "fence coefficient k must be positive");
    const double iqr = q3 - q1;
    const double lo_exp = mc >= 0.0 ? -4.0 * mc : -3.0 * mc;
    const double hi_exp = mc >= 0.0 ? 3.0 * mc : 4.0 * mc;
    return {q1 - k * std::exp(lo_exp) * iqr, q3 + k * std::exp(hi_exp) * iqr, mc, q1, q3, k};
}

AdjustedFences adjusted_fences(std::span<const double> xs, double k) {
    IVMCD_REQUIRE(xs.size() >= 4, "adjusted boxplot needs at least 4 values");
    return fences_from(quantile_type7(xs, 0.25), quantile_type7(xs, 0.75), medcouple(xs), k);
}

double yeo_johnson(double x, double lambda) {
    if (x >= 0.0) {
        if (lambda == 0.0) return std::log1p(x);
        return std::expm1(lambda * std::log1p(x)) / lambda;
    }
    const double mu = 2.0 - lambda;
    if (mu == 0.0) return -std::log1p(-x);
    return -std::expm1(mu * std::log1p(-x)) / mu;
}

double yeo_johnson_inverse(double y, double lambda) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (y >= 0.0) {
        if (lambda == 0.0) return std::expm1(y);
        const double base = lambda * y;
        if (base <= -1.0) return inf;
        return std::expm1(std::log1p(base) / lambda);
    }
    const double mu = 2.0 - lambda;
    if (mu == 0.0) return -std::expm1(-y);
    const double base = -mu * y;
    if (base <= -1.0) return -inf;
    return -std::expm1(std::log1p(base) / mu);
}

double yeo_johnson_loglik(std::span<const double> xs, std::span<const unsigned char> mask, double lambda) {
    double n = 0.0, sum = 0.0, jac = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!mask[i]) continue;
        const double t = yeo_johnson(xs[i], lambda);
        n += 1.0;
        sum += t;
        jac += std::copysign(std::log1p(std::abs(xs[i])), xs[i]);
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!mask[i]) continue;
        const double d = yeo_johnson(xs[i], lambda) - mean;
        ss += d * d;
    }
    const double var = ss / n;
    if (!(var > 0.0) || !std::isfinite(var)) return -std::numeric_limits<double>::infinity();
    return -0.5 * n * std::log(var) + (lambda - 1.0) * jac;
}

double yj_ml_fit(std::span<const double> xs) {
    return fit_masked(xs, std::vector<unsigned char>(xs.size(), 1));
}

double robust_yj_fit(std::span<const double> standardized) {
    IVMCD_REQUIRE(standardized.size() >= kMinFitSize, "robust Yeo-Johnson fit needs at least 10 values");
    const double stage1 = fit_masked(standardized, central_mask(standardized));

    std::vector<double> transformed(standardized.size());
    for (std::size_t i = 0; i < standardized.size(); ++i)
        transformed[i] = yeo_johnson(standardized[i], stage1);
    const auto restd = median_mad_standardize(transformed);
    return fit_masked(standardized, central_mask(restd.values));
}

double FarnessModel::score(double dsq) const {
    const double s = (dsq - med1) / mad1;
    const double t = yeo_johnson(s, yj_lambda);
    return normal_cdf((t - med2) / mad2);
}

double FarnessModel::inverse(double prob) const {
    const double t = normal_quantile(prob) * mad2 + med2;
    return yeo_johnson_inverse(t, yj_lambda) * mad1 + med1;
}

FarnessResult farness_scores(std::span<const double> dsq) {
    IVMCD_REQUIRE(dsq.size() >= kMinFitSize, "farness scores need at least 10 distances");
    const auto first = median_mad_standardize(dsq);
    const double lambda = robust_yj_fit(first.values);
    std::vector<double> transformed(dsq.size());
    for (std::size_t i = 0; i < dsq.size(); ++i) transformed[i] = yeo_johnson(first.values[i], lambda);
    const auto second = median_mad_standardize(transformed);

    FarnessResult out{std::vector<double>(dsq.size()), {first.median, first.mad, lambda, second.median, second.mad}};
    for (std::size_t i = 0; i < dsq.size(); ++i) out.scores[i] = normal_cdf(second.values[i]);
    return out;
}

}  // namespace ivmcd
