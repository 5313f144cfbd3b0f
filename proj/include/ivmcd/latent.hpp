#pragma once

#include "ivmcd/types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ivmcd {

/// Latent distribution of the normalized microdata inside an interval,
/// supported on [-1, 1] and accessed through its quantile function.
class LatentSpec {
public:
    struct Uniform {};
    struct Triangular {
        double mode;
    };
    /// Sorted sample; the quantile function interpolates the order
    /// statistics linearly (type 7).
    struct Empirical {
        std::vector<double> sorted;
    };
    struct Degenerate {};

    using Kind = std::variant<Uniform, Triangular, Empirical, Degenerate>;

    static LatentSpec uniform();
    /// Mode must lie in the open interval (-1, 1).
    static LatentSpec triangular(double mode);
    /// Values must lie in [-1, 1]; they are sorted on construction.
    static LatentSpec empirical(std::vector<double> sample);
    static LatentSpec degenerate();

    const Kind& kind() const noexcept { return kind_; }
    std::string name() const;
    bool is_degenerate() const noexcept { return std::holds_alternative<Degenerate>(kind_); }
    bool operator==(const LatentSpec& other) const;

    /// Quantile function on (0, 1).
    double quantile(double t) const;

private:
    explicit LatentSpec(Kind kind) : kind_(std::move(kind)) {}
    Kind kind_;
};

/// E(U).
double latent_mean(const LatentSpec& spec);
/// E(U^2), always in [0, 1].
double latent_second_moment(const LatentSpec& spec);
/// Integral over (0,1) of F_j^{-1}(t) F_l^{-1}(t) by composite midpoint rule.
double cross_expectation(const LatentSpec& spec_j, const LatentSpec& spec_l,
                         std::size_t quad_points = 4096);

/// Moment matrices of the latent vector that enter every covariance and
/// distance formula.
struct LatentMoments {
    Vector psi;     ///< E(U_j)
    Vector delta;   ///< E(U_j^2) / 4
    Matrix e_uu;    ///< comonotone cross moments, diagonal E(U_j^2)
    Matrix xi;      ///< comonotone covariances, diagonal Var(U_j)
    Matrix lambda;  ///< [I | diag(psi)/2], p x 2p

    Index dim() const noexcept { return psi.size(); }
};

LatentMoments build_moments(std::span<const LatentSpec> specs, std::size_t quad_points = 4096);

/// Parse `{"latent": [{"kind": "uniform"}, {"kind":"triangular","mode":-0.3},
/// {"kind":"empirical","file":"u.csv"}, {"kind":"degenerate"}]}`.
/// Relative empirical file paths resolve against `base_dir`.
std::vector<LatentSpec> parse_latent_config(const std::string& json_text,
                                            const std::filesystem::path& base_dir = {});
std::vector<LatentSpec> load_latent_config(const std::filesystem::path& path);

/// Single-column CSV of values in [-1, 1]; a non-numeric first line is a header.
std::vector<double> load_empirical_sample(const std::filesystem::path& path);

}  // namespace ivmcd
