#include "ivmcd/latent.hpp"

#include "ivmcd/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ivmcd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double empirical_quantile(const std::vector<double>& xs, double t) {
    if (xs.size() == 1) return xs.front();
    const double h = t * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

}  // namespace

LatentSpec LatentSpec::uniform() { return LatentSpec(Uniform{}); }

LatentSpec LatentSpec::triangular(double mode) {
    IVMCD_REQUIRE(std::isfinite(mode) && mode > -1.0 && mode < 1.0,
                  "triangular latent mode must lie in (-1, 1), got " + std::to_string(mode));
    return LatentSpec(Triangular{mode});
}

LatentSpec LatentSpec::empirical(std::vector<double> sample) {
    IVMCD_REQUIRE(!sample.empty(), "empirical latent sample is empty");
    for (double v : sample)
        IVMCD_REQUIRE(std::isfinite(v) && v >= -1.0 && v <= 1.0,
                      "empirical latent value outside [-1, 1]: " + std::to_string(v));
    std::sort(sample.begin(), sample.end());
    return LatentSpec(Empirical{std::move(sample)});
}

LatentSpec LatentSpec::degenerate() { return LatentSpec(Degenerate{}); }

std::string LatentSpec::name() const {
    return std::visit(Overloaded{[](const Uniform&) { return std::string("uniform"); },
                                 [](const Triangular& t) {
                                     std::ostringstream os;
                                     os << "triangular(" << t.mode << ")";
                                     return os.str();
                                 },
                                 [](const Empirical& e) {
                                     return "empirical(k=" + std::to_string(e.sorted.size()) + ")";
                                 },
                                 [](const Degenerate&) { return std::string("degenerate"); }},
                      kind_);
}

bool LatentSpec::operator==(const LatentSpec& other) const {
    if (kind_.index() != other.kind_.index()) return false;
    if (const auto* t = std::get_if<Triangular>(&kind_))
        return t->mode == std::get<Triangular>(other.kind_).mode;
    if (const auto* e = std::get_if<Empirical>(&kind_))
        return e->sorted == std::get<Empirical>(other.kind_).sorted;
    return true;
}

double LatentSpec::quantile(double t) const {
    return std::visit(Overloaded{[t](const Uniform&) { return 2.0 * t - 1.0; },
                                 [t](const Triangular& tri) {
                                     const double c = tri.mode;
                                     const double split = (c + 1.0) / 2.0;
                                     if (t < split) return -1.0 + std::sqrt(t * 2.0 * (c + 1.0));
                                     return 1.0 - std::sqrt((1.0 - t) * 2.0 * (1.0 - c));
                                 },
                                 [t](const Empirical& e) { return empirical_quantile(e.sorted, t); },
                                 [](const Degenerate&) { return 0.0; }},
                      kind_);
}

double latent_mean(const LatentSpec& spec) {
    return std::visit(
        Overloaded{[](const LatentSpec::Uniform&) { return 0.0; },
                   [](const LatentSpec::Triangular& t) { return t.mode / 3.0; },
                   [](const LatentSpec::Empirical& e) {
                       // Exact integral of the piecewise-linear quantile function.
                       const auto& xs = e.sorted;
                       if (xs.size() == 1) return xs.front();
                       double acc = 0.0;
                       for (std::size_t i = 0; i + 1 < xs.size(); ++i) acc += 0.5 * (xs[i] + xs[i + 1]);
                       return acc / static_cast<double>(xs.size() - 1);
                   },
                   [](const LatentSpec::Degenerate&) { return 0.0; }},
        spec.kind());
}

double latent_second_moment(const LatentSpec& spec) {
    return std::visit(
        Overloaded{[](const LatentSpec::Uniform&) { return 1.0 / 3.0; },
                   [](const LatentSpec::Triangular& t) { return (1.0 + t.mode * t.mode) / 6.0; },
                   [](const LatentSpec::Empirical& e) {
                       const auto& xs = e.sorted;
                       if (xs.size() == 1) return xs.front() * xs.front();
                       double acc = 0.0;
                       for (std::size_t i = 0; i + 1 < xs.size(); ++i)
                           acc += (xs[i] * xs[i] + xs[i] * xs[i + 1] + xs[i + 1] * xs[i + 1]) / 3.0;
                       return acc / static_cast<double>(xs.size() - 1);
                   },
                   [](const LatentSpec::Degenerate&) { return 0.0; }},
        spec.kind());
}

double cross_expectation(const LatentSpec& spec_j, const LatentSpec& spec_l, std::size_t quad_points) {
    IVMCD_REQUIRE(quad_points >= 2, "cross_expectation needs at least 2 quadrature points");
    if (spec_j.is_degenerate() || spec_l.is_degenerate()) return 0.0;
    const double h = 1.0 / static_cast<double>(quad_points);
    double acc = 0.0;
    for (std::size_t k = 0; k < quad_points; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        acc += spec_j.quantile(t) * spec_l.quantile(t);
    }
    return acc * h;
}

LatentMoments build_moments(std::span<const LatentSpec> specs, std::size_t quad_points) {
    IVMCD_REQUIRE(!specs.empty(), "at least one latent variable is required");
    IVMCD_REQUIRE(quad_points >= 2, "build_moments needs at least 2 quadrature points");
    const auto p = static_cast<Index>(specs.size());

    LatentMoments mom;
    mom.psi.resize(p);
    mom.delta.resize(p);
    Vector second(p);
    Vector var(p);
    for (Index j = 0; j < p; ++j) {
        mom.psi(j) = latent_mean(specs[j]);
        second(j) = latent_second_moment(specs[j]);
        mom.delta(j) = second(j) / 4.0;
        var(j) = std::max(0.0, second(j) - mom.psi(j) * mom.psi(j));
    }

    // Off-diagonal comonotone covariances come from midpoint quadrature of
    // the quantile functions. The quadrature covariances are normalized to
    // correlations and rescaled by the exact variances: the result is PSD
    // by construction and its diagonal is exact.
    const double h = 1.0 / static_cast<double>(quad_points);
    Matrix q(static_cast<Index>(quad_points), p);
    for (std::size_t k = 0; k < quad_points; ++k) {
        const double t = (static_cast<double>(k) + 0.5) * h;
        for (Index j = 0; j < p; ++j) q(static_cast<Index>(k), j) = specs[j].quantile(t);
    }
    const Vector qmean = q.colwise().mean().transpose();
    q.rowwise() -= qmean.transpose();
    const Matrix qcov = (q.transpose() * q) * h;

    mom.xi = Matrix::Zero(p, p);
    for (Index j = 0; j < p; ++j) {
        mom.xi(j, j) = var(j);
        for (Index l = j + 1; l < p; ++l) {
            double value = 0.0;
            if (var(j) > 0.0 && var(l) > 0.0) {
                if (specs[j] == specs[l]) {
                    value = var(j);
                } else {
                    const double denom = std::sqrt(qcov(j, j) * qcov(l, l));
                    const double corr = denom > 0.0 ? std::clamp(qcov(j, l) / denom, -1.0, 1.0) : 0.0;
                    value = corr * std::sqrt(var(j) * var(l));
                }
            }
            mom.xi(j, l) = mom.xi(l, j) = value;
        }
    }
    mom.e_uu = mom.xi + mom.psi * mom.psi.transpose();
    for (Index j = 0; j < p; ++j) mom.e_uu(j, j) = second(j);

    mom.lambda = Matrix::Zero(p, 2 * p);
    for (Index j = 0; j < p; ++j) {
        mom.lambda(j, j) = 1.0;
        mom.lambda(j, p + j) = mom.psi(j) / 2.0;
    }
    return mom;
}

std::vector<double> load_empirical_sample(const std::filesystem::path& path) {
    std::ifstream in(path);
    IVMCD_REQUIRE(in.good(), "cannot open empirical latent sample " + path.string());
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto comma = line.find(',');
        const std::string cell = line.substr(0, comma);
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str()) {
            IVMCD_REQUIRE(line_no == 1, path.string() + ":" + std::to_string(line_no) + ": not a number");
            continue;
        }
        out.push_back(v);
    }
    return out;
}

std::vector<LatentSpec> parse_latent_config(const std::string& json_text,
                                            const std::filesystem::path& base_dir) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("latent config is not valid JSON: ") + e.what());
    }
    IVMCD_REQUIRE(doc.is_object() && doc.contains("latent") && doc["latent"].is_array(),
                  "latent config must be an object with a \"latent\" array");
    std::vector<LatentSpec> specs;
    for (const auto& item : doc["latent"]) {
        IVMCD_REQUIRE(item.is_object() && item.contains("kind"), "latent entry without \"kind\"");
        const auto kind = item["kind"].get<std::string>();
        if (kind == "uniform") {
            specs.push_back(LatentSpec::uniform());
        } else if (kind == "triangular") {
            IVMCD_REQUIRE(item.contains("mode"), "triangular latent entry without \"mode\"");
            specs.push_back(LatentSpec::triangular(item["mode"].get<double>()));
        } else if (kind == "empirical") {
            std::vector<double> sample;
            if (item.contains("values")) {
                sample = item["values"].get<std::vector<double>>();
            } else {
                IVMCD_REQUIRE(item.contains("file"), "empirical latent entry needs \"file\" or \"values\"");
                std::filesystem::path file = item["file"].get<std::string>();
                if (file.is_relative()) file = base_dir / file;
                sample = load_empirical_sample(file);
            }
            specs.push_back(LatentSpec::empirical(std::move(sample)));
        } else if (kind == "degenerate") {
            specs.push_back(LatentSpec::degenerate());
        } else {
            throw InputError("unknown latent kind \"" + kind + "\"");
        }
    }
    IVMCD_REQUIRE(!specs.empty(), "latent config lists no variables");
    return specs;
}

std::vector<LatentSpec> load_latent_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    IVMCD_REQUIRE(in.good(), "cannot open latent config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_latent_config(buf.str(), path.parent_path());
}

}  // namespace ivmcd
