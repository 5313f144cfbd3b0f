#include "ivmcd/error.hpp"
#include "ivmcd/imcd.hpp"
#include "ivmcd/outlier.hpp"
#include "ivmcd/robust_univariate.hpp"
#include "ivmcd/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace ivmcd;

namespace {

using ColMatrix = Eigen::MatrixXd;

/// Each entry is "uniform", "degenerate", "triangular:<mode>" or a sample
/// of microdata values in [-1, 1].
std::vector<LatentSpec> parse_latents(const py::object& latent, Index p) {
    if (latent.is_none()) return std::vector<LatentSpec>(static_cast<std::size_t>(p), LatentSpec::uniform());
    std::vector<LatentSpec> out;
    for (const auto& item : latent) {
        if (py::isinstance<py::str>(item)) {
            const auto s = item.cast<std::string>();
            if (s == "uniform")
                out.push_back(LatentSpec::uniform());
            else if (s == "degenerate")
                out.push_back(LatentSpec::degenerate());
            else if (s.rfind("triangular:", 0) == 0)
                out.push_back(LatentSpec::triangular(std::stod(s.substr(11))));
            else
                throw InputError("unknown latent '" + s + "'");
        } else {
            out.push_back(LatentSpec::empirical(item.cast<std::vector<double>>()));
        }
    }
    IVMCD_REQUIRE(static_cast<Index>(out.size()) == p, "latent list length does not match the number of variables");
    return out;
}

IntervalDataset make_dataset(const ColMatrix& centers, const ColMatrix& ranges, const py::object& latent) {
    IVMCD_REQUIRE(centers.rows() == ranges.rows() && centers.cols() == ranges.cols(),
                  "centers and ranges must have the same shape");
    return {Matrix(centers), Matrix(ranges), parse_latents(latent, centers.cols())};
}

std::vector<int> as_ints(const Mask& m) { return {m.begin(), m.end()}; }

py::dict fit(const ColMatrix& centers, const ColMatrix& ranges, const py::object& latent, std::optional<double> m,
             int n_starts, const std::string& reweight, double threshold, double k, std::uint64_t seed,
             unsigned threads) {
    const auto ds = make_dataset(centers, ranges, latent);
    const auto mom = build_moments(ds.latents());
    ImcdConfig cfg;
    if (m) {
        if (*m < 1.0)
            cfg.m_fraction = *m;
        else
            cfg.m = static_cast<Index>(*m);
    }
    cfg.n_starts = n_starts;
    cfg.n_keep = std::min(cfg.n_keep, n_starts);
    if (reweight == "adjbox")
        cfg.reweight = AdjBoxRule{k};
    else if (reweight == "farness")
        cfg.reweight = FarnessRule{threshold};
    else
        throw InputError("reweight must be 'farness' or 'adjbox'");
    cfg.seed = seed;
    cfg.threads = threads;
    const ImcdFit f = [&] {
        py::gil_scoped_release release;
        return imcd_fit(ds, mom, cfg);
    }();
    py::dict out;
    out["m"] = f.m;
    out["mu_c"] = Vector(f.center.mu_c);
    out["mu_r"] = Vector(f.center.mu_r);
    out["cov"] = ColMatrix(f.cov.sigma_b);
    out["raw_mu_c"] = Vector(f.raw_center.mu_c);
    out["raw_mu_r"] = Vector(f.raw_center.mu_r);
    out["raw_cov"] = ColMatrix(f.raw_cov.sigma_b);
    out["raw_logdet"] = f.raw_logdet;
    out["subset"] = as_ints(f.z_final);
    out["weights"] = as_ints(f.weights);
    out["dsq_raw"] = Vector(f.dsq_raw);
    out["cutoff"] = f.reweight_cutoff;
    out["failed_starts"] = f.failed_starts;
    return out;
}

py::dict detect(const ColMatrix& centers, const ColMatrix& ranges, const Vector& mu_c, const Vector& mu_r,
                const ColMatrix& cov, const py::object& latent, const std::string& method, double threshold,
                double k, std::optional<double> mild) {
    const auto ds = make_dataset(centers, ranges, latent);
    const auto mom = build_moments(ds.latents());
    DetectMethod dm;
    if (method == "farness")
        dm = FarnessMethod{threshold, mild};
    else if (method == "adjbox")
        dm = AdjBoxMethod{k};
    else if (method == "mallows")
        dm = MallowsAdjBoxMethod{k};
    else
        throw InputError("method must be 'farness', 'adjbox' or 'mallows'");
    const auto r = detect_outliers(ds, {mu_c, mu_r}, {Matrix(cov)}, mom, dm);
    py::dict out;
    out["dsq"] = Vector(r.dsq);
    out["cutoff"] = r.cutoff;
    out["flags"] = as_ints(r.flags);
    out["method"] = describe(dm);
    if (r.scores) out["scores"] = *r.scores;
    if (r.mild_flags) {
        out["mild_flags"] = as_ints(*r.mild_flags);
        out["mild_cutoff"] = *r.mild_cutoff;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Robust estimation and outlier detection for interval-valued data";
    py::register_exception<DegenerateError>(mod, "DegenerateError", PyExc_ArithmeticError);
    py::register_exception<InputError>(mod, "InputError", PyExc_ValueError);

    mod.def("fit", &fit, py::arg("centers"), py::arg("ranges"), py::arg("latent") = py::none(),
            py::arg("m") = py::none(), py::arg("n_starts") = 500, py::arg("reweight") = "farness",
            py::arg("threshold") = 0.975, py::arg("k") = 1.5, py::arg("seed") = 0, py::arg("threads") = 1,
            "Reweighted IMCD fit. `m` below 1 is a fraction of n.");
    mod.def("detect", &detect, py::arg("centers"), py::arg("ranges"), py::arg("mu_c"), py::arg("mu_r"),
            py::arg("cov"), py::arg("latent") = py::none(), py::arg("method") = "farness",
            py::arg("threshold") = 0.95, py::arg("k") = 1.5, py::arg("mild") = py::none(),
            "Flag observations by squared Interval-Mahalanobis distance.");
    mod.def(
        "symbolic_cov",
        [](const ColMatrix& centers, const ColMatrix& ranges, const py::object& latent) {
            const auto ds = make_dataset(centers, ranges, latent);
            return ColMatrix(symbolic_cov(ds, WeightVector::ones(ds.n()), build_moments(ds.latents())).sigma_b);
        },
        py::arg("centers"), py::arg("ranges"), py::arg("latent") = py::none());
    mod.def(
        "mahalanobis_sq",
        [](const ColMatrix& centers, const ColMatrix& ranges, const Vector& mu_c, const Vector& mu_r,
           const ColMatrix& cov, const py::object& latent) {
            const auto ds = make_dataset(centers, ranges, latent);
            return Vector(interval_mahalanobis_all(ds, {mu_c, mu_r}, {Matrix(cov)}, build_moments(ds.latents())));
        },
        py::arg("centers"), py::arg("ranges"), py::arg("mu_c"), py::arg("mu_r"), py::arg("cov"),
        py::arg("latent") = py::none());
    mod.def(
        "farness_scores",
        [](const std::vector<double>& dsq) {
            const auto r = farness_scores(dsq);
            return py::make_tuple(r.scores, r.model.yj_lambda);
        },
        py::arg("dsq"), "Farness scores and the fitted Yeo-Johnson parameter.");
    mod.def("medcouple", [](const std::vector<double>& xs) { return medcouple(xs); }, py::arg("x"));
    mod.def(
        "generate_scenario",
        [](int number, Index p, Index n, double epsilon, std::uint64_t seed) {
            const auto sc = generate_scenario(scenario_config(number, p, n, epsilon, seed));
            py::dict out;
            out["centers"] = ColMatrix(sc.data.centers());
            out["ranges"] = ColMatrix(sc.data.ranges());
            out["labels"] = sc.data.labels() ? *sc.data.labels() : std::vector<int>{};
            out["sigma_b"] = ColMatrix(sc.truth.sigma_b);
            return out;
        },
        py::arg("scenario"), py::arg("p") = 5, py::arg("n") = 500, py::arg("epsilon") = 0.0, py::arg("seed") = 0);
}
