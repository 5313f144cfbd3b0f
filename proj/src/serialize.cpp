#include "ivmcd/serialize.hpp"

#include "ivmcd/error.hpp"

#include <set>

namespace ivmcd {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        const Vector row = m.row(i).transpose();
        rows.push_back(vec_json(row));
    }
    return rows;
}

json mask_json(const Mask& m) { return std::vector<int>(m.begin(), m.end()); }

Vector vec_from(const json& j, const char* what) {
    IVMCD_REQUIRE(j.is_array(), std::string(what) + " must be an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        IVMCD_REQUIRE(j[i].is_number(), std::string(what) + " must hold numbers");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix mat_from(const json& j, const char* what) {
    IVMCD_REQUIRE(j.is_array() && !j.empty(), std::string(what) + " must be a non-empty array of rows");
    const auto rows = static_cast<Index>(j.size());
    Matrix m(rows, rows);
    for (Index i = 0; i < rows; ++i) {
        const Vector row = vec_from(j[static_cast<std::size_t>(i)], what);
        IVMCD_REQUIRE(row.size() == rows, std::string(what) + " must be square");
        m.row(i) = row.transpose();
    }
    return m;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    IVMCD_REQUIRE(obj.is_object(), where + " must be a JSON object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw InputError("unknown key '" + key + "' in " + where);
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("key '") + key + "' has the wrong type");
    }
}

ImcdConfig config_from_json(const json& j) {
    reject_unknown(j, {"m", "m_fraction", "n_starts", "n_keep", "warm_csteps", "max_iter", "tol",
                       "large_n_threshold", "merge_cap"},
                   "imcd");
    ImcdConfig cfg;
    if (j.contains("m")) cfg.m = get_or<Index>(j, "m", 0);
    cfg.m_fraction = get_or(j, "m_fraction", cfg.m_fraction);
    cfg.n_starts = get_or(j, "n_starts", cfg.n_starts);
    cfg.n_keep = get_or(j, "n_keep", cfg.n_keep);
    cfg.warm_csteps = get_or(j, "warm_csteps", cfg.warm_csteps);
    cfg.max_iter = get_or(j, "max_iter", cfg.max_iter);
    cfg.tol = get_or(j, "tol", cfg.tol);
    cfg.large_n_threshold = get_or(j, "large_n_threshold", cfg.large_n_threshold);
    cfg.merge_cap = get_or(j, "merge_cap", cfg.merge_cap);
    return cfg;
}

}  // namespace

json latents_to_json(const std::vector<LatentSpec>& specs) {
    json arr = json::array();
    for (const auto& s : specs) {
        json e = {{"kind", s.name()}};
        if (const auto* t = std::get_if<LatentSpec::Triangular>(&s.kind())) e["mode"] = t->mode;
        if (const auto* emp = std::get_if<LatentSpec::Empirical>(&s.kind())) e["values"] = emp->sorted;
        arr.push_back(std::move(e));
    }
    return arr;
}

json config_to_json(const ImcdConfig& cfg) {
    json j = {{"m_fraction", cfg.m_fraction}, {"n_starts", cfg.n_starts},       {"n_keep", cfg.n_keep},
              {"warm_csteps", cfg.warm_csteps}, {"max_iter", cfg.max_iter},     {"tol", cfg.tol},
              {"large_n_threshold", cfg.large_n_threshold}, {"merge_cap", cfg.merge_cap},
              {"reweight", describe(cfg.reweight)},         {"seed", cfg.seed}};
    if (cfg.m) j["m"] = *cfg.m;
    return j;
}

json farness_to_json(const FarnessModel& model) {
    return {{"med1", model.med1}, {"mad1", model.mad1}, {"yj_lambda", model.yj_lambda},
            {"med2", model.med2}, {"mad2", model.mad2}};
}

json fit_to_json(const ImcdFit& fit, const IntervalDataset& ds) {
    json traces = json::array();
    for (const auto& t : fit.logdet_trace)
        traces.push_back({{"start", t.start}, {"stage", to_string(t.stage)}, {"subset_size", t.subset_size},
                          {"logdet", t.logdet}});
    return {{"schema_version", kSchemaVersion},
            {"kind", "imcd_fit"},
            {"n", ds.n()},
            {"p", ds.p()},
            {"variables", ds.variable_names},
            {"latent", latents_to_json(ds.latents())},
            {"config", config_to_json(fit.config)},
            {"m", fit.m},
            {"raw", {{"logdet", fit.raw_logdet},
                     {"mu_c", vec_json(fit.raw_center.mu_c)},
                     {"mu_r", vec_json(fit.raw_center.mu_r)},
                     {"sigma_b", mat_json(fit.raw_cov.sigma_b)},
                     {"subset", mask_json(fit.z_final)}}},
            {"reweighted", {{"cutoff", fit.reweight_cutoff},
                            {"weights", mask_json(fit.weights)},
                            {"retained", std::count(fit.weights.begin(), fit.weights.end(), 1)},
                            {"mu_c", vec_json(fit.center.mu_c)},
                            {"mu_r", vec_json(fit.center.mu_r)},
                            {"sigma_b", mat_json(fit.cov.sigma_b)}}},
            {"dsq_raw", vec_json(fit.dsq_raw)},
            {"failed_starts", fit.failed_starts},
            {"traces", std::move(traces)}};
}

StoredFit fit_from_json(const json& doc) {
    IVMCD_REQUIRE(doc.is_object(), "fit document must be a JSON object");
    IVMCD_REQUIRE(doc.value("schema_version", 0) == kSchemaVersion,
                  "unsupported fit schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    IVMCD_REQUIRE(doc.value("kind", std::string{}) == "imcd_fit", "document is not an IMCD fit");
    IVMCD_REQUIRE(doc.contains("reweighted"), "fit document lacks the reweighted estimates");
    const auto& rw = doc.at("reweighted");
    StoredFit f;
    f.center.mu_c = vec_from(rw.at("mu_c"), "mu_c");
    f.center.mu_r = vec_from(rw.at("mu_r"), "mu_r");
    f.cov.sigma_b = mat_from(rw.at("sigma_b"), "sigma_b");
    const Index p = f.cov.sigma_b.rows();
    IVMCD_REQUIRE(f.center.mu_c.size() == p && f.center.mu_r.size() == p, "fit dimensions are inconsistent");
    f.variables = get_or(doc, "variables", std::vector<std::string>{});
    f.m = get_or<Index>(doc, "m", 0);
    return f;
}

json report_to_json(const OutlierReport& report, const IntervalDataset& ds) {
    json flagged = json::array();
    for (std::size_t i = 0; i < report.flags.size(); ++i)
        if (report.flags[i]) flagged.push_back(i < ds.row_ids.size() ? ds.row_ids[i] : std::to_string(i + 1));
    json j = {{"schema_version", kSchemaVersion},
              {"kind", "outlier_report"},
              {"estimator", to_string(report.estimator)},
              {"method", describe(report.method)},
              {"cutoff", report.cutoff},
              {"dsq", vec_json(report.dsq)},
              {"flags", mask_json(report.flags)},
              {"n_flagged", report.flagged()},
              {"flagged_ids", std::move(flagged)}};
    if (report.scores) j["scores"] = *report.scores;
    if (report.mild_cutoff) j["mild_cutoff"] = *report.mild_cutoff;
    if (report.mild_flags) j["mild_flags"] = mask_json(*report.mild_flags);
    return j;
}

GridConfig grid_from_json(const json& doc) {
    reject_unknown(doc, {"schema_version", "seed", "reps", "cells", "imcd", "adjbox_k", "farness_threshold"}, "grid");
    GridConfig g;
    g.seed = get_or<std::uint64_t>(doc, "seed", 0);
    g.reps = get_or(doc, "reps", g.reps);
    g.adjbox_k = get_or(doc, "adjbox_k", g.adjbox_k);
    g.farness_threshold = get_or(doc, "farness_threshold", g.farness_threshold);
    if (doc.contains("imcd")) g.imcd = config_from_json(doc.at("imcd"));
    IVMCD_REQUIRE(doc.contains("cells") && doc.at("cells").is_array(), "grid needs a 'cells' array");
    std::size_t k = 0;
    for (const auto& c : doc.at("cells")) {
        const std::string where = "cells[" + std::to_string(k++) + "]";
        reject_unknown(c, {"scenario", "p", "n", "epsilon", "scheme", "latent", "corr_block"}, where);
        for (const char* key : {"p", "n", "epsilon"})
            IVMCD_REQUIRE(c.contains(key), where + " is missing '" + key + "'");
        const auto p = get_or<Index>(c, "p", 0);
        const auto n = get_or<Index>(c, "n", 0);
        const double eps = get_or(c, "epsilon", 0.0);
        IVMCD_REQUIRE(p >= 1 && n >= 1, where + ": p and n must be positive");
        IVMCD_REQUIRE(eps >= 0.0 && eps < 1.0, where + ": epsilon must lie in [0, 1)");
        ScenarioConfig sc;
        if (c.contains("scenario")) {
            IVMCD_REQUIRE(!c.contains("scheme") && !c.contains("latent"),
                          where + ": give either 'scenario' or 'scheme'/'latent'");
            sc = scenario_config(get_or(c, "scenario", 1), p, n, eps);
        } else {
            IVMCD_REQUIRE(c.contains("scheme") && c.contains("latent"),
                          where + " needs 'scenario' or both 'scheme' and 'latent'");
            sc.p = p;
            sc.n = n;
            sc.epsilon = eps;
            sc.scheme = parse_scheme(get_or<std::string>(c, "scheme", ""));
            sc.latent = parse_latent_family(get_or<std::string>(c, "latent", ""));
        }
        sc.corr_block = get_or(c, "corr_block", false);
        g.cells.push_back({sc});
    }
    IVMCD_REQUIRE(!g.cells.empty(), "grid has no cells");
    IVMCD_REQUIRE(g.reps >= 1, "reps must be at least 1");
    return g;
}

json grid_to_json(const GridConfig& grid) {
    json cells = json::array();
    for (const auto& c : grid.cells)
        cells.push_back({{"p", c.scenario.p},
                         {"n", c.scenario.n},
                         {"epsilon", c.scenario.epsilon},
                         {"scheme", to_string(c.scenario.scheme)},
                         {"latent", to_string(c.scenario.latent)},
                         {"corr_block", c.scenario.corr_block}});
    json imcd = config_to_json(grid.imcd);
    imcd.erase("seed");
    imcd.erase("reweight");
    return {{"schema_version", kSchemaVersion}, {"seed", grid.seed},         {"reps", grid.reps},
            {"adjbox_k", grid.adjbox_k},       {"farness_threshold", grid.farness_threshold},
            {"imcd", std::move(imcd)},          {"cells", std::move(cells)}};
}

}  // namespace ivmcd
