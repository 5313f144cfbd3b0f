#include "ivmcd/imcd.hpp"

#include "ivmcd/error.hpp"
#include "ivmcd/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ivmcd {

namespace {

constexpr double kLogMinDet = -690.7755278982137;  // log(1e-300)
constexpr double kSeedDetRatio = 1e-12;
constexpr std::uint64_t kSubsampleStream = 0xFFFF'FFFF'FFFF'FF00ull;

/// Location, scatter and Cholesky factor for one weight vector.
struct Estimate {
    Vector xbar;  // 2p
    Matrix s_b;
    Eigen::LLT<Matrix> llt;
    double logdet = 0.0;
    double m = 0.0;
};

Estimate estimate(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w) {
    IVMCD_REQUIRE(mom.dim() == ds.p(), "latent moments do not match dataset dimension");
    Estimate e;
    e.m = w.m();
    e.xbar = ds.macrodata().transpose() * w.z() / w.m();
    e.s_b = symbolic_cov_from_2p(macrodata_cov_2p(ds, w), mom);
    e.llt.compute(e.s_b);
    if (e.llt.info() != Eigen::Success) throw DegenerateError("symbolic covariance is singular");
    const auto diag = e.llt.matrixLLT().diagonal();
    e.logdet = 2.0 * diag.array().log().sum();
    if (!std::isfinite(e.logdet) || e.logdet < kLogMinDet)
        throw DegenerateError("symbolic covariance is singular (determinant below 1e-300)");
    return e;
}

Vector distances(const IntervalDataset& ds, const LatentMoments& mom, const Estimate& e) {
    const Index p = ds.p();
    const Matrix s_inv = e.llt.solve(Matrix::Identity(p, p));
    const Matrix a = mom.lambda.transpose() * s_inv * mom.lambda;
    const Matrix b = mom.xi.cwiseProduct(s_inv);
    const Matrix dev = ds.macrodata().rowwise() - e.xbar.transpose();
    const Matrix dev_r = dev.rightCols(p);
    Vector d = (dev * a).cwiseProduct(dev).rowwise().sum() +
               0.25 * (dev_r * b).cwiseProduct(dev_r).rowwise().sum();
    return d.cwiseMax(0.0);
}

Estimate estimate_mask(const IntervalDataset& ds, const LatentMoments& mom, const Mask& z) {
    return estimate(ds, mom, WeightVector::from_mask(z));
}

Index mask_count(const Mask& z) { return static_cast<Index>(std::count(z.begin(), z.end(), 1)); }

/// Move from an arbitrary nonsingular subset to the m nearest observations,
/// then concentrate; the trace starts at the first m-sized subset.
Mask expand_and_concentrate(const IntervalDataset& ds, const LatentMoments& mom, const Mask& start, Index m,
                            int steps, double tol, std::vector<double>* trace) {
    const Estimate e0 = estimate_mask(ds, mom, start);
    Mask z = select_smallest(distances(ds, mom, e0), m);
    return concentrate(ds, mom, std::move(z), m, steps, tol, trace);
}

struct Candidate {
    bool ok = false;
    double logdet = 0.0;
    Mask z;
    RestartTrace trace;
};

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.logdet != b.logdet) return a.logdet < b.logdet;
    return a.trace.start < b.trace.start;
}

/// Run `stage` from each start and return the successful candidates sorted
/// by (objective, start id).
std::vector<Candidate> run_stage(const IntervalDataset& ds, const LatentMoments& mom,
                                 const std::vector<std::optional<Mask>>& starts,
                                 const std::vector<std::size_t>& start_ids, Index m, int steps, double tol,
                                 SearchStage stage, unsigned threads, std::size_t& failed) {
    std::vector<Candidate> slots(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t s) {
        Candidate& c = slots[s];
        c.trace.start = start_ids[s];
        c.trace.stage = stage;
        c.trace.subset_size = m;
        if (!starts[s]) return;
        try {
            c.z = expand_and_concentrate(ds, mom, *starts[s], m, steps, tol, &c.trace.logdet);
            c.logdet = c.trace.logdet.back();
            c.ok = true;
        } catch (const DegenerateError&) {
            c.ok = false;
        }
    });
    std::vector<Candidate> ok;
    for (auto& c : slots) {
        if (c.ok)
            ok.push_back(std::move(c));
        else
            ++failed;
    }
    std::sort(ok.begin(), ok.end(), candidate_less);
    return ok;
}

std::vector<std::optional<Mask>> draw_starts(const IntervalDataset& ds, const LatentMoments& mom,
                                             std::size_t count, std::size_t id_offset, std::uint64_t seed,
                                             unsigned threads) {
    std::vector<std::optional<Mask>> starts(count);
    parallel_for(count, threads, [&](std::size_t s) {
        Philox rng(seed, id_offset + s);
        starts[s] = make_nonsingular(ds, mom, draw_start_subset(ds.n(), ds.p(), rng));
    });
    return starts;
}

RawFit finish(const IntervalDataset& ds, const LatentMoments& mom, Index m, Mask z, std::vector<RestartTrace> traces,
              std::size_t failed) {
    RawFit fit;
    fit.m = m;
    const auto w = WeightVector::from_mask(z);
    const Estimate e = estimate(ds, mom, w);
    fit.logdet = e.logdet;
    fit.center = barycenter(ds, w);
    fit.cov = {e.s_b};
    fit.z_final = std::move(z);
    fit.traces = std::move(traces);
    fit.failed_starts = failed;
    return fit;
}

/// Final convergence from the kept candidates on `ds` with subset size m.
RawFit converge_kept(const IntervalDataset& ds, const LatentMoments& mom, std::vector<Candidate> kept,
                     const std::vector<Mask>& kept_masks, Index m, const ImcdConfig& cfg,
                     std::vector<RestartTrace> traces, std::size_t failed) {
    std::vector<Candidate> final_slots(kept.size());
    parallel_for(kept.size(), cfg.threads, [&](std::size_t s) {
        Candidate& c = final_slots[s];
        c.trace = {kept[s].trace.start, SearchStage::Final, m, {}};
        try {
            if (mask_count(kept_masks[s]) == m)
                c.z = concentrate(ds, mom, kept_masks[s], m, cfg.max_iter, cfg.tol, &c.trace.logdet);
            else
                c.z = expand_and_concentrate(ds, mom, kept_masks[s], m, cfg.max_iter, cfg.tol, &c.trace.logdet);
            c.logdet = c.trace.logdet.back();
            c.ok = true;
        } catch (const DegenerateError&) {
            c.ok = false;
        }
    });
    const Candidate* best = nullptr;
    for (auto& c : final_slots) {
        traces.push_back(c.trace);
        if (!c.ok) {
            ++failed;
            continue;
        }
        if (!best || candidate_less(c, *best)) best = &c;
    }
    if (!best)
        throw DegenerateError("every retained subset became singular; the data may lie on a hyperplane "
                              "(reduce p or increase m)");
    return finish(ds, mom, m, best->z, std::move(traces), failed);
}

RawFit search_small(const IntervalDataset& ds, const LatentMoments& mom,
                    const std::vector<std::optional<Mask>>& starts, Index m, const ImcdConfig& cfg) {
    std::vector<std::size_t> ids(starts.size());
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    std::size_t failed = 0;
    auto ranked = run_stage(ds, mom, starts, ids, m, cfg.warm_csteps, 0.0, SearchStage::Warm, cfg.threads, failed);
    if (ranked.empty())
        throw DegenerateError("all start subsets are singular (reduce p or increase m)");
    std::vector<RestartTrace> traces;
    for (const auto& c : ranked) traces.push_back(c.trace);
    std::sort(traces.begin(), traces.end(), [](const auto& a, const auto& b) { return a.start < b.start; });

    ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(1, cfg.n_keep))));
    std::vector<Mask> masks;
    for (const auto& c : ranked) masks.push_back(c.z);
    return converge_kept(ds, mom, std::move(ranked), masks, m, cfg, std::move(traces), failed);
}

RawFit search_large(const IntervalDataset& ds, const LatentMoments& mom, Index m, const ImcdConfig& cfg) {
    const Index n = ds.n();
    const Index p = ds.p();
    const Index n_merge = std::min(n, cfg.merge_cap);
    const Index k = std::min<Index>(5, (n + 299) / 300);

    Philox rng(cfg.seed, kSubsampleStream);
    const auto drawn = sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(n_merge), rng);

    std::vector<Index> merged(drawn.begin(), drawn.end());
    std::sort(merged.begin(), merged.end());
    std::vector<Index> merged_pos(static_cast<std::size_t>(n), -1);
    for (std::size_t q = 0; q < merged.size(); ++q) merged_pos[static_cast<std::size_t>(merged[q])] = static_cast<Index>(q);

    const auto per_partition = static_cast<std::size_t>(std::max(1, cfg.n_starts / static_cast<int>(k)));
    std::vector<RestartTrace> traces;
    std::vector<Candidate> pool;  // partition winners, masks in merged coordinates
    std::size_t failed = 0;
    std::size_t offset = 0;
    for (Index q = 0; q < k; ++q) {
        const Index size = n_merge / k + (q < n_merge % k ? 1 : 0);
        std::vector<Index> part(drawn.begin() + static_cast<std::ptrdiff_t>(offset),
                                drawn.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(size)));
        offset += static_cast<std::size_t>(size);
        std::sort(part.begin(), part.end());
        const IntervalDataset sub = ds.select(part);
        const Index m_sub = std::clamp<Index>(size * m / n, p + 1, size);

        const std::size_t id_offset = static_cast<std::size_t>(q) * per_partition;
        const auto starts = draw_starts(sub, mom, per_partition, id_offset, cfg.seed, cfg.threads);
        std::vector<std::size_t> ids(per_partition);
        std::iota(ids.begin(), ids.end(), id_offset);
        auto ranked = run_stage(sub, mom, starts, ids, m_sub, cfg.warm_csteps, 0.0, SearchStage::Warm, cfg.threads,
                                failed);
        for (const auto& c : ranked) traces.push_back(c.trace);
        ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(1, cfg.n_keep))));
        for (auto& c : ranked) {
            Mask embedded(static_cast<std::size_t>(n_merge), 0);
            for (std::size_t i = 0; i < part.size(); ++i)
                if (c.z[i]) embedded[static_cast<std::size_t>(merged_pos[static_cast<std::size_t>(part[i])])] = 1;
            c.z = std::move(embedded);
            pool.push_back(std::move(c));
        }
    }
    if (pool.empty()) throw DegenerateError("all start subsets are singular (reduce p or increase m)");

    const IntervalDataset merged_ds = ds.select(merged);
    const Index m_merge = std::clamp<Index>(n_merge * m / n, p + 1, n_merge);
    std::vector<std::optional<Mask>> merge_starts;
    std::vector<std::size_t> merge_ids;
    for (const auto& c : pool) {
        merge_starts.emplace_back(c.z);
        merge_ids.push_back(c.trace.start);
    }
    auto ranked = run_stage(merged_ds, mom, merge_starts, merge_ids, m_merge, cfg.warm_csteps, 0.0, SearchStage::Merge,
                            cfg.threads, failed);
    if (ranked.empty()) throw DegenerateError("all merged subsets are singular (reduce p or increase m)");
    for (const auto& c : ranked) traces.push_back(c.trace);
    ranked.resize(std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(1, cfg.n_keep))));

    std::vector<Mask> full_masks;
    for (const auto& c : ranked) {
        Mask full(static_cast<std::size_t>(n), 0);
        for (std::size_t i = 0; i < merged.size(); ++i)
            if (c.z[i]) full[static_cast<std::size_t>(merged[i])] = 1;
        full_masks.push_back(std::move(full));
    }
    return converge_kept(ds, mom, std::move(ranked), full_masks, m, cfg, std::move(traces), failed);
}

}  // namespace

std::string describe(const ReweightRule& rule) {
    std::ostringstream os;
    if (const auto* a = std::get_if<AdjBoxRule>(&rule))
        os << "adjbox(k=" << a->k << ")";
    else
        os << "farness(" << std::get<FarnessRule>(rule).threshold << ")";
    return os.str();
}

const char* to_string(SearchStage stage) {
    switch (stage) {
        case SearchStage::Warm: return "warm";
        case SearchStage::Merge: return "merge";
        case SearchStage::Final: return "final";
    }
    return "?";
}

Index resolve_subset_size(const ImcdConfig& cfg, Index n, Index p) {
    Index m = 0;
    if (cfg.m) {
        m = *cfg.m;
    } else {
        IVMCD_REQUIRE(cfg.m_fraction > 0.0 && cfg.m_fraction <= 1.0, "subset fraction must lie in (0, 1]");
        m = static_cast<Index>(std::floor(cfg.m_fraction * static_cast<double>(n) + 1e-9));
    }
    IVMCD_REQUIRE(m >= p + 1 && m <= n, "subset size m=" + std::to_string(m) + " out of bounds [p+1, n] = [" +
                                            std::to_string(p + 1) + ", " + std::to_string(n) + "]");
    return m;
}

double objective_logdet(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w) {
    return estimate(ds, mom, w).logdet;
}

Vector cstep_distances(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w) {
    return distances(ds, mom, estimate(ds, mom, w));
}

Vector gradient(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w) {
    const Estimate e = estimate(ds, mom, w);
    const Index p = ds.p();
    const Matrix s_inv = e.llt.solve(Matrix::Identity(p, p));
    const Matrix a = mom.lambda.transpose() * s_inv * mom.lambda;
    const Matrix b = mom.xi.cwiseProduct(s_inv);
    const Vector rbar = e.xbar.tail(p);
    const double offset = e.xbar.dot(a * e.xbar) + 0.25 * rbar.dot(b * rbar);
    return (distances(ds, mom, e).array() - offset) / e.m;
}

Vector gradient_by_trace(const IntervalDataset& ds, const LatentMoments& mom, const WeightVector& w) {
    const Estimate e = estimate(ds, mom, w);
    const Index p = ds.p();
    const Matrix s_inv = e.llt.solve(Matrix::Identity(p, p));
    const Matrix x = ds.macrodata();
    const Matrix outer_mean = e.xbar * e.xbar.transpose();
    Vector g(ds.n());
    for (Index i = 0; i < ds.n(); ++i) {
        const Vector dev = x.row(i).transpose() - e.xbar;
        const Matrix d_s2p = (dev * dev.transpose() - outer_mean) / e.m;
        const Matrix d_sb = mom.lambda * d_s2p * mom.lambda.transpose() +
                            0.25 * mom.xi.cwiseProduct(d_s2p.bottomRightCorner(p, p));
        g(i) = (s_inv * d_sb).trace();
    }
    return g;
}

Mask select_smallest(const Vector& dsq, Index m) {
    IVMCD_REQUIRE(m >= 0 && m <= dsq.size(), "cannot select more observations than available");
    std::vector<Index> order(static_cast<std::size_t>(dsq.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dsq(a) < dsq(b); });
    Mask z(static_cast<std::size_t>(dsq.size()), 0);
    for (Index k = 0; k < m; ++k) z[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
    return z;
}

Mask minorization_step(const IntervalDataset& ds, const LatentMoments& mom, const Mask& z, Index m) {
    IVMCD_REQUIRE(static_cast<Index>(z.size()) == ds.n(), "subset mask length does not match n");
    return select_smallest(distances(ds, mom, estimate_mask(ds, mom, z)), m);
}

Mask concentrate(const IntervalDataset& ds, const LatentMoments& mom, Mask z, Index m, int max_iter, double tol,
                 std::vector<double>* trace) {
    Estimate e = estimate_mask(ds, mom, z);
    if (trace) trace->push_back(e.logdet);
    for (int it = 0; it < max_iter; ++it) {
        Mask next = select_smallest(distances(ds, mom, e), m);
        if (next == z) break;
        Estimate e_next = estimate_mask(ds, mom, next);
        if (trace) trace->push_back(e_next.logdet);
        const bool converged = std::abs(e.logdet - e_next.logdet) < tol;
        z = std::move(next);
        e = std::move(e_next);
        if (converged) break;
    }
    return z;
}

std::vector<std::size_t> draw_start_subset(Index n, Index p, Philox& rng) {
    IVMCD_REQUIRE(n >= p + 1, "fewer observations than p + 1");
    auto idx = sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(p + 1), rng);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::optional<Mask> make_nonsingular(const IntervalDataset& ds, const LatentMoments& mom,
                                     const std::vector<std::size_t>& start) {
    const Index n = ds.n();
    const Index p = ds.p();
    Mask z(static_cast<std::size_t>(n), 0);
    for (auto i : start) z[i] = 1;
    for (;;) {
        const Index count = mask_count(z);
        if (count >= 2) {
            const auto w = WeightVector::from_mask(z);
            const Matrix s = symbolic_cov(ds, w, mom).sigma_b;
            const double mean_diag = s.diagonal().mean();
            if (mean_diag > 0.0) {
                Eigen::LLT<Matrix> llt(s);
                if (llt.info() == Eigen::Success) {
                    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
                    const double bound = std::log(kSeedDetRatio) + static_cast<double>(p) * std::log(mean_diag);
                    if (std::isfinite(logdet) && logdet > bound && logdet >= kLogMinDet) return z;
                }
            }
        }
        if (count == n) return std::nullopt;
        const auto b = barycenter(ds, WeightVector::from_mask(z));
        const IntervalObservation center{b.mu_c, b.mu_r};
        Index best = -1;
        double best_d = 0.0;
        for (Index i = 0; i < n; ++i) {
            if (z[static_cast<std::size_t>(i)]) continue;
            const double d = mallows_distance_sq(ds.observation(i), center, mom);
            if (best < 0 || d < best_d) {
                best = i;
                best_d = d;
            }
        }
        z[static_cast<std::size_t>(best)] = 1;
    }
}

RawFit search_from_starts(const IntervalDataset& ds, const LatentMoments& mom, const std::vector<Mask>& starts,
                          Index m, const ImcdConfig& cfg) {
    IVMCD_REQUIRE(m >= ds.p() + 1 && m <= ds.n(), "subset size out of bounds");
    std::vector<std::optional<Mask>> opt(starts.begin(), starts.end());
    return search_small(ds, mom, opt, m, cfg);
}

RawFit imcd_raw(const IntervalDataset& ds, const LatentMoments& mom, const ImcdConfig& cfg) {
    IVMCD_REQUIRE(mom.dim() == ds.p(), "latent moments do not match dataset dimension");
    IVMCD_REQUIRE(cfg.n_starts >= 1 && cfg.n_keep >= 1 && cfg.n_keep <= cfg.n_starts,
                  "need 1 <= n_keep <= n_starts");
    const Index m = resolve_subset_size(cfg, ds.n(), ds.p());
    if (m == ds.n()) return finish(ds, mom, m, Mask(static_cast<std::size_t>(ds.n()), 1), {}, 0);
    if (ds.n() <= cfg.large_n_threshold) {
        const auto starts = draw_starts(ds, mom, static_cast<std::size_t>(cfg.n_starts), 0, cfg.seed, cfg.threads);
        return search_small(ds, mom, starts, m, cfg);
    }
    return search_large(ds, mom, m, cfg);
}

Reweighted reweight(const IntervalDataset& ds, const LatentMoments& mom, const RawFit& raw, const ReweightRule& rule) {
    Reweighted out;
    out.dsq_raw = cstep_distances(ds, mom, WeightVector::from_mask(raw.z_final));
    const std::span<const double> dsq(out.dsq_raw.data(), static_cast<std::size_t>(out.dsq_raw.size()));
    out.weights.assign(dsq.size(), 0);
    if (const auto* adj = std::get_if<AdjBoxRule>(&rule)) {
        out.cutoff = adjusted_fences(dsq, adj->k).upper;
        for (std::size_t i = 0; i < dsq.size(); ++i) out.weights[i] = dsq[i] <= out.cutoff;
    } else {
        const double threshold = std::get<FarnessRule>(rule).threshold;
        IVMCD_REQUIRE(threshold > 0.0 && threshold < 1.0, "farness threshold must lie in (0, 1)");
        auto fr = farness_scores(dsq);
        out.cutoff = fr.model.inverse(threshold);
        for (std::size_t i = 0; i < dsq.size(); ++i) out.weights[i] = fr.scores[i] <= threshold;
        out.farness = fr.model;
    }
    if (mask_count(out.weights) < 2)
        throw DegenerateError("reweighting kept fewer than 2 observations");
    const auto w = WeightVector::from_mask(out.weights);
    out.center = barycenter(ds, w);
    out.cov = symbolic_cov(ds, w, mom);
    return out;
}

ImcdFit imcd_fit(const IntervalDataset& ds, const LatentMoments& mom, const ImcdConfig& cfg) {
    RawFit raw = imcd_raw(ds, mom, cfg);
    Reweighted rw = reweight(ds, mom, raw, cfg.reweight);
    ImcdFit fit;
    fit.config = cfg;
    fit.m = raw.m;
    fit.z_final = std::move(raw.z_final);
    fit.raw_center = std::move(raw.center);
    fit.raw_cov = std::move(raw.cov);
    fit.raw_logdet = raw.logdet;
    fit.weights = std::move(rw.weights);
    fit.center = std::move(rw.center);
    fit.cov = std::move(rw.cov);
    fit.dsq_raw = std::move(rw.dsq_raw);
    fit.logdet_trace = std::move(raw.traces);
    fit.reweight_cutoff = rw.cutoff;
    fit.failed_starts = raw.failed_starts;
    return fit;
}

}  // namespace ivmcd
