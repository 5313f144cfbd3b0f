#pragma once

#include "ivmcd/imcd.hpp"
#include "ivmcd/interval.hpp"
#include "ivmcd/outlier.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ivmcd {

enum class Scheme { CenterShift, RangeShift, BothShift };
enum class LatentFamily { Uniform, Triangular };

const char* to_string(Scheme s);
const char* to_string(LatentFamily f);
Scheme parse_scheme(const std::string& s);
LatentFamily parse_latent_family(const std::string& s);

struct ScenarioConfig {
    Index p = 5;
    Index n = 500;
    double epsilon = 0.0;
    Scheme scheme = Scheme::CenterShift;
    LatentFamily latent = LatentFamily::Uniform;
    bool corr_block = false;
    std::uint64_t seed = 0;
    double center_shift = 2.0;
    double range_shift = 5.0;
};

/// Scenarios 1-3 use uniform latents, 4-6 triangular; within each group the
/// contamination hits centers, ranges, then both.
ScenarioConfig scenario_config(int number, Index p, Index n, double epsilon, std::uint64_t seed = 0);
int scenario_number(const ScenarioConfig& cfg);

/// Population parameters of the clean model.
struct PopulationModel {
    Vector mean_2p;
    Matrix cov_2p;
    std::vector<LatentSpec> latents;
    LatentMoments moments;
    Matrix sigma_b;
    Barycenter mu_b;
};

/// Triangular modes are drawn from the config seed, so the model is a
/// function of the config alone.
PopulationModel population_model(const ScenarioConfig& cfg);

struct Scenario {
    IntervalDataset data;
    PopulationModel truth;
    Index n_contaminated = 0;
};

Scenario generate_scenario(const ScenarioConfig& cfg);

double frobenius_rel_error(const Matrix& est, const Matrix& truth);
double kl_divergence_gauss(const Matrix& est, const Matrix& truth);
double angle_error(const Matrix& est, const Matrix& truth);

struct ClassificationMetrics {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    double pr1 = 0, re1 = 0, pr0 = 0, re0 = 0, acc = 0, f1 = 0, gmean = 0;
};

/// Zero denominators: a recall with no members of its class is 1; a
/// precision with no predictions is 1 if the class is absent and 0 otherwise;
/// F1 is 0 when precision + recall = 0.
ClassificationMetrics classification_metrics(const Mask& flags, const std::vector<int>& labels);

struct GridCell {
    ScenarioConfig scenario;  // seed is ignored; replicate seeds derive from the grid seed
};

struct GridConfig {
    std::vector<GridCell> cells;
    int reps = 20;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    ImcdConfig imcd;  // seed and threads are set per replicate
    double adjbox_k = 1.5;
    double farness_threshold = 0.95;
};

/// 2 P x 2 N x 4 epsilon x 6 scenarios = 96 cells.
std::vector<GridCell> full_factorial_grid();

struct ResultRow {
    std::size_t cell = 0;
    int rep = 0;
    std::string method;
    std::string metric;
    double value = 0.0;
};

struct GridResult {
    std::vector<ResultRow> rows;
    std::size_t failed_reps = 0;
};

/// Seed of replicate `rep` in cell `cell`.
std::uint64_t replicate_seed(std::uint64_t grid_seed, std::size_t cell, int rep);

/// Metrics of one replicate, in fixed method/metric order.
std::vector<ResultRow> run_replicate(const ScenarioConfig& cfg, const GridConfig& grid);

GridResult run_grid(const GridConfig& grid);

void write_results_csv(std::ostream& out, const GridConfig& grid, const GridResult& result);

}  // namespace ivmcd
