#pragma once

#include "ivmcd/imcd.hpp"
#include "ivmcd/outlier.hpp"
#include "ivmcd/simulation.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace ivmcd {

inline constexpr int kSchemaVersion = 1;

nlohmann::json latents_to_json(const std::vector<LatentSpec>& specs);
nlohmann::json config_to_json(const ImcdConfig& cfg);
nlohmann::json farness_to_json(const FarnessModel& model);

/// Fit document written by `estimate` and read back by `detect`.
nlohmann::json fit_to_json(const ImcdFit& fit, const IntervalDataset& ds);

struct StoredFit {
    Barycenter center;
    SymbolicCov cov;
    std::vector<std::string> variables;
    Index m = 0;
};
StoredFit fit_from_json(const nlohmann::json& doc);

nlohmann::json report_to_json(const OutlierReport& report, const IntervalDataset& ds);

/// Grid document: {"seed", "reps", "cells": [...], "imcd": {...}, "adjbox_k", "farness_threshold"}.
/// A cell is either {"scenario": 1..6, "p", "n", "epsilon"} or spells out
/// "scheme" and "latent"; "corr_block" is optional. Unknown keys are rejected.
GridConfig grid_from_json(const nlohmann::json& doc);
nlohmann::json grid_to_json(const GridConfig& grid);

}  // namespace ivmcd
