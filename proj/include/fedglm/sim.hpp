#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedglm/glmm.hpp"
#include "fedglm/lm.hpp"
#include "fedglm/types.hpp"

namespace fedglm {

/// Poisson mixed simulation: random intercept per group, one continuous
/// predictor (standardized before entering the linear predictor), one
/// binary predictor, and a five-category factor dummy-coded against its
/// first category. Optional independent nuisance predictors x4 (normal)
/// and x5 (binary) for the model-selection study.
struct SimSetting {
    int m = 30;
    int n = 100;
    Vector beta;        // (intercept, x1, x2, d2..d5), length 7
    double sigma_u = 0.48;
    bool nuisance = true;
    std::vector<int> k_values = {2, 3, 4};
    int reps = 500;
    std::uint64_t seed = 1;

    static SimSetting preset(int m, int n);  // study parameter values
};

struct SimDataset {
    Vector y;
    Matrix X;                  // true-model design incl. intercept (n*m x 7)
    Matrix nuisance;           // n*m x 2 (x4, x5), empty when disabled
    std::vector<int> groups;   // 0..m-1 per row
};

SimDataset simulate_dataset(const SimSetting& setting, std::uint64_t replicate_seed);

/// Fits recorded for one dataset (actual or pseudo): the true-model fit
/// and, when the dataset carries nuisance columns, the AIC-selected
/// candidate among all main-effect combinations of {x1, x2, x3-block,
/// x4, x5} (the x3 dummies enter and leave together).
struct FitRecord {
    Vector beta;
    Vector se;
    std::vector<WaldInterval> ci;
    double sigma_u = 0.0;
    int selected_model = -1;  // bitmask over {x1, x2, x3, x4, x5}
    Vector predictions;       // at the actual X, response scale
};

struct ReplicateResult {
    int replicate = 0;
    FitRecord actual;
    std::vector<std::pair<int, FitRecord>> pseudo;  // per K
    bool ok = false;
    std::string error;
    int regenerations = 0;
};

/// Simulate (with the degenerate-subgroup retry rule), generate pseudo-data
/// at each K, fit actual and pseudo models.
ReplicateResult run_replicate(const SimSetting& setting, int replicate,
                              const SolverOptions& solver, bool select_models = true);

struct SimulationReport {
    // One row per (K or "actual", coefficient).
    struct CoefficientCell {
        std::string data_type;
        std::string coefficient;
        double mean_rel_bias;
        double coverage;
        double mean_ci_lower;
        double mean_ci_upper;
    };
    std::vector<CoefficientCell> coefficients;

    struct SelectionCell {
        std::string data_type;
        double prop_correct;
        double prop_same_as_actual;
    };
    std::vector<SelectionCell> selection;

    struct PredictionCell {
        std::string data_type;
        double mean_abs_rel_diff;  // vs actual-data model predictions
    };
    std::vector<PredictionCell> predictions;

    int successful_replicates = 0;
    int failed_replicates = 0;
};

SimulationReport aggregate_report(const SimSetting& setting,
                                  const std::vector<ReplicateResult>& results);

/// Full study: run all replicates and emit bias.csv, coverage.csv,
/// selection.csv, predictions.csv under out_dir.
SimulationReport run_study(const SimSetting& setting, const SolverOptions& solver,
                           const std::string& out_dir);

/// Names of the true-model coefficients, aligned with FitRecord::beta.
const std::vector<std::string>& true_model_coefficient_names();

} // namespace fedglm
