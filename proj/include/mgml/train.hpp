#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mgml/config.hpp"
#include "mgml/data.hpp"
#include "mgml/net.hpp"

namespace mgml {

// Weighted multi-branch objective: sum of lambda_i * CE(branch_i), with
// terms for unselected branches omitted.
VarPtr objective(const BranchOutputs& outputs, std::span<const int> labels,
                 const std::array<double, 4>& lambda, const BranchSelect& select);

struct EvalResult {
    double oa_ensemble = 0.0;
    // Per-branch overall accuracy, each prediction scored alone; NaN for
    // branches that did not run.
    double oa_mb = std::nan("");
    double oa_ffb = std::nan("");
    double oa_fem3 = std::nan("");
    double oa_fem4 = std::nan("");
    std::vector<std::vector<int>> confusion;     // [label][predicted]
    std::vector<std::vector<double>> psum_rows;  // ensemble scores per sample
    std::vector<int> labels;
};

EvalResult evaluate(const MgmlNet& model, const Dataset& dataset,
                    const BranchSelect& select, int batch_size);

// Binary accuracy between classes a and b: samples of either class,
// argmax of the ensemble score restricted to {a, b}.
double pairwise_accuracy(const EvalResult& eval, int a, int b);

struct EpochStats {
    int epoch;
    double lr;
    double train_loss;
    EvalResult eval;
};

struct TrainResult {
    std::vector<EpochStats> curve;
    double final_oa() const { return curve.back().eval.oa_ensemble; }
};

// Seeded epoch loop: shuffle, batch, forward selected branches, backward,
// SGD step under the step-decay schedule; evaluates after each epoch.
// Deterministic in (model seed, config, data). Aborts on NaN loss.
TrainResult train_model(MgmlNet& model, const Dataset& train_set,
                        const Dataset& test_set, const TrainConfig& cfg,
                        const BranchSelect& select);

// Materializes the configured dataset and its train/test split.
std::pair<Dataset, Dataset> prepare_data(const RunConfig& cfg);

struct ExperimentResult {
    std::vector<double> per_run_oa;
    std::vector<TrainResult> runs;
    double mean() const;
    double stddev() const;  // population
};

// Trains `cfg.train.runs` independent models with derived seeds; runs may
// execute in parallel (capped by MGML_THREADS) without affecting results.
ExperimentResult run_experiment(const RunConfig& cfg, const BranchSelect& select);

// Run-level parallelism cap from MGML_THREADS (>= 1).
int run_parallelism();

} // namespace mgml
