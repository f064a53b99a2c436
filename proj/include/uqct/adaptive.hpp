#pragma once

#include <optional>

#include "uqct/combination.hpp"

namespace uqct {

// Cost of one full-grid evaluation:
//   (nodes per side)^2 * prod_k 2^(l_k) * cost_Trunc
// where cost_Trunc is either the highest active parametric dimension or the
// number of active dimensions (1 when none is active, so the anchor index
// stays the cheapest).
struct CostModel {
    enum class TruncMode { highest_active, count_active };
    TruncMode trunc_mode = TruncMode::highest_active;
    int mesh_offset = 2;
};

double cost(const MultiIndex& idx, const CostModel& model);

struct StoppingRule {
    enum class Mode { global_profit, global_error, work_budget, successive_diff };
    Mode mode = Mode::global_profit;
    double epsilon = 1e-6;
    double work_budget = 0.0;  // for Mode::work_budget
    int zeta = 3;              // for Mode::successive_diff
    int max_iterations = 5000;
};

struct Profit {
    double error_est = 0.0;  // E = ||Delta u||
    double cost = 0.0;       // c
    double eta = 0.0;        // E / c
};

struct RunRecord {
    int iteration = 0;
    MultiIndex selected;
    double error_est = 0.0;
    double cost = 0.0;
    double eta = 0.0;
    double eta_global = 0.0;
    double cum_cost = 0.0;   // over I = O u A
    long solves = 0;         // distinct PDE solves so far
    double wall_ms = 0.0;
    std::optional<double> l2_error;  // vs reference, when configured
};

// Old and active neighbor sets plus the activation bookkeeping of the
// buffer-variable scheme.
struct AdaptiveState {
    IndexSet old_set;
    IndexSet active;
    std::vector<bool> act;  // tracked parametric dims, size M + buffer
    int activated = 0;      // M
    int buffer = 5;         // M-hat
    std::unordered_map<MultiIndex, Profit, MultiIndexHash> profits;
    double eta_global = 0.0;
    double cum_cost = 0.0;
    int iteration = 0;

    int tracked_dims() const { return int(act.size()); }
    IndexSet merged() const;  // O u A
};

struct AdaptiveConfig {
    int buffer = 5;  // M-hat
    CostModel cost_model;
    StoppingRule stopping;
    int max_spatial_level = -1;  // cap on lx candidates, -1 = unlimited
    int checkpoint_every = 0;    // 0 = off
    std::string checkpoint_path;
    // Reference for the per-iteration error column (prolonged combination of
    // increments); empty = no error tracking.
    std::optional<QoiValue> reference;
};

struct AdaptiveResult {
    IndexSet index_set;
    std::unordered_map<MultiIndex, int, MultiIndexHash> coefficients;
    QoiValue combined;
    std::vector<RunRecord> records;
    AdaptiveState state;
};

// argmax eta over the active set, lexicographically smallest on ties.
const MultiIndex* select_index(const AdaptiveState& state);

Profit compute_profit(const MultiIndex& idx, const Problem& problem, EvalCache& cache,
                      const CostModel& model);

// One refinement step: move idx from A to O, admit its admissible forward
// neighbors, and run the buffer-extension bookkeeping when idx activated a
// new parametric dimension.
void expand(AdaptiveState& state, const MultiIndex& idx, const Problem& problem, EvalCache& cache,
            const AdaptiveConfig& config);

// Algorithm: greedy profit-driven construction of the index set, final
// combination over O u A.
AdaptiveResult run_adaptive(const Problem& problem, const AdaptiveConfig& config, EvalCache& cache);

// Resume from a checkpoint file written during a previous run; the cache is
// rebuilt on demand, so the trajectory matches the uninterrupted run.
AdaptiveResult resume_adaptive(const Problem& problem, const AdaptiveConfig& config,
                               EvalCache& cache, const std::string& checkpoint_path);

void write_checkpoint(const AdaptiveState& state, const std::vector<RunRecord>& records,
                      const std::string& path);

}  // namespace uqct
