#include "uqct/adaptive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace uqct {

double cost(const MultiIndex& idx, const CostModel& model) {
    const MeshLevel mesh{idx.lx, model.mesh_offset};
    double c = double(mesh.nodes_per_side()) * mesh.nodes_per_side();
    int highest = 0, count = 0;
    for (int k = 1; k <= idx.effective_truncation(); ++k) {
        const int l = idx.level(k);
        c *= double(1L << l);
        if (l >= 1) {
            highest = k;
            ++count;
        }
    }
    const int trunc = model.trunc_mode == CostModel::TruncMode::highest_active ? highest : count;
    return c * std::max(1, trunc);
}

IndexSet AdaptiveState::merged() const {
    IndexSet all = old_set;
    all.insert(active.begin(), active.end());
    return all;
}

const MultiIndex* select_index(const AdaptiveState& state) {
    const MultiIndex* best = nullptr;
    double best_eta = -1.0;
    for (const auto& idx : state.active) {
        const double eta = state.profits.at(idx).eta;
        if (!best || eta > best_eta || (eta == best_eta && idx.lex_less(*best))) {
            best = &idx;
            best_eta = eta;
        }
    }
    return best;
}

Profit compute_profit(const MultiIndex& idx, const Problem& problem, EvalCache& cache,
                      const CostModel& model) {
    Profit p;
    p.error_est = qoi_norm(increment(idx, problem, cache));
    p.cost = cost(idx, model);
    p.eta = p.error_est / p.cost;
    return p;
}

namespace {

bool admissible(const MultiIndex& candidate, const IndexSet& old_set) {
    for (int coord = 0; coord <= candidate.effective_truncation(); ++coord)
        if (candidate.level(coord) >= 1 && !old_set.count(candidate.bumped(coord, -1)))
            return false;
    return true;
}

// Computes the increment once for both the profit and the running combined
// estimate (accum), then books the index into A.
double add_to_active(AdaptiveState& state, const MultiIndex& idx, const Problem& problem,
                     EvalCache& cache, const CostModel& model, QoiValue* accum) {
    const QoiValue delta = increment(idx, problem, cache);
    Profit p;
    p.error_est = qoi_norm(delta);
    p.cost = cost(idx, model);
    p.eta = p.error_est / p.cost;
    state.active.insert(idx);
    state.profits[idx] = p;
    state.eta_global += p.eta;
    state.cum_cost += p.cost;
    if (accum) qoi_axpy(*accum, 1.0, delta);
    return p.error_est;
}

double expand_impl(AdaptiveState& state, const MultiIndex& idx, const Problem& problem,
                   EvalCache& cache, const AdaptiveConfig& config, QoiValue* accum) {
    double added_error = 0.0;

    // forward neighbors over the spatial coordinate and all tracked dims
    for (int coord = 0; coord <= state.tracked_dims(); ++coord) {
        const MultiIndex candidate = idx.bumped(coord, +1);
        if (coord == 0 && config.max_spatial_level >= 0 &&
            candidate.lx > config.max_spatial_level)
            continue;
        if (state.active.count(candidate) || state.old_set.count(candidate)) continue;
        if (!admissible(candidate, state.old_set)) continue;
        added_error += add_to_active(state, candidate, problem, cache, config.cost_model, accum);
    }

    // buffer extension: idx activated a previously inactive dimension
    for (int n = 1; n <= state.tracked_dims(); ++n) {
        if (idx.level(n) > 0 && !state.act[n - 1]) {
            state.act[n - 1] = true;
            state.activated += 1;
            state.act.push_back(false);  // keep M-hat untracked buffer entries
            const MultiIndex fresh = MultiIndex{}.bumped(state.tracked_dims(), +1);
            if (!state.active.count(fresh) && !state.old_set.count(fresh))
                added_error += add_to_active(state, fresh, problem, cache, config.cost_model, accum);
        }
    }
    return added_error;
}

double recomputed_eta_global(const AdaptiveState& state) {
    // fixed summation order keeps the refresh bitwise reproducible
    std::vector<MultiIndex> sorted(state.active.begin(), state.active.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return a.lex_less(b); });
    double eta = 0.0;
    for (const auto& idx : sorted) eta += state.profits.at(idx).eta;
    return eta;
}

struct ErrorTracker {
    std::optional<QoiValue> reference;
    QoiValue accum;

    std::optional<double> current_error() const {
        if (!reference) return std::nullopt;
        if (reference->is_scalar()) return std::abs(reference->scalar() - accum.scalar());
        const int level = std::max(reference->field().mesh.level, accum.field().mesh.level);
        QoiValue diff = qoi_prolonged(*reference, level);
        qoi_axpy(diff, -1.0, accum);
        return qoi_norm(diff);
    }
};

bool should_stop(const AdaptiveState& state, const StoppingRule& rule, int consecutive_small) {
    switch (rule.mode) {
        case StoppingRule::Mode::global_profit:
            return state.eta_global <= rule.epsilon;
        case StoppingRule::Mode::global_error: {
            double err = 0.0;
            for (const auto& idx : state.active) err += state.profits.at(idx).error_est;
            return err <= rule.epsilon;
        }
        case StoppingRule::Mode::work_budget:
            return state.cum_cost >= rule.work_budget;
        case StoppingRule::Mode::successive_diff:
            return consecutive_small >= rule.zeta;
    }
    return true;
}

AdaptiveResult drive_loop(const Problem& problem, const AdaptiveConfig& config, EvalCache& cache,
                          AdaptiveState state, std::vector<RunRecord> records, ErrorTracker track,
                          double wall_offset_ms) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto wall_ms = [&] {
        return wall_offset_ms + std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - t0)
                                    .count();
    };

    int consecutive_small = 0;
    while (state.iteration < config.stopping.max_iterations && !state.active.empty() &&
           !should_stop(state, config.stopping, consecutive_small)) {
        const MultiIndex selected = *select_index(state);
        const Profit profit = state.profits.at(selected);

        state.active.erase(selected);
        state.old_set.insert(selected);
        state.eta_global -= profit.eta;
        state.iteration += 1;

        const double added_error =
            expand_impl(state, selected, problem, cache, config,
                        track.reference ? &track.accum : nullptr);
        consecutive_small =
            added_error < config.stopping.epsilon ? consecutive_small + 1 : 0;

        if (state.iteration % 100 == 0) state.eta_global = recomputed_eta_global(state);

        RunRecord rec;
        rec.iteration = state.iteration;
        rec.selected = selected;
        rec.error_est = profit.error_est;
        rec.cost = profit.cost;
        rec.eta = profit.eta;
        rec.eta_global = state.eta_global;
        rec.cum_cost = state.cum_cost;
        rec.solves = cache.total_solves();
        rec.l2_error = track.current_error();
        rec.wall_ms = wall_ms();
        records.push_back(rec);

        if (config.checkpoint_every > 0 && state.iteration % config.checkpoint_every == 0)
            write_checkpoint(state, records, config.checkpoint_path);
    }

    AdaptiveResult result;
    result.index_set = state.merged();
    result.coefficients = combination_coefficients(result.index_set, 1 + state.tracked_dims());
    result.combined = combine(result.index_set, result.coefficients, problem, cache);
    result.records = std::move(records);
    result.state = std::move(state);
    return result;
}

}  // namespace

void expand(AdaptiveState& state, const MultiIndex& idx, const Problem& problem, EvalCache& cache,
            const AdaptiveConfig& config) {
    expand_impl(state, idx, problem, cache, config, nullptr);
}

AdaptiveResult run_adaptive(const Problem& problem, const AdaptiveConfig& config,
                            EvalCache& cache) {
    AdaptiveState state;
    state.buffer = config.buffer;
    state.act.assign(size_t(config.buffer), false);

    ErrorTracker track{config.reference,
                       problem.qoi.scalar_valued()
                           ? QoiValue{0.0}
                           : QoiValue{zero_function({0, problem.mesh_offset})}};

    add_to_active(state, MultiIndex{}, problem, cache, config.cost_model,
                  config.reference ? &track.accum : nullptr);

    return drive_loop(problem, config, cache, std::move(state), {}, std::move(track), 0.0);
}

void write_checkpoint(const AdaptiveState& state, const std::vector<RunRecord>& records,
                      const std::string& path) {
    auto idx_json = [](const MultiIndex& idx) {
        nlohmann::json arr = nlohmann::json::array();
        arr.push_back(idx.lx);
        for (int l : idx.ly) arr.push_back(l);
        return arr;
    };
    nlohmann::json j;
    j["iteration"] = state.iteration;
    j["buffer"] = state.buffer;
    j["activated"] = state.activated;
    j["act"] = std::vector<int>(state.act.begin(), state.act.end());
    j["cum_cost"] = state.cum_cost;
    j["eta_global"] = state.eta_global;
    for (const auto& idx : state.old_set) j["old"].push_back(idx_json(idx));
    for (const auto& idx : state.active) {
        const Profit& p = state.profits.at(idx);
        j["active"].push_back({{"index", idx_json(idx)},
                               {"E", p.error_est},
                               {"c", p.cost},
                               {"eta", p.eta}});
    }
    for (const auto& rec : records) {
        nlohmann::json r = {{"iteration", rec.iteration}, {"index", idx_json(rec.selected)},
                            {"E", rec.error_est},         {"c", rec.cost},
                            {"eta", rec.eta},             {"eta_global", rec.eta_global},
                            {"cum_cost", rec.cum_cost},   {"solves", rec.solves},
                            {"wall_ms", rec.wall_ms}};
        if (rec.l2_error) r["l2_error"] = *rec.l2_error;
        j["records"].push_back(r);
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_checkpoint: cannot open " + path);
    os << j.dump();
}

AdaptiveResult resume_adaptive(const Problem& problem, const AdaptiveConfig& config,
                               EvalCache& cache, const std::string& checkpoint_path) {
    std::ifstream is(checkpoint_path);
    if (!is) throw std::runtime_error("resume_adaptive: cannot open " + checkpoint_path);
    nlohmann::json j;
    is >> j;

    auto idx_from = [](const nlohmann::json& arr) {
        return MultiIndex{arr.at(0), std::vector<int>(arr.begin() + 1, arr.end())};
    };

    AdaptiveState state;
    state.iteration = j.at("iteration");
    state.buffer = j.at("buffer");
    state.activated = j.at("activated");
    state.cum_cost = j.at("cum_cost");
    for (int a : j.at("act")) state.act.push_back(a != 0);
    if (j.contains("old"))
        for (const auto& arr : j.at("old")) state.old_set.insert(idx_from(arr));
    for (const auto& entry : j.at("active")) {
        const MultiIndex idx = idx_from(entry.at("index"));
        state.active.insert(idx);
        state.profits[idx] = {entry.at("E"), entry.at("c"), entry.at("eta")};
    }
    // the stored running sum, not a recompute: keeps the resumed trajectory
    // bitwise identical to an uninterrupted one
    state.eta_global = j.contains("eta_global") ? double(j.at("eta_global"))
                                                : recomputed_eta_global(state);

    std::vector<RunRecord> records;
    double wall_offset = 0.0;
    if (j.contains("records"))
        for (const auto& r : j.at("records")) {
            RunRecord rec;
            rec.iteration = r.at("iteration");
            rec.selected = idx_from(r.at("index"));
            rec.error_est = r.at("E");
            rec.cost = r.at("c");
            rec.eta = r.at("eta");
            rec.eta_global = r.at("eta_global");
            rec.cum_cost = r.at("cum_cost");
            rec.solves = r.at("solves");
            rec.wall_ms = r.at("wall_ms");
            if (r.contains("l2_error")) rec.l2_error = double(r.at("l2_error"));
            wall_offset = rec.wall_ms;
            records.push_back(rec);
        }

    ErrorTracker track;
    track.reference = config.reference;
    track.accum = problem.qoi.scalar_valued()
                      ? QoiValue{0.0}
                      : QoiValue{zero_function({0, problem.mesh_offset})};
    // Rebuild every increment of the checkpointed set. This restores the
    // cache to exactly the state of the uninterrupted run, so the running
    // estimate and the solve counter pick up where they left off.
    for (const auto& idx : state.merged())
        qoi_axpy(track.accum, 1.0, increment(idx, problem, cache));

    return drive_loop(problem, config, cache, std::move(state), std::move(records),
                      std::move(track), wall_offset);
}

}  // namespace uqct
