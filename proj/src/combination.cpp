#include "uqct/combination.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace uqct {

bool is_downward_closed(const IndexSet& set) {
    for (const auto& idx : set) {
        for (int coord = 0; coord <= idx.effective_truncation(); ++coord) {
            if (idx.level(coord) >= 1 && !set.count(idx.bumped(coord, -1))) return false;
        }
    }
    return true;
}

EvalCache::Ptr EvalCache::lookup_or_compute(const MultiIndex& idx,
                                            const std::function<CacheEntry()>& compute) {
    std::shared_future<Ptr> fut;
    std::shared_ptr<std::promise<Ptr>> promise;
    {
        std::lock_guard<std::mutex> lock(mtx_);
        auto it = entries_.find(idx);
        if (it != entries_.end()) {
            fut = it->second;
        } else {
            promise = std::make_shared<std::promise<Ptr>>();
            fut = promise->get_future().share();
            entries_.emplace(idx, fut);
        }
    }
    if (promise) {
        try {
            promise->set_value(std::make_shared<const CacheEntry>(compute()));
        } catch (...) {
            promise->set_exception(std::current_exception());
            std::lock_guard<std::mutex> lock(mtx_);
            entries_.erase(idx);  // allow retry after a failure
            throw;
        }
    }
    return fut.get();
}

EvalCache::Ptr EvalCache::find(const MultiIndex& idx) const {
    std::lock_guard<std::mutex> lock(mtx_);
    auto it = entries_.find(idx);
    if (it == entries_.end()) return nullptr;
    if (it->second.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return nullptr;
    return it->second.get();
}

long EvalCache::total_solves() const {
    std::lock_guard<std::mutex> lock(mtx_);
    long total = 0;
    for (const auto& [idx, fut] : entries_)
        if (fut.wait_for(std::chrono::seconds(0)) == std::future_status::ready)
            total += fut.get()->solves;
    return total;
}

long EvalCache::size() const {
    std::lock_guard<std::mutex> lock(mtx_);
    return long(entries_.size());
}

std::unordered_map<MultiIndex, int, MultiIndexHash> combination_coefficients(
    const IndexSet& I, int ambient_dims) {
    if (I.empty()) throw std::invalid_argument("combination_coefficients: empty index set");

    int max_coord = 0;
    for (const auto& idx : I) max_coord = std::max(max_coord, idx.effective_truncation());
    if (ambient_dims < 1 + max_coord)
        throw std::invalid_argument("combination_coefficients: ambient_dims too small");

    std::unordered_map<MultiIndex, int, MultiIndexHash> coeffs;
    for (const auto& idx : I) {
        // Only coordinates whose forward neighbor is in I can contribute; for
        // downward-closed I, chi(l+z) = 0 for any z touching other coords.
        std::vector<int> fwd;
        for (int coord = 0; coord <= max_coord; ++coord)
            if (I.count(idx.bumped(coord, +1))) fwd.push_back(coord);

        // DFS over subsets of fwd with pruning: supersets of an absent corner
        // are absent too (downward closedness).
        int alpha = 0;
        std::function<void(size_t, const MultiIndex&, int)> visit = [&](size_t pos,
                                                                        const MultiIndex& corner,
                                                                        int sign) {
            alpha += sign;
            for (size_t j = pos; j < fwd.size(); ++j) {
                const MultiIndex next = corner.bumped(fwd[j], +1);
                if (I.count(next)) visit(j + 1, next, -sign);
            }
        };
        visit(0, idx, +1);
        coeffs.emplace(idx, alpha);
    }
    return coeffs;
}

namespace {

template <class Fn>
void parallel_for(long n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::thread> pool;
    const int workers = int(std::min<long>(threads, n));
    std::exception_ptr error;
    std::mutex error_mtx;
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mtx);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

CacheEntry evaluate_full_grid(const MultiIndex& idx, const Problem& problem) {
    if (!problem.kl) throw std::invalid_argument("full_grid_eval: missing KL expansion");
    if (idx.effective_truncation() > problem.kl->num_terms())
        throw std::invalid_argument("full_grid_eval: index needs more KL terms than available");

    const auto t0 = std::chrono::steady_clock::now();
    const MeshLevel mesh{idx.lx, problem.mesh_offset};
    const KLExpansion& kl = *problem.kl;

    // Materialize the node list first so the PDE solves can fan out while the
    // weighted accumulation stays in a fixed order.
    std::vector<std::vector<double>> ys;
    std::vector<double> ws;
    tensor_nodes(idx.ly, [&](const std::vector<double>& y, double w) {
        ys.push_back(y);
        ws.push_back(w);
    });

    std::vector<QoiValue> results(ys.size());
    parallel_for(long(ys.size()), problem.threads, [&](long i) {
        const Eigen::VectorXd field = combined_log_field(kl, ys[i]);
        const auto a_eval = [&](double x, double y) {
            return std::exp(bilinear(field, kl.grid_n, x, y));
        };
        GridFunction u;
        try {
            u = assemble_solve(mesh, a_eval, problem.f, problem.solver_tol);
        } catch (const std::exception& e) {
            std::string node = "(";
            for (double v : ys[i]) node += std::to_string(v) + ",";
            node += ")";
            throw std::runtime_error(std::string(e.what()) + " at quadrature node " + node);
        }
        results[i] = apply_qoi(problem.qoi, u);
    });

    CacheEntry entry;
    entry.value = problem.qoi.scalar_valued() ? QoiValue{0.0} : QoiValue{zero_function(mesh)};
    for (size_t i = 0; i < results.size(); ++i) qoi_axpy(entry.value, ws[i], results[i]);
    entry.solves = long(ys.size());
    entry.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return entry;
}

}  // namespace

QoiValue full_grid_eval(const MultiIndex& idx, const Problem& problem, EvalCache& cache) {
    return cache.lookup_or_compute(idx, [&] { return evaluate_full_grid(idx, problem); })->value;
}

QoiValue increment(const MultiIndex& idx, const Problem& problem, EvalCache& cache) {
    std::vector<int> positive;
    for (int coord = 0; coord <= idx.effective_truncation(); ++coord)
        if (idx.level(coord) >= 1) positive.push_back(coord);

    QoiValue acc = problem.qoi.scalar_valued()
                       ? QoiValue{0.0}
                       : QoiValue{zero_function({idx.lx, problem.mesh_offset})};
    const size_t corners = size_t(1) << positive.size();
    for (size_t bits = 0; bits < corners; ++bits) {
        MultiIndex corner = idx;
        int sign = 1;
        for (size_t j = 0; j < positive.size(); ++j)
            if (bits & (size_t(1) << j)) {
                corner = corner.bumped(positive[j], -1);
                sign = -sign;
            }
        qoi_axpy(acc, double(sign), full_grid_eval(corner, problem, cache));
    }
    return acc;
}

QoiValue combine(const IndexSet& I,
                 const std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs,
                 const Problem& problem, const EvalCache& cache) {
    if (I.empty()) throw std::invalid_argument("combine: empty index set");
    int max_level = 0;
    for (const auto& idx : I) max_level = std::max(max_level, idx.lx);

    // fixed summation order, so equal index sets combine to identical bits
    std::vector<MultiIndex> sorted(I.begin(), I.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return a.lex_less(b); });

    QoiValue acc = problem.qoi.scalar_valued()
                       ? QoiValue{0.0}
                       : QoiValue{zero_function({max_level, problem.mesh_offset})};
    for (const auto& idx : sorted) {
        const auto it = coeffs.find(idx);
        if (it == coeffs.end() || it->second == 0) continue;
        const auto entry = cache.find(idx);
        if (!entry) throw std::runtime_error("combine: missing cache entry for " + idx.str());
        qoi_axpy(acc, double(it->second), entry->value);
    }
    return acc;
}

std::string index_set_to_json(const IndexSet& I,
                              const std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs) {
    // deterministic order: lexicographic
    std::vector<MultiIndex> sorted(I.begin(), I.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const MultiIndex& a, const MultiIndex& b) { return a.lex_less(b); });
    nlohmann::json indices = nlohmann::json::array();
    nlohmann::json alphas = nlohmann::json::array();
    for (const auto& idx : sorted) {
        nlohmann::json arr = nlohmann::json::array();
        arr.push_back(idx.lx);
        for (int l : idx.ly) arr.push_back(l);
        indices.push_back(arr);
        const auto it = coeffs.find(idx);
        alphas.push_back(it == coeffs.end() ? 0 : it->second);
    }
    return nlohmann::json{{"indices", indices}, {"coefficients", alphas}}.dump(2);
}

void index_set_from_json(const std::string& text, IndexSet& I,
                         std::unordered_map<MultiIndex, int, MultiIndexHash>& coeffs) {
    const auto j = nlohmann::json::parse(text);
    I.clear();
    coeffs.clear();
    const auto& indices = j.at("indices");
    const auto& alphas = j.at("coefficients");
    for (size_t i = 0; i < indices.size(); ++i) {
        const auto& arr = indices[i];
        MultiIndex idx{arr.at(0), std::vector<int>(arr.begin() + 1, arr.end())};
        coeffs[idx] = alphas.at(i);
        I.insert(std::move(idx));
    }
}

}  // namespace uqct
