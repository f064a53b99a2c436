// Command line front end: kl / run / reference / report subcommands driven
// by a JSON config file. All outputs are plain CSV, JSON or the binary grid
// dump; exit code 0 on success, nonzero with an error JSON on stderr.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "uqct/adaptive.hpp"
#include "uqct/combination.hpp"
#include "uqct/kl.hpp"
#include "uqct/run_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uqct;

namespace {

struct Config {
    CovarianceSpec cov;
    double mean = 0.0;
    int kl_grid = 129;
    int kl_terms = 512;
    std::string kl_cache;

    Problem problem;
    AdaptiveConfig adaptive;
    std::string output_dir = ".";
    json reference;  // {"path": ...} or {"recipe": {...}}, may be null
};

CovarianceSpec parse_covariance(const json& f) {
    CovarianceSpec spec;
    const std::string kind = f.value("kind", "matern");
    if (kind == "matern")
        spec.kind = CovarianceSpec::Kind::matern;
    else if (kind == "gaussian-limit" || kind == "gaussian_limit")
        spec.kind = CovarianceSpec::Kind::gaussian_limit;
    else
        throw std::runtime_error("unknown covariance kind: " + kind);
    spec.nu = f.value("nu", 2.5);
    spec.xi = f.value("xi", 0.2);
    spec.sigma2 = f.value("sigma2", 1.0);
    const std::string dist = f.value("distance", "euclidean");
    if (dist == "euclidean")
        spec.distance = CovarianceSpec::Distance::euclidean;
    else if (dist == "one-norm" || dist == "one_norm")
        spec.distance = CovarianceSpec::Distance::one_norm;
    else
        throw std::runtime_error("unknown distance: " + dist);
    spec.validate();
    return spec;
}

Config parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    json j;
    is >> j;

    Config cfg;
    const json& f = j.at("field");
    cfg.cov = parse_covariance(f);
    cfg.mean = f.value("mean", 0.0);
    cfg.kl_grid = f.value("kl_grid", 129);
    cfg.kl_terms = f.value("kl_terms", 512);
    cfg.kl_cache = f.value("kl_cache", std::string("kl_cache.bin"));
    if (cfg.kl_grid < 2 || cfg.kl_terms < 1)
        throw std::runtime_error("field.kl_grid and field.kl_terms must be positive");

    if (j.contains("fem")) {
        cfg.problem.mesh_offset = j["fem"].value("mesh_offset", 2);
        cfg.problem.solver_tol = j["fem"].value("solver_tolerance", 1e-10);
        if (cfg.problem.solver_tol <= 0)
            throw std::runtime_error("fem.solver_tolerance must be positive");
    }
    if (j.contains("qoi")) {
        const std::string kind = j["qoi"].value("kind", "first_moment");
        if (kind == "first_moment")
            cfg.problem.qoi.kind = QoISpec::Kind::first_moment;
        else if (kind == "second_moment")
            cfg.problem.qoi.kind = QoISpec::Kind::second_moment;
        else if (kind == "linear_functional") {
            cfg.problem.qoi.kind = QoISpec::Kind::linear_functional;
            cfg.problem.qoi.weight = [](double, double) { return 1.0; };
        } else
            throw std::runtime_error("unknown qoi kind: " + kind);
    }
    if (j.contains("adaptive")) {
        const json& a = j["adaptive"];
        cfg.adaptive.buffer = a.value("buffer", 5);
        const std::string cm = a.value("cost_model", "highest_active");
        cfg.adaptive.cost_model.trunc_mode = cm == "count_active"
                                                 ? CostModel::TruncMode::count_active
                                                 : CostModel::TruncMode::highest_active;
        const std::string st = a.value("stopping", "global_profit");
        if (st == "global_profit")
            cfg.adaptive.stopping.mode = StoppingRule::Mode::global_profit;
        else if (st == "global_error")
            cfg.adaptive.stopping.mode = StoppingRule::Mode::global_error;
        else if (st == "work_budget")
            cfg.adaptive.stopping.mode = StoppingRule::Mode::work_budget;
        else if (st == "successive_diff")
            cfg.adaptive.stopping.mode = StoppingRule::Mode::successive_diff;
        else
            throw std::runtime_error("unknown stopping rule: " + st);
        cfg.adaptive.stopping.epsilon = a.value("epsilon", 1e-6);
        cfg.adaptive.stopping.work_budget = a.value("work_budget", 0.0);
        cfg.adaptive.stopping.zeta = a.value("zeta", 3);
        cfg.adaptive.stopping.max_iterations = a.value("max_iterations", 5000);
        cfg.adaptive.max_spatial_level = a.value("max_spatial_level", -1);
        cfg.adaptive.checkpoint_every = a.value("checkpoint_every", 0);
        if (cfg.adaptive.stopping.epsilon < 0)
            throw std::runtime_error("adaptive.epsilon must be nonnegative");
    }
    cfg.adaptive.cost_model.mesh_offset = cfg.problem.mesh_offset;
    cfg.problem.threads = j.value("threads", 1);
    cfg.output_dir = j.value("output_dir", std::string("."));
    if (j.contains("reference")) cfg.reference = j["reference"];
    return cfg;
}

std::shared_ptr<KLExpansion> obtain_kl(const Config& cfg, bool* cache_hit = nullptr) {
    auto kl = std::make_shared<KLExpansion>();
    const std::string path = (fs::path(cfg.output_dir) / cfg.kl_cache).string();
    if (load_kl(*kl, cfg.cov, cfg.kl_grid, cfg.kl_terms, cfg.mean, path)) {
        if (cache_hit) *cache_hit = true;
        return kl;
    }
    if (cache_hit) *cache_hit = false;
    *kl = compute_kl(cfg.cov, cfg.kl_grid, cfg.kl_terms, cfg.mean);
    fs::create_directories(cfg.output_dir);
    save_kl(*kl, cfg.cov, path);
    return kl;
}

void write_lambda_csv(const KLExpansion& kl, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path);
    std::fprintf(f, "k,lambda\n");
    for (int k = 0; k < kl.num_terms(); ++k)
        std::fprintf(f, "%d,%.17g\n", k + 1, kl.lambdas[k]);
    std::fclose(f);
}

void write_qoi_value(const QoiValue& v, const fs::path& dir, const std::string& stem) {
    if (v.is_scalar()) {
        std::FILE* f = std::fopen((dir / (stem + ".json")).string().c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + stem);
        std::fprintf(f, "{\"value\": %.17g}\n", v.scalar());
        std::fclose(f);
    } else {
        write_binary(v.field(), (dir / (stem + ".bin")).string());
        write_csv(v.field(), (dir / (stem + ".csv")).string());
    }
}

QoiValue read_qoi_value(const Config& cfg, const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open reference " + path);
        json j;
        is >> j;
        return QoiValue{double(j.at("value"))};
    }
    (void)cfg;
    return QoiValue{read_binary(path)};
}

QoiValue compute_reference(const Config& cfg, const Problem& problem, EvalCache& cache) {
    const json& recipe = cfg.reference.at("recipe");
    const std::string type = recipe.value("type", "adaptive");
    if (type == "box") {
        // box recipes telescope to their corner evaluation
        const int lx = recipe.at("spatial_level");
        const int lq = recipe.at("quadrature_level");
        const int dims = recipe.at("dimensions");
        MultiIndex corner(lx, std::vector<int>(size_t(dims), lq));
        return full_grid_eval(corner, problem, cache);
    }
    if (type == "adaptive") {
        AdaptiveConfig ref = cfg.adaptive;
        ref.reference.reset();
        ref.checkpoint_every = 0;
        ref.stopping.epsilon = recipe.value("epsilon", cfg.adaptive.stopping.epsilon / 10);
        ref.stopping.max_iterations =
            recipe.value("max_iterations", 2 * cfg.adaptive.stopping.max_iterations);
        ref.max_spatial_level = recipe.value("max_spatial_level", cfg.adaptive.max_spatial_level);
        return run_adaptive(problem, ref, cache).combined;
    }
    throw std::runtime_error("unknown reference recipe type: " + type);
}

std::optional<QoiValue> configured_reference(const Config& cfg, const Problem& problem,
                                             EvalCache& cache) {
    if (cfg.reference.is_null()) return std::nullopt;
    if (cfg.reference.contains("path")) {
        const std::string path = cfg.reference.at("path");
        if (fs::exists(path)) return read_qoi_value(cfg, path);
        if (!cfg.reference.contains("recipe"))
            throw std::runtime_error("reference path missing and no recipe given: " + path);
    }
    QoiValue ref = compute_reference(cfg, problem, cache);
    if (cfg.reference.contains("path")) {
        const fs::path p(cfg.reference.at("path").get<std::string>());
        fs::create_directories(p.parent_path().empty() ? "." : p.parent_path().string());
        write_qoi_value(ref, p.parent_path().empty() ? "." : p.parent_path().string(),
                        p.stem().string());
    }
    return ref;
}

int cmd_kl(const std::string& config_path) {
    Config cfg = parse_config(config_path);
    fs::create_directories(cfg.output_dir);
    bool hit = false;
    auto kl = obtain_kl(cfg, &hit);
    std::printf("kl: %s, %d terms on a %dx%d grid\n", hit ? "cache hit" : "computed",
                kl->num_terms(), cfg.kl_grid, cfg.kl_grid);
    write_lambda_csv(*kl, (fs::path(cfg.output_dir) / "lambda.csv").string());
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& resume_path, int threads) {
    Config cfg = parse_config(config_path);
    if (threads > 0) cfg.problem.threads = threads;
    fs::create_directories(cfg.output_dir);
    cfg.problem.kl = obtain_kl(cfg);

    EvalCache cache;
    cfg.adaptive.reference = configured_reference(cfg, cfg.problem, cache);
    if (cfg.adaptive.checkpoint_every > 0 && cfg.adaptive.checkpoint_path.empty())
        cfg.adaptive.checkpoint_path = (fs::path(cfg.output_dir) / "checkpoint.json").string();

    AdaptiveResult res = resume_path.empty()
                             ? run_adaptive(cfg.problem, cfg.adaptive, cache)
                             : resume_adaptive(cfg.problem, cfg.adaptive, cache, resume_path);

    const fs::path dir(cfg.output_dir);
    write_qoi_value(res.combined, dir, "solution");
    records_to_csv(res.records, (dir / "records.csv").string());
    std::ofstream os(dir / "index_set.json");
    os << index_set_to_json(res.index_set, res.coefficients);
    os.close();

    std::printf("run: %d iterations, %ld solves, cumulative cost %.17g\n",
                int(res.records.size()), cache.total_solves(), res.state.cum_cost);
    return 0;
}

int cmd_reference(const std::string& config_path, int threads) {
    Config cfg = parse_config(config_path);
    if (threads > 0) cfg.problem.threads = threads;
    if (cfg.reference.is_null() || !cfg.reference.contains("recipe"))
        throw std::runtime_error("config has no reference recipe");
    fs::create_directories(cfg.output_dir);
    cfg.problem.kl = obtain_kl(cfg);

    EvalCache cache;
    QoiValue ref = compute_reference(cfg, cfg.problem, cache);
    write_qoi_value(ref, cfg.output_dir, "reference");
    std::printf("reference: %ld solves\n", cache.total_solves());
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir, int tail_lo,
               int tail_hi) {
    fs::create_directories(out_dir);
    std::FILE* slopes = std::fopen((fs::path(out_dir) / "slopes.csv").string().c_str(), "w");
    if (!slopes) throw std::runtime_error("cannot open slopes.csv");
    std::fprintf(slopes, "run,slope,points,window_lo,window_hi\n");

    std::FILE* act = std::fopen((fs::path(out_dir) / "activation.csv").string().c_str(), "w");
    std::fprintf(act, "run,iteration,activated_dims\n");

    for (const std::string& dir : run_dirs) {
        const std::string name = fs::path(dir).filename().string();
        auto records = records_from_csv((fs::path(dir) / "records.csv").string());
        if (records.empty()) throw std::runtime_error("empty records in " + dir);

        const int hi = tail_hi > 0 ? tail_hi : records.back().iteration;
        SlopeFit fit = fit_error_cost_slope(records, tail_lo, hi);
        std::fprintf(slopes, "%s,%.17g,%d,%d,%d\n", name.c_str(), fit.slope, fit.points,
                     fit.it_lo, fit.it_hi);

        std::FILE* f =
            std::fopen((fs::path(out_dir) / (name + "_series.csv")).string().c_str(), "w");
        std::fprintf(f,
                     "iteration,cum_cost,l2_error,max_spatial,max_quadrature,max_truncation,"
                     "activated_dims\n");
        DirectionSeries ds = direction_series(records);
        for (size_t i = 0; i < records.size(); ++i) {
            std::fprintf(f, "%d,%.17g,", records[i].iteration, records[i].cum_cost);
            if (records[i].l2_error)
                std::fprintf(f, "%.17g", *records[i].l2_error);
            std::fprintf(f, ",%d,%d,%d,%d\n", ds.max_spatial[i], ds.max_quadrature[i],
                         ds.max_truncation[i], ds.activated_dims[i]);
            std::fprintf(act, "%s,%d,%d\n", name.c_str(), records[i].iteration,
                         ds.activated_dims[i]);
        }
        std::fclose(f);

        const fs::path iset = fs::path(dir) / "index_set.json";
        if (fs::exists(iset)) {
            std::ifstream is(iset);
            std::string text((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
            IndexSet I;
            std::unordered_map<MultiIndex, int, MultiIndexHash> coeffs;
            index_set_from_json(text, I, coeffs);
            std::vector<int> levels = per_dimension_max_level(I);
            std::FILE* g = std::fopen(
                (fs::path(out_dir) / (name + "_dimension_levels.csv")).string().c_str(), "w");
            std::fprintf(g, "dimension,max_level\n");
            for (size_t k = 0; k < levels.size(); ++k)
                std::fprintf(g, "%zu,%d\n", k + 1, levels[k]);
            std::fclose(g);
        }
    }
    std::fclose(slopes);
    std::fclose(act);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive sparse-grid combination solver for lognormal diffusion"};
    app.require_subcommand(1);

    std::string config_path, resume_path, out_dir = "report";
    std::vector<std::string> run_dirs;
    int tail_lo = 50, tail_hi = 0;
    int threads = 0;
    app.add_option("--threads", threads, "worker thread cap (overrides config)");

    CLI::App* kl = app.add_subcommand("kl", "compute and cache the field expansion");
    kl->add_option("--config", config_path, "JSON config file")->required();

    CLI::App* run = app.add_subcommand("run", "adaptive study");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--resume", resume_path, "checkpoint file to resume from");

    CLI::App* ref = app.add_subcommand("reference", "compute the reference solution");
    ref->add_option("--config", config_path, "JSON config file")->required();

    CLI::App* rep = app.add_subcommand("report", "post-process run directories");
    rep->add_option("--run", run_dirs, "run output directories")->required();
    rep->add_option("--out", out_dir, "report output directory");
    rep->add_option("--tail-lo", tail_lo, "slope window lower iteration");
    rep->add_option("--tail-hi", tail_hi, "slope window upper iteration (0 = last)");

    CLI11_PARSE(app, argc, argv);

    const std::string cmd = app.get_subcommands().front()->get_name();
    try {
        if (cmd == "kl") return cmd_kl(config_path);
        if (cmd == "run") return cmd_run(config_path, resume_path, threads);
        if (cmd == "reference") return cmd_reference(config_path, threads);
        return cmd_report(run_dirs, out_dir, tail_lo, tail_hi);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}, {"command", cmd}};
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
