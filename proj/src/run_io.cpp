#include "uqct/run_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uqct {

void records_to_csv(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("records_to_csv: cannot open " + path);
    os << "iteration,index,E,c,eta,eta_global,cum_cost,solves,l2_error,wall_ms\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,", r.error_est, r.cost,
                      r.eta, r.eta_global, r.cum_cost);
        os << r.iteration << ",\"" << r.selected.str() << "\"," << buf << r.solves << ",";
        if (r.l2_error) {
            std::snprintf(buf, sizeof buf, "%.17g", *r.l2_error);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", r.wall_ms);
        os << buf;
    }
}

std::vector<RunRecord> records_from_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("records_from_csv: cannot open " + path);
    std::string line;
    std::getline(is, line);  // header
    std::vector<RunRecord> records;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        // iteration,"[lx,l1,...]",E,c,eta,eta_global,cum_cost,solves,l2_error,wall_ms
        const size_t q1 = line.find('"');
        const size_t q2 = line.find('"', q1 + 1);
        if (q1 == std::string::npos || q2 == std::string::npos)
            throw std::runtime_error("records_from_csv: malformed row: " + line);
        RunRecord r;
        r.iteration = std::stoi(line.substr(0, q1 - 1));
        {
            std::vector<int> levels;
            std::stringstream ss(line.substr(q1 + 2, q2 - q1 - 3));  // strip [ ]
            std::string tok;
            while (std::getline(ss, tok, ',')) levels.push_back(std::stoi(tok));
            r.selected = MultiIndex{levels.at(0), {levels.begin() + 1, levels.end()}};
        }
        std::stringstream rest(line.substr(q2 + 2));
        std::string tok;
        auto next = [&] {
            if (!std::getline(rest, tok, ',')) throw std::runtime_error("short row: " + line);
            return tok;
        };
        r.error_est = std::stod(next());
        r.cost = std::stod(next());
        r.eta = std::stod(next());
        r.eta_global = std::stod(next());
        r.cum_cost = std::stod(next());
        r.solves = std::stol(next());
        const std::string err = next();
        if (!err.empty()) r.l2_error = std::stod(err);
        r.wall_ms = std::stod(next());
        records.push_back(r);
    }
    return records;
}

SlopeFit fit_error_cost_slope(const std::vector<RunRecord>& records, int it_lo, int it_hi) {
    SlopeFit fit{0.0, 0, it_lo, it_hi};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : records) {
        if (r.iteration < it_lo || r.iteration > it_hi) continue;
        if (!r.l2_error || *r.l2_error <= 0.0 || r.cum_cost <= 0.0) continue;
        const double x = std::log10(r.cum_cost);
        const double y = std::log10(*r.l2_error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        fit.points += 1;
    }
    if (fit.points < 2) throw std::runtime_error("fit_error_cost_slope: not enough points");
    const double denom = fit.points * sxx - sx * sx;
    fit.slope = (fit.points * sxy - sx * sy) / denom;
    return fit;
}

DirectionSeries direction_series(const std::vector<RunRecord>& records) {
    DirectionSeries s;
    int mx = 0, mq = 0, mt = 0;
    std::vector<bool> active_dim;
    for (const auto& r : records) {
        mx = std::max(mx, r.selected.lx);
        mt = std::max(mt, r.selected.effective_truncation());
        for (int k = 1; k <= r.selected.effective_truncation(); ++k) {
            mq = std::max(mq, r.selected.level(k));
            if (r.selected.level(k) >= 1) {
                if (k > int(active_dim.size())) active_dim.resize(size_t(k), false);
                active_dim[size_t(k) - 1] = true;
            }
        }
        s.max_spatial.push_back(mx);
        s.max_quadrature.push_back(mq);
        s.max_truncation.push_back(mt);
        int count = 0;
        for (bool b : active_dim) count += b ? 1 : 0;
        s.activated_dims.push_back(count);
    }
    return s;
}

std::vector<int> per_dimension_max_level(const IndexSet& I) {
    std::vector<int> levels;
    for (const auto& idx : I) {
        if (idx.effective_truncation() > int(levels.size()))
            levels.resize(size_t(idx.effective_truncation()), 0);
        for (int k = 1; k <= idx.effective_truncation(); ++k)
            levels[size_t(k) - 1] = std::max(levels[size_t(k) - 1], idx.level(k));
    }
    return levels;
}

}  // namespace uqct
