#pragma once

#include <string>
#include <vector>

#include "uqct/adaptive.hpp"

namespace uqct {

// Per-iteration log as CSV. Header row, floats with 17 significant digits,
// wall-clock ms deliberately last so deterministic comparisons can drop it.
void records_to_csv(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> records_from_csv(const std::string& path);

// Least-squares slope of log10(error) vs log10(cum_cost) over records with
// iteration in [it_lo, it_hi] and a positive error column.
struct SlopeFit {
    double slope = 0.0;
    int points = 0;
    int it_lo = 0, it_hi = 0;
};
SlopeFit fit_error_cost_slope(const std::vector<RunRecord>& records, int it_lo, int it_hi);

// Report series derived from a trajectory (cumulative maxima after each
// iteration): spatial level, max quadrature level over all dims, effective
// truncation, and the count of activated dimensions.
struct DirectionSeries {
    std::vector<int> max_spatial;
    std::vector<int> max_quadrature;
    std::vector<int> max_truncation;
    std::vector<int> activated_dims;
};
DirectionSeries direction_series(const std::vector<RunRecord>& records);

// Max univariate quadrature level per parametric dimension over an index set.
std::vector<int> per_dimension_max_level(const IndexSet& I);

}  // namespace uqct
