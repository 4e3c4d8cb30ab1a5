#pragma once

#include <optional>

#include "ebvi/types.hpp"

namespace ebvi::metrics {

struct ConfusionCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;
    int tn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(const Configuration& s_hat, const Configuration& s_star, int p);

// Undefined rates (zero denominator) come back empty.
std::optional<double> tpr(const ConfusionCounts& c);
std::optional<double> tnr(const ConfusionCounts& c);
// No discoveries means no false ones: 0.
double fdr(const ConfusionCounts& c);
// Any zero factor in the denominator gives 0.
double mcc(const ConfusionCounts& c);

/// D = sqrt(mean over runs of ||pi - phi||^2 / p). Rows are runs.
double d_distance(const Matrix& phi_runs, const Matrix& pi_runs);

}  // namespace ebvi::metrics
