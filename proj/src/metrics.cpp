#include "ebvi/metrics.hpp"

#include <cmath>

namespace ebvi::metrics {

ConfusionCounts confusion(const Configuration& s_hat, const Configuration& s_star, int p) {
    ConfusionCounts c;
    const auto sel = s_hat.indicator(p);
    const auto truth = s_star.indicator(p);
    for (std::size_t j = 0; j < sel.size(); ++j) {
        if (sel[j] && truth[j])
            ++c.tp;
        else if (sel[j])
            ++c.fp;
        else if (truth[j])
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

std::optional<double> tpr(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) return std::nullopt;
    return static_cast<double>(c.tp) / (c.tp + c.fn);
}

std::optional<double> tnr(const ConfusionCounts& c) {
    if (c.tn + c.fp == 0) return std::nullopt;
    return static_cast<double>(c.tn) / (c.tn + c.fp);
}

double fdr(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) return 0.0;
    return static_cast<double>(c.fp) / (c.tp + c.fp);
}

double mcc(const ConfusionCounts& c) {
    const double tp = c.tp, fp = c.fp, fn = c.fn, tn = c.tn;
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double d_distance(const Matrix& phi_runs, const Matrix& pi_runs) {
    if (phi_runs.rows() != pi_runs.rows() || phi_runs.cols() != pi_runs.cols())
        throw ShapeMismatch("phi and inclusion matrices differ in shape");
    if (phi_runs.rows() < 1 || phi_runs.cols() < 1) throw ShapeMismatch("need at least one run");
    const double mean_sq = (pi_runs - phi_runs).rowwise().squaredNorm().mean();
    return std::sqrt(mean_sq / static_cast<double>(phi_runs.cols()));
}

}  // namespace ebvi::metrics
