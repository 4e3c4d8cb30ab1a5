#pragma once

#include <vector>

#include "ebvi/dataset.hpp"
#include "ebvi/types.hpp"

namespace ebvi::pilot {

struct PilotEstimate {
    Vector beta_tilde;
    double intercept = 0.0;  // unpenalized; zero unless the data carries an intercept
    double lambda_used = 0.0;
    bool jitter_applied = false;
    int excluded_constant_columns = 0;
    bool refitted = false;  // relaxed fit replaced the shrunken coefficients
};

struct L1Control {
    int max_outer = 100;
    int max_inner = 2000;
    double tol = 1e-9;
    double min_weight = 1e-5;
};

/// Soft-thresholded coordinate Newton step.
///
/// With gradient g and curvature h of the smooth part at the current value
/// `beta`, the unpenalized target is z = beta - g / h; the result is
/// sign(z) * max(|z| - lambda / h, 0).
double soft_threshold_update(double beta, double gradient, double curvature, double lambda);

/// Mean negative log-likelihood plus lambda * ||beta||_1.
double penalized_objective(const Dataset& d, const Vector& beta, double intercept, double lambda);

struct PathFit {
    std::vector<Vector> betas;
    std::vector<double> intercepts;
    /// Penalized objective after each outer proximal-Newton iteration, per lambda.
    std::vector<std::vector<double>> objective_trace;
};

/// Proximal-Newton (IRLS + coordinate soft-thresholding) fits along a
/// decreasing lambda grid with warm starts. Rows restricted to `rows` when non-empty.
PathFit fit_l1_path(const Dataset& d, const std::vector<double>& lambdas, const L1Control& ctl = {},
                    const std::vector<int>& rows = {});

/// Smallest lambda with an all-zero solution.
double lambda_max(const Dataset& d);

/// `count` log-spaced values from lambda_max down to ratio * lambda_max.
std::vector<double> default_lambda_grid(const Dataset& d, int count = 50, double ratio = 0.01);

/// Random balanced fold labels in [0, folds).
std::vector<int> assign_folds(int n, int folds, Rng& rng);

/// Lasso-logistic pilot with lambda chosen by K-fold cross-validated deviance
/// (ties go to the larger lambda). No jitter is applied here.
PilotEstimate fit_l1_logistic(const Dataset& d, const std::vector<double>& lambda_grid, int folds,
                              Rng& rng, const L1Control& ctl = {});

/// Replaces exact zeros by Unif(-scale, scale) draws that are never zero.
struct RelaxedControl {
    double max_support_fraction = 0.1;  // refit only supports up to this share of n
};

/// Relaxed lasso. Every path support also gets an unpenalized refit, and
/// cross-validated deviance picks both lambda and lasso-versus-refit.
/// Supports that are too large or separate on refit keep the lasso fit.
/// After a refit, coordinates outside its support take the lasso values at
/// the deviance-optimal lambda.
PilotEstimate fit_relaxed_l1_logistic(const Dataset& d, const std::vector<double>& lambda_grid,
                                      int folds, Rng& rng, const RelaxedControl& rc = {},
                                      const L1Control& ctl = {});

PilotEstimate jitter_zeros(PilotEstimate est, double scale, Rng& rng);

}  // namespace ebvi::pilot
