#pragma once

#include "ebvi/dataset.hpp"
#include "ebvi/types.hpp"

namespace ebvi::glm {

/// log(1 + exp(t)) without overflow.
double log1pexp(double t) noexcept;

/// 1 / (1 + exp(-t)).
double sigmoid(double t) noexcept;

/// Number of coefficients of model s: |S| plus one when the data carries an intercept.
int parameter_count(const Dataset& d, const Configuration& s) noexcept;

/// X_S, with a leading column of ones when the data carries an intercept.
Matrix design_matrix(const Dataset& d, const Configuration& s);

/// Linear predictor X_S beta_s. `beta_s` has parameter_count() entries, intercept first.
Vector linear_predictor(const Dataset& d, const Configuration& s, const Vector& beta_s);

double log_likelihood(const Dataset& d, const Configuration& s, const Vector& beta_s);

/// Score X_S'(y - mu).
Vector score(const Dataset& d, const Configuration& s, const Vector& beta_s);

/// Diagonal of W: e^t / (1+e^t)^2 with t clamped to [-30, 30].
Vector logistic_weights(const Dataset& d, const Configuration& s, const Vector& beta_s);

/// X_S' W X_S, the negative Hessian of the log-likelihood.
Matrix fisher_information(const Dataset& d, const Configuration& s, const Vector& beta_s);

struct NewtonControl {
    double tol = 1e-8;
    int max_iter = 50;
    double ridge = 1e-6;
    double eta_limit = 30.0;
    double cond_limit = 1e10;
};

struct FitResult {
    Vector beta_hat;
    double loglik_at_mle = 0.0;
    Matrix fisher_info;
    bool converged = false;
    bool separated = false;
    int newton_iters = 0;
};

/// Damped Newton ascent on the log-likelihood of model s, started at zero.
///
/// A fit that reaches |linear predictor| > eta_limit or an ill-conditioned
/// Hessian is treated as (quasi-)separated: a ridge is added to the Newton
/// system and `separated` is set. Such fits report converged=false unless
/// the score tolerance is met with a vanishing Newton step.
///
/// Throws ModelTooLarge when the parameter count reaches n and
/// NumericalFailure on a non-finite iterate.
FitResult fit_mle(const Dataset& d, const Configuration& s, const NewtonControl& ctl = {});

}  // namespace ebvi::glm
