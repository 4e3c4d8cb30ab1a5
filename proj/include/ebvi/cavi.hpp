#pragma once

#include <string>
#include <vector>

#include "ebvi/dataset.hpp"
#include "ebvi/posterior.hpp"
#include "ebvi/types.hpp"

namespace ebvi::cavi {

/// Independent-Bernoulli variational state over configurations.
struct VariationalState {
    Vector phi;    // inclusion probabilities, [0,1]^p
    Vector omega;  // log-odds of phi
    Vector eta;    // free bound parameters, >= 0, length n
    int sweep = 0;
};

struct CaviConfig {
    double epsilon = 1e-5;
    int max_iter = 100;
    Vector phi_init;  // empty means all 0.5
    double threshold = 0.5;

    void validate(int p) const;
};

/// Plug-in coefficients held fixed inside the updates. `offset` is an
/// intercept that enters every linear predictor with zero variance.
struct PlugIn {
    Vector beta;
    double offset = 0.0;
};

inline constexpr double kPhiClamp = 1e-12;

/// tanh(eta/2) / (4 eta), with its limit 1/8 below 1e-8.
double bound_curvature(double eta) noexcept;

/// Binary entropy in bits, evaluated on phi clamped to [1e-12, 1-1e-12].
double binary_entropy_bits(double z) noexcept;

/// log q_phi(S) with 0 log 0 = 0.
double log_q(const Vector& phi, const Configuration& s);

/// The quadratic lower bound g_n(S, beta; eta) on the logistic log-likelihood.
/// `beta` is a p-vector; only entries in s contribute to M_i.
double logistic_lower_bound(const Dataset& d, const Configuration& s, const Vector& beta,
                            const Vector& eta, double offset = 0.0);

/// Closed-form lower bound on -K(phi) at the state's (phi, eta).
double surrogate_objective(const VariationalState& state, const Dataset& d, const PlugIn& plug,
                           const HyperParams& h);

/// eta_i = sqrt(E_q M_i^2).
Vector update_eta(const Vector& phi, const Dataset& d, const PlugIn& plug);

/// E_q M_i = sum_j phi_j x_ij beta_j (+ offset).
Vector mean_predictor(const Vector& phi, const Dataset& d, const PlugIn& plug);

/// Per-run constants shared by all coordinate updates.
struct Workspace {
    Vector score0;     // alpha * beta_j * sum_i (y_i - 1/2) x_ij
    Vector curvature;  // bound_curvature(eta_i)
    Vector m;          // running E_q M_i
    double prior_term = 0.0;  // 1/2 log(1 + alpha gamma) - (a+1) log p - 1
    double alpha = 0.0;

    static Workspace prepare(const VariationalState& state, const Dataset& d, const PlugIn& plug,
                             const HyperParams& h);
    void refresh_curvature(const Vector& eta);
};

/// Closed-form maximizer of the surrogate in phi_j for fixed eta and phi_{-j}.
/// Updates state.omega[j], state.phi[j] and ws.m in place.
void update_coordinate(int j, VariationalState& state, const Dataset& d, const PlugIn& plug,
                       Workspace& ws);

enum class StopReason { Converged, MaxIter };
std::string to_string(StopReason r);

struct CaviResult {
    Vector phi_hat;
    Vector omega;
    Vector eta;
    std::vector<double> objective_trace;  // after each sweep's eta update
    int sweeps = 0;
    StopReason stopped = StopReason::MaxIter;
};

/// Cyclic coordinate ascent with an entropy-change stopping rule.
/// Throws NumericalFailure when the objective turns non-finite.
CaviResult run_cavi(const Dataset& d, const PlugIn& plug, const CaviConfig& cfg,
                    const HyperParams& h);

struct Selection {
    Configuration s_hat;
    bool refit_available = false;
    Vector beta_refit;  // |S| entries (intercept first when present) when available
};

/// S = { j : phi_j >= threshold } and its MLE refit.
Selection select_and_refit(const Vector& phi_hat, const Dataset& d, double threshold);

}  // namespace ebvi::cavi
