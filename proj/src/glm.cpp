#include "ebvi/glm.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace ebvi::glm {

double log1pexp(double t) noexcept {
    return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

double sigmoid(double t) noexcept {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

int parameter_count(const Dataset& d, const Configuration& s) noexcept {
    return s.size() + (d.intercept ? 1 : 0);
}

Matrix design_matrix(const Dataset& d, const Configuration& s) {
    const int offset = d.intercept ? 1 : 0;
    Matrix xs(d.n(), s.size() + offset);
    if (d.intercept) xs.col(0).setOnes();
    int c = offset;
    for (int j : s.indices()) xs.col(c++) = d.x.col(j);
    return xs;
}

Vector linear_predictor(const Dataset& d, const Configuration& s, const Vector& beta_s) {
    if (beta_s.size() != parameter_count(d, s))
        throw ShapeMismatch("coefficient vector does not match the configuration");
    Vector eta = Vector::Zero(d.n());
    int c = 0;
    if (d.intercept) eta.setConstant(beta_s[c++]);
    for (int j : s.indices()) eta.noalias() += beta_s[c++] * d.x.col(j);
    return eta;
}

double log_likelihood(const Dataset& d, const Configuration& s, const Vector& beta_s) {
    const Vector eta = linear_predictor(d, s, beta_s);
    double ll = 0.0;
    for (int i = 0; i < d.n(); ++i) ll += d.y[i] * eta[i] - log1pexp(eta[i]);
    return ll;
}

Vector score(const Dataset& d, const Configuration& s, const Vector& beta_s) {
    const Vector eta = linear_predictor(d, s, beta_s);
    Vector resid(d.n());
    for (int i = 0; i < d.n(); ++i) resid[i] = d.y[i] - sigmoid(eta[i]);
    return design_matrix(d, s).transpose() * resid;
}

namespace {

constexpr double kEtaClamp = 30.0;

double weight_at(double t) noexcept {
    const double e = std::exp(-std::abs(std::clamp(t, -kEtaClamp, kEtaClamp)));
    return e / ((1.0 + e) * (1.0 + e));
}

Vector weights_from(const Vector& eta) {
    Vector w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) w[i] = weight_at(eta[i]);
    return w;
}

double loglik_from(const Vector& y, const Vector& eta) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
    return ll;
}

}  // namespace

Vector logistic_weights(const Dataset& d, const Configuration& s, const Vector& beta_s) {
    return weights_from(linear_predictor(d, s, beta_s));
}

Matrix fisher_information(const Dataset& d, const Configuration& s, const Vector& beta_s) {
    const Matrix xs = design_matrix(d, s);
    const Vector w = logistic_weights(d, s, beta_s);
    Matrix info = xs.transpose() * w.asDiagonal() * xs;
    return info.selfadjointView<Eigen::Lower>();
}

FitResult fit_mle(const Dataset& d, const Configuration& s, const NewtonControl& ctl) {
    const int k = parameter_count(d, s);
    const int n = d.n();
    FitResult out;
    if (k == 0) {
        out.beta_hat = Vector(0);
        out.loglik_at_mle = -n * std::log(2.0);
        out.fisher_info = Matrix(0, 0);
        out.converged = true;
        return out;
    }
    if (k >= n)
        throw ModelTooLarge("model with " + std::to_string(k) + " coefficients needs more than " +
                            std::to_string(n) + " observations");

    const Matrix xs = design_matrix(d, s);
    Vector beta = Vector::Zero(k);
    Vector eta = Vector::Zero(n);
    double ll = loglik_from(d.y, eta);
    bool converged = false;
    int iter = 0;

    for (; iter < ctl.max_iter; ++iter) {
        Vector resid(n);
        for (int i = 0; i < n; ++i) resid[i] = d.y[i] - sigmoid(eta[i]);
        const Vector grad = xs.transpose() * resid;
        const Vector w = weights_from(eta);
        Matrix hess = xs.transpose() * w.asDiagonal() * xs;

        Eigen::LDLT<Matrix> ldlt(hess);
        const Vector diag = ldlt.vectorD().cwiseAbs();
        const double cond = diag.minCoeff() > 0.0 ? diag.maxCoeff() / diag.minCoeff()
                                                  : std::numeric_limits<double>::infinity();
        const bool unstable = eta.cwiseAbs().maxCoeff() > ctl.eta_limit || cond > ctl.cond_limit ||
                              ldlt.info() != Eigen::Success;
        if (unstable) {
            out.separated = true;
            hess.diagonal().array() += ctl.ridge;
            ldlt.compute(hess);
        }
        const Vector step = ldlt.solve(grad);
        if (!step.allFinite()) throw NumericalFailure("Newton system produced a non-finite step");

        // A stationary point needs both a small score and a vanishing Newton
        // step; under separation the score decays while the step does not.
        const double step_tol = std::sqrt(ctl.tol) * (1.0 + beta.cwiseAbs().maxCoeff());
        if (grad.cwiseAbs().maxCoeff() < ctl.tol && step.cwiseAbs().maxCoeff() < step_tol) {
            converged = true;
            break;
        }

        // Once the predicted gain is below rounding noise in ll, comparisons
        // are meaningless; take the full step.
        const bool in_noise = 0.5 * grad.dot(step) <= 1e-12 * (1.0 + std::abs(ll));
        double t = 1.0;
        Vector trial_beta;
        Vector trial_eta;
        double trial_ll = -std::numeric_limits<double>::infinity();
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            if (in_noise) {
                trial_beta = beta + step;
                trial_eta = xs * trial_beta;
                trial_ll = std::max(loglik_from(d.y, trial_eta), ll);
                break;
            }
            trial_beta = beta + t * step;
            trial_eta = xs * trial_beta;
            trial_ll = loglik_from(d.y, trial_eta);
            if (trial_ll >= ll) break;
        }
        if (!trial_beta.allFinite() || !std::isfinite(trial_ll))
            throw NumericalFailure("Newton iterate became non-finite");
        if (trial_ll < ll) break;  // no ascent possible at machine precision
        beta = std::move(trial_beta);
        eta = std::move(trial_eta);
        ll = trial_ll;
    }

    out.beta_hat = beta;
    out.loglik_at_mle = ll;
    Matrix info = xs.transpose() * weights_from(eta).asDiagonal() * xs;
    out.fisher_info = info.selfadjointView<Eigen::Lower>();
    out.converged = converged;
    out.newton_iters = iter;
    return out;
}

}  // namespace ebvi::glm
