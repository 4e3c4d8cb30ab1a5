#include "ebvi/cavi.hpp"

#include <algorithm>
#include <cmath>

#include "ebvi/glm.hpp"

namespace ebvi::cavi {

namespace {

double xlogx(double v) noexcept { return v > 0.0 ? v * std::log(v) : 0.0; }

double clamp_phi(double v) noexcept { return std::clamp(v, kPhiClamp, 1.0 - kPhiClamp); }

double logit(double v) noexcept {
    const double c = clamp_phi(v);
    return std::log(c) - std::log1p(-c);
}

void check_plug(const Dataset& d, const PlugIn& plug) {
    if (plug.beta.size() != d.p()) throw ShapeMismatch("plug-in coefficients must have length p");
}

}  // namespace

void CaviConfig::validate(int p) const {
    if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
    if (max_iter < 1) throw InputError("max_iter must be at least 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw InputError("threshold must lie in (0, 1)");
    if (phi_init.size() != 0) {
        if (phi_init.size() != p) throw ShapeMismatch("phi_init must have length p");
        if ((phi_init.array() < 0.0).any() || (phi_init.array() > 1.0).any())
            throw InputError("phi_init entries must lie in [0, 1]");
    }
}

double bound_curvature(double eta) noexcept {
    if (eta < 1e-8) return 0.125;
    return std::tanh(0.5 * eta) / (4.0 * eta);
}

double binary_entropy_bits(double z) noexcept {
    const double c = clamp_phi(z);
    return -(c * std::log2(c) + (1.0 - c) * std::log2(1.0 - c));
}

double log_q(const Vector& phi, const Configuration& s) {
    double acc = 0.0;
    const auto bits = s.indicator(static_cast<int>(phi.size()));
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
        const double mass = bits[static_cast<std::size_t>(j)] ? phi[j] : 1.0 - phi[j];
        if (mass == 1.0) continue;
        acc += std::log(mass);
    }
    return acc;
}

double logistic_lower_bound(const Dataset& d, const Configuration& s, const Vector& beta,
                            const Vector& eta, double offset) {
    if (beta.size() != d.p()) throw ShapeMismatch("beta must have length p");
    if (eta.size() != d.n()) throw ShapeMismatch("eta must have length n");
    Vector m = Vector::Constant(d.n(), offset);
    for (int j : s.indices()) m.noalias() += beta[j] * d.x.col(j);
    double acc = 0.0;
    for (int i = 0; i < d.n(); ++i) {
        const double e = eta[i];
        acc += -glm::log1pexp(-e) - 0.5 * e + (d.y[i] - 0.5) * m[i] -
               bound_curvature(e) * (m[i] * m[i] - e * e);
    }
    return acc;
}

Vector mean_predictor(const Vector& phi, const Dataset& d, const PlugIn& plug) {
    check_plug(d, plug);
    Vector m = d.x * phi.cwiseProduct(plug.beta);
    m.array() += plug.offset;
    return m;
}

namespace {

// sum_j phi_j (1 - phi_j) x_ij^2 beta_j^2
Vector predictor_variance(const Vector& phi, const Dataset& d, const PlugIn& plug) {
    const Vector coef = (phi.array() * (1.0 - phi.array()) * plug.beta.array().square()).matrix();
    return d.x.cwiseAbs2() * coef;
}

}  // namespace

Vector update_eta(const Vector& phi, const Dataset& d, const PlugIn& plug) {
    const Vector mean = mean_predictor(phi, d, plug);
    const Vector var = predictor_variance(phi, d, plug);
    return (var.array() + mean.array().square()).sqrt().matrix();
}

double surrogate_objective(const VariationalState& state, const Dataset& d, const PlugIn& plug,
                           const HyperParams& h) {
    const double p = static_cast<double>(d.p());
    const double per_coord = 1.0 + (1.0 + h.a) * std::log(p) - 0.5 * std::log1p(h.alpha * h.gamma);
    const Vector& phi = state.phi;
    const Vector mean = mean_predictor(phi, d, plug);
    const Vector var = predictor_variance(phi, d, plug);

    double bound = 0.0;
    for (int i = 0; i < d.n(); ++i) {
        const double e = state.eta[i];
        bound += -glm::log1pexp(-e) - 0.5 * e + (d.y[i] - 0.5) * mean[i] -
                 bound_curvature(e) * (var[i] + mean[i] * mean[i] - e * e);
    }
    double entropy = 0.0;
    for (Eigen::Index j = 0; j < phi.size(); ++j) entropy -= xlogx(phi[j]) + xlogx(1.0 - phi[j]);
    return -per_coord * phi.sum() + h.alpha * bound + entropy;
}

Workspace Workspace::prepare(const VariationalState& state, const Dataset& d, const PlugIn& plug,
                             const HyperParams& h) {
    Workspace ws;
    const Vector centered = d.y.array() - 0.5;
    ws.alpha = h.alpha;
    ws.score0 = h.alpha * plug.beta.cwiseProduct(d.x.transpose() * centered);
    ws.refresh_curvature(state.eta);
    ws.m = mean_predictor(state.phi, d, plug);
    ws.prior_term = 0.5 * std::log1p(h.alpha * h.gamma) -
                    (h.a + 1.0) * std::log(static_cast<double>(d.p())) - 1.0;
    return ws;
}

void Workspace::refresh_curvature(const Vector& eta) {
    curvature.resize(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) curvature[i] = bound_curvature(eta[i]);
}

void update_coordinate(int j, VariationalState& state, const Dataset& d, const PlugIn& plug,
                       Workspace& ws) {
    const double b = plug.beta[j];
    const double phi_old = state.phi[j];
    const auto xj = d.x.col(j);
    // m_{-j} = m - phi_j b x_j, so sum lambda x (x b + 2 m_{-j})
    //   = b (1 - 2 phi_j) sum lambda x^2 + 2 sum lambda x m.
    double quad = 0.0;
    double cross = 0.0;
    for (int i = 0; i < d.n(); ++i) {
        const double lx = ws.curvature[i] * xj[i];
        quad += lx * xj[i];
        cross += lx * ws.m[i];
    }
    const double omega = ws.score0[j] - ws.alpha * b * (b * (1.0 - 2.0 * phi_old) * quad + 2.0 * cross) +
                         ws.prior_term;
    const double phi_new = glm::sigmoid(omega);
    state.omega[j] = omega;
    state.phi[j] = phi_new;
    const double delta = (phi_new - phi_old) * b;
    if (delta != 0.0) ws.m.noalias() += delta * xj;
}

std::string to_string(StopReason r) {
    return r == StopReason::Converged ? "converged" : "max_iter";
}

CaviResult run_cavi(const Dataset& d, const PlugIn& plug, const CaviConfig& cfg,
                    const HyperParams& h) {
    h.validate();
    check_plug(d, plug);
    cfg.validate(d.p());
    if ((plug.beta.array() == 0.0).any())
        throw InputError("plug-in coefficients must not contain exact zeros; jitter them first");

    VariationalState state;
    state.phi = cfg.phi_init.size() ? cfg.phi_init : Vector::Constant(d.p(), 0.5);
    state.omega.resize(d.p());
    for (int j = 0; j < d.p(); ++j) state.omega[j] = logit(state.phi[j]);
    state.eta = update_eta(state.phi, d, plug);
    Workspace ws = Workspace::prepare(state, d, plug, h);

    CaviResult out;
    Vector previous(d.p());
    for (int t = 1;; ++t) {
        previous = state.phi;
        for (int j = 0; j < d.p(); ++j) update_coordinate(j, state, d, plug, ws);
        state.eta = update_eta(state.phi, d, plug);
        ws.refresh_curvature(state.eta);
        ws.m = mean_predictor(state.phi, d, plug);
        state.sweep = t;

        const double value = surrogate_objective(state, d, plug, h);
        out.objective_trace.push_back(value);
        if (!std::isfinite(value))
            throw NumericalFailure("surrogate objective became non-finite at sweep " +
                                   std::to_string(t));

        double change = 0.0;
        for (int j = 0; j < d.p(); ++j)
            change = std::max(change, std::abs(binary_entropy_bits(state.phi[j]) -
                                               binary_entropy_bits(previous[j])));
        if (change <= cfg.epsilon) {
            out.stopped = StopReason::Converged;
            break;
        }
        if (t >= cfg.max_iter) {
            out.stopped = StopReason::MaxIter;
            break;
        }
    }
    out.phi_hat = state.phi;
    out.omega = state.omega;
    out.eta = state.eta;
    out.sweeps = state.sweep;
    return out;
}

Selection select_and_refit(const Vector& phi_hat, const Dataset& d, double threshold) {
    std::vector<int> chosen;
    for (Eigen::Index j = 0; j < phi_hat.size(); ++j)
        if (phi_hat[j] >= threshold) chosen.push_back(static_cast<int>(j));
    Selection sel;
    sel.s_hat = Configuration(std::move(chosen));
    const int k = glm::parameter_count(d, sel.s_hat);
    if (sel.s_hat.empty() || k >= d.n()) return sel;
    try {
        auto fit = glm::fit_mle(d, sel.s_hat);
        if (fit.converged) {
            sel.refit_available = true;
            sel.beta_refit = std::move(fit.beta_hat);
        }
    } catch (const NumericalFailure&) {
    }
    return sel;
}

}  // namespace ebvi::cavi
