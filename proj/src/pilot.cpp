#include "ebvi/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "ebvi/glm.hpp"

namespace ebvi::pilot {

double soft_threshold_update(double beta, double gradient, double curvature, double lambda) {
    const double z = beta - gradient / curvature;
    const double shrunk = std::abs(z) - lambda / curvature;
    if (shrunk <= 0.0) return 0.0;
    return std::copysign(shrunk, z);
}

namespace {

struct Problem {
    const Matrix& x;
    const Vector& y;
    bool intercept;
    std::vector<char> penalized;  // false for excluded constant columns
};

double mean_nll(const Vector& y, const Vector& eta) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) acc += glm::log1pexp(eta[i]) - y[i] * eta[i];
    return acc / static_cast<double>(eta.size());
}

double objective(const Problem& pb, const Vector& beta, double b0, double lambda) {
    Vector eta = pb.x * beta;
    eta.array() += b0;
    return mean_nll(pb.y, eta) + lambda * beta.lpNorm<1>();
}

std::vector<char> penalized_mask(const Matrix& x, int* excluded) {
    std::vector<char> mask(static_cast<std::size_t>(x.cols()), 1);
    int count = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (x.col(j).maxCoeff() == x.col(j).minCoeff()) {
            mask[static_cast<std::size_t>(j)] = 0;
            ++count;
        }
    }
    if (excluded) *excluded = count;
    return mask;
}

// One lambda, warm-started from (beta, b0). Returns the objective after each
// accepted outer iteration.
std::vector<double> solve_one(const Problem& pb, double lambda, Vector& beta, double& b0,
                              const L1Control& ctl) {
    const auto n = pb.x.rows();
    const auto p = pb.x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<double> trace;
    double f_old = objective(pb, beta, b0, lambda);

    Vector eta(n), w(n), r(n), curv(p);
    for (int outer = 0; outer < ctl.max_outer; ++outer) {
        eta.noalias() = pb.x * beta;
        eta.array() += b0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = glm::sigmoid(eta[i]);
            w[i] = std::max(mu * (1.0 - mu), ctl.min_weight);
            r[i] = (pb.y[i] - mu) / w[i];  // z - eta
        }
        for (Eigen::Index j = 0; j < p; ++j)
            curv[j] = pb.penalized[static_cast<std::size_t>(j)]
                          ? inv_n * (w.array() * pb.x.col(j).array().square()).sum()
                          : 0.0;
        const double w_sum = inv_n * w.sum();

        // Coordinate descent on the weighted least-squares model.
        Vector cand = beta;
        double cand_b0 = b0;
        std::vector<char> active(static_cast<std::size_t>(p), 0);
        auto sweep = [&](bool active_only) {
            double max_change = 0.0;
            if (pb.intercept) {
                const double delta = inv_n * w.dot(r) / w_sum;
                if (delta != 0.0) {
                    cand_b0 += delta;
                    r.array() -= delta;
                    max_change = std::max(max_change, w_sum * delta * delta);
                }
            }
            for (Eigen::Index j = 0; j < p; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (!pb.penalized[ju] || curv[j] <= 0.0) continue;
                if (active_only && !active[ju]) continue;
                const double grad = -inv_n * (w.array() * pb.x.col(j).array() * r.array()).sum();
                const double updated = soft_threshold_update(cand[j], grad, curv[j], lambda);
                const double delta = updated - cand[j];
                if (delta != 0.0) {
                    cand[j] = updated;
                    r.noalias() -= delta * pb.x.col(j);
                    max_change = std::max(max_change, curv[j] * delta * delta);
                }
                if (updated != 0.0) active[ju] = 1;
            }
            return max_change;
        };
        for (int pass = 0; pass < ctl.max_inner; ++pass) {
            if (sweep(false) < ctl.tol) break;
            for (int inner = 0; inner < ctl.max_inner; ++inner)
                if (sweep(true) < ctl.tol) break;
        }

        // Backtrack along the proximal-Newton direction; convexity makes it a descent direction.
        const Vector dir = cand - beta;
        const double dir_b0 = cand_b0 - b0;
        double t = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Vector trial;
        double trial_b0 = b0;
        for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
            trial = beta + t * dir;
            trial_b0 = b0 + t * dir_b0;
            f_new = objective(pb, trial, trial_b0, lambda);
            if (f_new <= f_old) break;
        }
        if (!(f_new <= f_old)) break;
        const double moved = (t * dir).cwiseAbs().maxCoeff() + std::abs(t * dir_b0);
        beta = std::move(trial);
        b0 = trial_b0;
        const double decrease = f_old - f_new;
        f_old = f_new;
        trace.push_back(f_new);
        if (decrease <= ctl.tol * (1.0 + std::abs(f_new)) && moved < 1e-6) break;
        if (moved == 0.0) break;
    }
    return trace;
}

double lambda_max_of(const Problem& pb) {
    const auto n = pb.x.rows();
    const double center = pb.intercept ? pb.y.mean() : 0.5;
    const Vector resid = pb.y.array() - center;
    double top = 0.0;
    for (Eigen::Index j = 0; j < pb.x.cols(); ++j)
        if (pb.penalized[static_cast<std::size_t>(j)])
            top = std::max(top, std::abs(pb.x.col(j).dot(resid)));
    return top / static_cast<double>(n);
}

PathFit path_on(const Problem& pb, const std::vector<double>& lambdas, const L1Control& ctl) {
    PathFit out;
    Vector beta = Vector::Zero(pb.x.cols());
    double b0 = 0.0;
    if (pb.intercept) {
        const double ybar = std::clamp(pb.y.mean(), 1e-6, 1.0 - 1e-6);
        b0 = std::log(ybar / (1.0 - ybar));
    }
    for (double lambda : lambdas) {
        out.objective_trace.push_back(solve_one(pb, lambda, beta, b0, ctl));
        out.betas.push_back(beta);
        out.intercepts.push_back(b0);
    }
    return out;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw InputError("lambda grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] >= 0.0)) throw InputError("lambda grid entries must be nonnegative");
        if (k > 0 && !(grid[k] < grid[k - 1])) throw InputError("lambda grid must strictly decrease");
    }
}

}  // namespace

double penalized_objective(const Dataset& d, const Vector& beta, double intercept, double lambda) {
    Problem pb{d.x, d.y, d.intercept, {}};
    return objective(pb, beta, intercept, lambda);
}

PathFit fit_l1_path(const Dataset& d, const std::vector<double>& lambdas, const L1Control& ctl,
                    const std::vector<int>& rows) {
    check_grid(lambdas);
    if (rows.empty()) {
        Problem pb{d.x, d.y, d.intercept, penalized_mask(d.x, nullptr)};
        return path_on(pb, lambdas, ctl);
    }
    Matrix xs(static_cast<Eigen::Index>(rows.size()), d.p());
    Vector ys(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = d.x.row(rows[i]);
        ys[static_cast<Eigen::Index>(i)] = d.y[rows[i]];
    }
    // Exclusion is decided on the full data so every fold penalizes the same columns.
    Problem pb{xs, ys, d.intercept, penalized_mask(d.x, nullptr)};
    return path_on(pb, lambdas, ctl);
}

double lambda_max(const Dataset& d) {
    Problem pb{d.x, d.y, d.intercept, penalized_mask(d.x, nullptr)};
    return lambda_max_of(pb);
}

std::vector<double> default_lambda_grid(const Dataset& d, int count, double ratio) {
    const double top = std::max(lambda_max(d), 1e-8);
    std::vector<double> grid(static_cast<std::size_t>(std::max(count, 1)));
    if (grid.size() == 1) {
        grid[0] = top;
        return grid;
    }
    const double step = std::log(ratio) / static_cast<double>(grid.size() - 1);
    for (std::size_t k = 0; k < grid.size(); ++k)
        grid[k] = top * std::exp(step * static_cast<double>(k));
    return grid;
}

std::vector<int> assign_folds(int n, int folds, Rng& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k % folds;
    return fold;
}

PilotEstimate fit_l1_logistic(const Dataset& d, const std::vector<double>& lambda_grid, int folds,
                              Rng& rng, const L1Control& ctl) {
    check_grid(lambda_grid);
    if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
    if (folds > d.n()) throw InputError("more folds than observations");

    const auto fold_of = assign_folds(d.n(), folds, rng);
    std::vector<double> cv_dev(lambda_grid.size(), 0.0);
    for (int k = 0; k < folds; ++k) {
        std::vector<int> train, test;
        for (int i = 0; i < d.n(); ++i) (fold_of[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        const PathFit path = fit_l1_path(d, lambda_grid, ctl, train);
        for (std::size_t l = 0; l < lambda_grid.size(); ++l) {
            double dev = 0.0;
            for (int i : test) {
                const double eta = d.x.row(i).dot(path.betas[l]) + path.intercepts[l];
                dev += -2.0 * (d.y[i] * eta - glm::log1pexp(eta));
            }
            cv_dev[l] += dev / static_cast<double>(test.size()) / folds;
        }
    }
    // First minimum in a decreasing grid is the larger lambda on ties.
    std::size_t best = 0;
    for (std::size_t l = 1; l < cv_dev.size(); ++l)
        if (cv_dev[l] < cv_dev[best]) best = l;

    const std::vector<double> head(lambda_grid.begin(),
                                   lambda_grid.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    const PathFit full = fit_l1_path(d, head, ctl);
    PilotEstimate est;
    est.beta_tilde = full.betas.back();
    est.intercept = full.intercepts.back();
    est.lambda_used = lambda_grid[best];
    penalized_mask(d.x, &est.excluded_constant_columns);
    return est;
}

namespace {

Dataset subset_rows(const Dataset& d, const std::vector<int>& rows) {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), d.x.cols());
    out.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Eigen::Index>(r)) = d.x.row(rows[r]);
        out.y[static_cast<Eigen::Index>(r)] = d.y[rows[r]];
    }
    out.names = d.names;
    out.intercept = d.intercept;
    return out;
}

Configuration support_of(const Vector& beta) {
    std::vector<int> idx;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (beta[j] != 0.0) idx.push_back(static_cast<int>(j));
    return Configuration(idx);
}

// Unpenalized refit on `s`; empty optional when the support is too large or the MLE runs off.
std::optional<glm::FitResult> refit(const Dataset& d, const Configuration& s, double max_fraction) {
    if (s.size() > std::max(1.0, max_fraction * d.n())) return std::nullopt;
    try {
        auto res = glm::fit_mle(d, s);
        if (!res.converged || res.separated) return std::nullopt;
        return res;
    } catch (const ModelTooLarge&) {
        return std::nullopt;
    } catch (const NumericalFailure&) {
        return std::nullopt;
    }
}

}  // namespace

PilotEstimate fit_relaxed_l1_logistic(const Dataset& d, const std::vector<double>& lambda_grid,
                                      int folds, Rng& rng, const RelaxedControl& rc,
                                      const L1Control& ctl) {
    check_grid(lambda_grid);
    if (folds < 2) throw InputError("cross-validation needs at least 2 folds");
    if (folds > d.n()) throw InputError("more folds than observations");
    if (!(rc.max_support_fraction > 0.0)) throw InputError("max_support_fraction must be positive");

    const double inf = std::numeric_limits<double>::infinity();
    const auto fold_of = assign_folds(d.n(), folds, rng);
    const std::size_t L = lambda_grid.size();
    std::vector<double> cv_lasso(L, 0.0), cv_refit(L, 0.0);
    for (int k = 0; k < folds; ++k) {
        std::vector<int> train, test;
        for (int i = 0; i < d.n(); ++i) (fold_of[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
        const Dataset dtrain = subset_rows(d, train);
        const Dataset dtest = subset_rows(d, test);
        const PathFit path = fit_l1_path(d, lambda_grid, ctl, train);
        Configuration last;
        double last_dev = inf;
        for (std::size_t l = 0; l < L; ++l) {
            double dev = 0.0;
            for (int i : test) {
                const double eta = d.x.row(i).dot(path.betas[l]) + path.intercepts[l];
                dev += -2.0 * (d.y[i] * eta - glm::log1pexp(eta));
            }
            cv_lasso[l] += dev / static_cast<double>(test.size()) / folds;

            if (!std::isfinite(cv_refit[l])) continue;
            const Configuration s = support_of(path.betas[l]);
            double rdev = last_dev;
            if (l == 0 || s != last) {
                const auto res = refit(dtrain, s, rc.max_support_fraction);
                rdev = res ? -2.0 * glm::log_likelihood(dtest, s, res->beta_hat) / dtest.n() : inf;
            }
            last = s;
            last_dev = rdev;
            cv_refit[l] += rdev / folds;
        }
    }
    // Lasso wins ties, and so does the larger lambda.
    std::size_t best = 0, best_lasso = 0;
    bool use_refit = false;
    double best_dev = inf;
    for (std::size_t l = 0; l < L; ++l) {
        if (cv_lasso[l] < cv_lasso[best_lasso]) best_lasso = l;
        if (cv_lasso[l] < best_dev) best = l, use_refit = false, best_dev = cv_lasso[l];
        if (cv_refit[l] < best_dev) best = l, use_refit = true, best_dev = cv_refit[l];
    }

    const std::size_t last = std::max(best, best_lasso);
    const std::vector<double> head(lambda_grid.begin(),
                                   lambda_grid.begin() + static_cast<std::ptrdiff_t>(last) + 1);
    const PathFit full = fit_l1_path(d, head, ctl);
    PilotEstimate est;
    est.beta_tilde = full.betas[best];
    est.intercept = full.intercepts[best];
    est.lambda_used = lambda_grid[best];
    penalized_mask(d.x, &est.excluded_constant_columns);
    if (!use_refit) return est;
    const Configuration s = support_of(est.beta_tilde);
    if (const auto res = refit(d, s, rc.max_support_fraction)) {
        const int off = d.intercept ? 1 : 0;
        // Off the refit support keep the cross-validated lasso, so variables
        // the sparser fit dropped still carry a usable signal.
        est.beta_tilde = full.betas[best_lasso];
        for (int k = 0; k < s.size(); ++k) est.beta_tilde[s.indices()[k]] = res->beta_hat[k + off];
        if (d.intercept) est.intercept = res->beta_hat[0];
        est.refitted = true;
    }
    return est;
}

PilotEstimate jitter_zeros(PilotEstimate est, double scale, Rng& rng) {
    if (!(scale > 0.0)) throw InputError("jitter scale must be positive");
    std::uniform_real_distribution<double> unif(-scale, scale);
    for (Eigen::Index j = 0; j < est.beta_tilde.size(); ++j) {
        if (est.beta_tilde[j] != 0.0) continue;
        double v = 0.0;
        while (v == 0.0) v = unif(rng);
        est.beta_tilde[j] = v;
        est.jitter_applied = true;
    }
    return est;
}

}  // namespace ebvi::pilot
