#include "ebvi/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ebvi {

void HyperParams::validate() const {
    if (!(a > 0.0)) throw InputError("hyperparameter a must be positive");
    if (!(gamma > 0.0)) throw InputError("hyperparameter gamma must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("hyperparameter alpha must lie in (0, 1)");
}

std::optional<CachedFit> FitCache::find(const Configuration& s) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    ++hits_;
    return it->second->second;
}

void FitCache::insert(const Configuration& s, const CachedFit& fit) {
    if (capacity_ == 0) return;
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(s); it != index_.end()) {
        it->second->second = fit;
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(s, fit);
    index_.emplace(s, order_.begin());
    if (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::size_t FitCache::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

void FitCache::clear() {
    std::lock_guard lock(mutex_);
    order_.clear();
    index_.clear();
}

double log_prior_config(int size, int p, double a) {
    if (size < 0 || size > p) throw InputError("configuration size out of range");
    const double log_binom =
        std::lgamma(p + 1.0) - std::lgamma(size + 1.0) - std::lgamma(p - size + 1.0);
    return -log_binom - a * size * std::log(static_cast<double>(p));
}

namespace {

CachedFit evaluate_fit(const Dataset& d, const Configuration& s, FitCache* cache,
                       const glm::NewtonControl& ctl) {
    if (cache) {
        if (auto hit = cache->find(s)) return *hit;
    }
    CachedFit fit;
    try {
        const auto res = glm::fit_mle(d, s, ctl);
        fit.loglik = res.loglik_at_mle;
        fit.separated = res.separated && !res.converged;
    } catch (const NumericalFailure&) {
        fit.failed = true;
    }
    if (cache) {
        cache->note_fit(fit.separated);
        cache->insert(s, fit);
    }
    return fit;
}

}  // namespace

double log_marginal_unnorm(const Dataset& d, const Configuration& s, const HyperParams& h,
                           FitCache* cache, const glm::NewtonControl& ctl) {
    if (s.size() >= d.n())
        throw ModelTooLarge("configuration of size " + std::to_string(s.size()) +
                            " is not below n = " + std::to_string(d.n()));
    const double prior = log_prior_config(s, d.p(), h.a);
    const double spread = 0.5 * s.size() * std::log1p(h.alpha * h.gamma);
    double loglik = 0.0;
    if (s.empty() && !d.intercept) {
        loglik = -d.n() * std::log(2.0);
    } else {
        const CachedFit fit = evaluate_fit(d, s, cache, ctl);
        if (fit.failed) throw NumericalFailure("MLE fit failed for configuration");
        loglik = fit.loglik;
    }
    return prior - spread + h.alpha * loglik;
}

double log_sum_exp(std::span<const double> v) {
    double top = -std::numeric_limits<double>::infinity();
    for (double x : v) top = std::max(top, x);
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - top);
    return top + std::log(acc);
}

const PosteriorEntry& PosteriorTable::top() const {
    return *std::max_element(entries.begin(), entries.end(),
                             [](const auto& l, const auto& r) { return l.prob < r.prob; });
}

double PosteriorTable::prob_of(const Configuration& s) const {
    for (const auto& e : entries)
        if (e.config == s) return e.prob;
    return 0.0;
}

namespace {

double support_size(int p, int smax) {
    double total = 0.0;
    for (int k = 0; k <= smax; ++k)
        total += std::exp(std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0));
    return total;
}

}  // namespace

PosteriorTable enumerate_posterior(const Dataset& d, const HyperParams& h, int smax,
                                   FitCache* cache) {
    h.validate();
    const int p = d.p();
    smax = std::clamp(smax, 0, p);
    if (support_size(p, smax) > kEnumerationLimit * (1.0 + 1e-12))
        throw InstanceTooLarge("enumeration over more than 1e6 configurations refused");
    if (smax >= d.n()) throw ModelTooLarge("smax must be below n");

    std::vector<Configuration> configs;
    std::vector<double> logs;
    // Combinations of each size in lexicographic order.
    for (int k = 0; k <= smax; ++k) {
        std::vector<int> idx(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
        while (true) {
            Configuration s(idx);
            double lp = -std::numeric_limits<double>::infinity();
            try {
                lp = log_marginal_unnorm(d, s, h, cache);
            } catch (const NumericalFailure&) {
            }
            configs.push_back(std::move(s));
            logs.push_back(lp);
            int pos = k - 1;
            while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == p - k + pos) --pos;
            if (pos < 0) break;
            ++idx[static_cast<std::size_t>(pos)];
            for (int i = pos + 1; i < k; ++i)
                idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
        }
    }

    PosteriorTable table;
    table.log_norm_const = log_sum_exp(logs);
    table.inclusion = Vector::Zero(p);
    table.entries.reserve(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const double prob = std::exp(logs[c] - table.log_norm_const);
        for (int j : configs[c].indices()) table.inclusion[j] += prob;
        table.entries.push_back({std::move(configs[c]), prob});
    }
    return table;
}

}  // namespace ebvi
