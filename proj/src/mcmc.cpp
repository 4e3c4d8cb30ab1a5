#include "ebvi/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace ebvi::mcmc {

ChainConfig ChainConfig::resolved(int n, int p) const {
    ChainConfig out = *this;
    if (out.samples < 1) throw InputError("chain needs at least one sample");
    if (out.burn_in < 0) out.burn_in = out.samples / 5;
    if (out.smax < 0) {
        int cap = std::min(n / 2, 50);
        if (p > 1) cap = std::min(cap, static_cast<int>(std::floor(n / std::log(static_cast<double>(p)))));
        out.smax = std::max(cap, 1);
    }
    if (out.burn_in >= out.samples) throw InputError("burn-in must be below the sample count");
    if (out.smax >= n) throw InputError("smax must be below n");
    return out;
}

ChainResult mh_run(int p, const LogTarget& target, const ChainConfig& cfg, Rng& rng,
                   const StateObserver& observe) {
    if (p < 1) throw InputError("chain needs p >= 1");
    if (cfg.samples < 1) throw InputError("chain needs at least one sample");
    const int burn_in = cfg.burn_in < 0 ? cfg.samples / 5 : cfg.burn_in;
    const int smax = cfg.smax < 0 ? p : cfg.smax;
    if (burn_in >= cfg.samples) throw InputError("burn-in must be below the sample count");

    std::uniform_int_distribution<int> pick(0, p - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Configuration state;
    double log_post = target(state);
    std::unordered_set<Configuration, ConfigurationHash> occupied{state};
    std::unordered_set<Configuration, ConfigurationHash> scored{state};

    ChainResult out;
    out.map_config = state;
    out.map_log_post = log_post;
    std::vector<std::size_t> counts(static_cast<std::size_t>(p), 0);
    std::size_t accepted = 0;

    for (int t = 0; t < cfg.samples; ++t) {
        const int j = pick(rng);
        Configuration proposal = state.flipped(j);
        if (proposal.size() <= smax) {
            const double log_prop = target(proposal);
            scored.insert(proposal);
            const double log_ratio = log_prop - log_post;
            bool accept = false;
            if (log_prop > -std::numeric_limits<double>::infinity()) {
                accept = log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio;
            }
            if (accept) {
                state = std::move(proposal);
                log_post = log_prop;
                ++accepted;
                occupied.insert(state);
                if (log_post > out.map_log_post) {
                    out.map_log_post = log_post;
                    out.map_config = state;
                }
            }
        }
        if (t >= burn_in) {
            for (int k : state.indices()) ++counts[static_cast<std::size_t>(k)];
            ++out.kept;
            if (observe) observe(state);
        }
    }

    out.inclusion.resize(p);
    for (int k = 0; k < p; ++k)
        out.inclusion[k] = static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                           static_cast<double>(out.kept);
    out.accept_rate = static_cast<double>(accepted) / static_cast<double>(cfg.samples);
    out.visited = occupied.size();
    out.evaluated = scored.size();
    return out;
}

ChainResult mh_run(const Dataset& d, const HyperParams& h, const ChainConfig& cfg, Rng& rng,
                   FitCache* cache) {
    h.validate();
    const ChainConfig resolved = cfg.resolved(d.n(), d.p());
    LogTarget target = [&](const Configuration& s) {
        try {
            return log_marginal_unnorm(d, s, h, cache);
        } catch (const NumericalFailure&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    return mh_run(d.p(), target, resolved, rng);
}

Vector inclusion_from_chain(const std::vector<Configuration>& states, int p) {
    if (states.empty()) throw InputError("inclusion needs a non-empty chain");
    Vector inc = Vector::Zero(p);
    for (const auto& s : states)
        for (int j : s.indices()) inc[j] += 1.0;
    return inc / static_cast<double>(states.size());
}

}  // namespace ebvi::mcmc
