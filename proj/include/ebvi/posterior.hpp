#pragma once

#include <atomic>
#include <cstddef>
#include <list>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "ebvi/dataset.hpp"
#include "ebvi/glm.hpp"
#include "ebvi/types.hpp"

namespace ebvi {

/// Prior exponent a, prior spread gamma and likelihood discount alpha.
struct HyperParams {
    double a = 0.01;
    double gamma = 0.1;
    double alpha = 0.99;

    void validate() const;
};

/// What the Laplace marginal needs from a per-model MLE fit.
struct CachedFit {
    double loglik = 0.0;
    bool separated = false;
    bool failed = false;
};

/// Bounded LRU memo of per-configuration fits, safe for concurrent use.
///
/// Two threads missing on the same key may both fit; the results are
/// identical so whichever insert lands last is harmless.
class FitCache {
public:
    explicit FitCache(std::size_t capacity = 100000) : capacity_(capacity) {}

    std::optional<CachedFit> find(const Configuration& s);
    void insert(const Configuration& s, const CachedFit& fit);

    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }
    void clear();

    std::size_t hits() const noexcept { return hits_.load(); }
    std::size_t fits() const noexcept { return fits_.load(); }
    std::size_t separation_warnings() const noexcept { return separations_.load(); }

    void note_fit(bool separated) noexcept {
        ++fits_;
        if (separated) ++separations_;
    }

private:
    using Entry = std::pair<Configuration, CachedFit>;

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;  // front = most recently used
    std::unordered_map<Configuration, std::list<Entry>::iterator, ConfigurationHash> index_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> fits_{0};
    std::atomic<std::size_t> separations_{0};
};

/// log pi_n(S) up to a constant: -log C(p,|S|) - a |S| log p.
double log_prior_config(int size, int p, double a);
inline double log_prior_config(const Configuration& s, int p, double a) {
    return log_prior_config(s.size(), p, a);
}

/// Laplace-approximated unnormalized log marginal posterior of s:
///   log_prior_config(S) - |S|/2 log(1 + alpha gamma) + alpha * loglik(S, mle).
///
/// `cache` may be null. Throws ModelTooLarge for |S| >= n and NumericalFailure
/// when the MLE iterate blows up.
double log_marginal_unnorm(const Dataset& d, const Configuration& s, const HyperParams& h,
                           FitCache* cache = nullptr, const glm::NewtonControl& ctl = {});

struct PosteriorEntry {
    Configuration config;
    double prob = 0.0;
};

struct PosteriorTable {
    std::vector<PosteriorEntry> entries;  // enumeration order: by size, then lexicographic
    double log_norm_const = 0.0;
    Vector inclusion;

    const PosteriorEntry& top() const;
    double prob_of(const Configuration& s) const;
};

inline constexpr double kEnumerationLimit = 1e6;

/// Exact posterior over every configuration with |S| <= smax.
/// Throws InstanceTooLarge when that support exceeds kEnumerationLimit.
PosteriorTable enumerate_posterior(const Dataset& d, const HyperParams& h, int smax,
                                   FitCache* cache = nullptr);

/// Numerically stable log(sum(exp(v))).
double log_sum_exp(std::span<const double> v);

}  // namespace ebvi
