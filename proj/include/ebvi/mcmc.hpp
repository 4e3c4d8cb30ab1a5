#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ebvi/dataset.hpp"
#include "ebvi/posterior.hpp"
#include "ebvi/types.hpp"

namespace ebvi::mcmc {

/// `samples` is the total chain length; the first `burn_in` states are dropped.
struct ChainConfig {
    int samples = 10000;
    int burn_in = -1;  // negative means samples / 5
    int smax = -1;     // negative means min(n / 2, 50, floor(n / log p))
    std::uint64_t seed = 0;

    /// Fills defaults for an n-by-p data set and checks invariants.
    ChainConfig resolved(int n, int p) const;
};

struct ChainResult {
    Vector inclusion;
    std::size_t visited = 0;    // distinct configurations occupied
    std::size_t evaluated = 0;  // distinct configurations scored by the target
    double accept_rate = 0.0;
    Configuration map_config;
    double map_log_post = 0.0;
    std::size_t kept = 0;
};

/// Unnormalized log target over configurations; -infinity means excluded.
using LogTarget = std::function<double(const Configuration&)>;

/// Called with every post-burn-in state.
using StateObserver = std::function<void(const Configuration&)>;

/// Single-flip Metropolis-Hastings over p coordinates starting from the empty model.
ChainResult mh_run(int p, const LogTarget& target, const ChainConfig& cfg, Rng& rng,
                   const StateObserver& observe = {});

/// mh_run on the Laplace marginal posterior. A numerical failure scores -infinity.
ChainResult mh_run(const Dataset& d, const HyperParams& h, const ChainConfig& cfg, Rng& rng,
                   FitCache* cache = nullptr);

/// Coordinate-wise mean of binary state vectors.
Vector inclusion_from_chain(const std::vector<Configuration>& states, int p);

}  // namespace ebvi::mcmc
