#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ebvi/dataset.hpp"
#include "ebvi/types.hpp"

namespace ebvi::fixture {

// Gaussian design with the leading s coefficients at `amp` and a logistic response.
inline Simulated strong_instance(int n, int p, int s, double amp, std::uint64_t seed, double sigma = 1.0) {
    SimScenario sc;
    sc.n = n;
    sc.p = p;
    sc.s = s;
    sc.signal = FixedSignal{amp};
    sc.design = IidGaussian{sigma};
    sc.seed = seed;
    return simulate(sc);
}

inline Dataset tiny(std::vector<double> xs, std::vector<double> ys) {
    const auto n = static_cast<Eigen::Index>(ys.size());
    Matrix x(n, static_cast<Eigen::Index>(xs.size()) / n);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = xs[static_cast<std::size_t>(i * x.cols() + j)];
    return make_dataset(std::move(x), Eigen::Map<Vector>(ys.data(), n));
}

inline Configuration random_config(int p, int max_size, Rng& rng) {
    std::uniform_int_distribution<int> size_dist(0, max_size);
    std::vector<int> all(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(size_dist(rng)));
    return Configuration(all);
}

inline Vector random_vector(int k, double sd, Rng& rng) {
    std::normal_distribution<double> g(0.0, sd);
    Vector v(k);
    for (int i = 0; i < k; ++i) v[i] = g(rng);
    return v;
}

}  // namespace ebvi::fixture
