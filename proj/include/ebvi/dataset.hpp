#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ebvi/types.hpp"

namespace ebvi {

/// Fixed design matrix, binary response and column names.
///
/// When `intercept` is set every model carries an extra always-included
/// intercept coefficient that is not part of any Configuration.
struct Dataset {
    Matrix x;                        // n x p, row i is x_i
    Vector y;                        // length n, entries 0 or 1
    std::vector<std::string> names;  // p column identifiers
    bool intercept = false;

    int n() const noexcept { return static_cast<int>(x.rows()); }
    int p() const noexcept { return static_cast<int>(x.cols()); }

    /// Throws InputError when the invariants do not hold.
    void validate() const;
};

/// Builds and validates a Dataset, generating names "x1".."xp" when none given.
Dataset make_dataset(Matrix x, Vector y, std::vector<std::string> names = {});

struct LoadOptions {
    bool standardize = false;
    bool intercept = false;
};

/// Reads a headed CSV; the named response column is removed from x.
Dataset load_csv(const std::filesystem::path& path, const std::string& response_column,
                 const LoadOptions& opts = {});

/// Writes x and y back as a headed CSV with the response in the first column.
void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& response_column = "y");

/// Scales every non-constant column to unit sample variance (no centering).
void standardize_columns(Matrix& x);

struct FixedSignal {
    double amplitude;
};

struct UniformSignal {
    double lo;
    double hi;
};

struct IidGaussian {
    double sigma;
};

struct Ar1Gaussian {
    double r;
};

struct SimScenario {
    int n = 0;
    int p = 0;
    int s = 0;
    std::variant<FixedSignal, UniformSignal> signal = FixedSignal{1.0};
    std::variant<IidGaussian, Ar1Gaussian> design = IidGaussian{1.0};
    std::uint64_t seed = 0;

    void validate() const;
};

struct Design {
    Matrix x;
    Vector beta_star;
    Configuration s_star;
};

/// Draws X under the scenario's design, and beta* with signals in the leading s slots.
Design generate_design(const SimScenario& scenario, Rng& rng);

/// y_i ~ Bernoulli(logistic(x_i' beta*)).
Vector sample_response(const Matrix& x, const Vector& beta_star, Rng& rng);

/// generate_design followed by sample_response, seeded from scenario.seed.
struct Simulated {
    Dataset data;
    Vector beta_star;
    Configuration s_star;
};
Simulated simulate(const SimScenario& scenario);

}  // namespace ebvi
