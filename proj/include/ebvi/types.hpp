#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ebvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// The one generator every stochastic operation takes explicitly.
using Rng = std::mt19937_64;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InstanceTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A model S: a sorted, duplicate-free set of 0-based column indices.
class Configuration {
public:
    Configuration() = default;

    /// Accepts indices in any order; duplicates are removed.
    explicit Configuration(std::vector<int> indices);

    static Configuration from_indicator(std::span<const std::uint8_t> bits);
    static Configuration leading(int s);

    std::span<const int> indices() const noexcept { return indices_; }
    const std::vector<int>& index_vector() const noexcept { return indices_; }
    int size() const noexcept { return static_cast<int>(indices_.size()); }
    bool empty() const noexcept { return indices_.empty(); }
    bool contains(int j) const noexcept;

    /// Binary p-vector view.
    std::vector<std::uint8_t> indicator(int p) const;

    /// Same model with position j toggled.
    Configuration flipped(int j) const;

    friend bool operator==(const Configuration&, const Configuration&) = default;
    friend auto operator<=>(const Configuration&, const Configuration&) = default;

private:
    std::vector<int> indices_;
};

struct ConfigurationHash {
    std::size_t operator()(const Configuration& s) const noexcept;
};

}  // namespace ebvi
