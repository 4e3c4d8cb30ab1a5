#include "ebvi/types.hpp"

#include <algorithm>

namespace ebvi {

Configuration::Configuration(std::vector<int> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

Configuration Configuration::from_indicator(std::span<const std::uint8_t> bits) {
    Configuration s;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) s.indices_.push_back(static_cast<int>(j));
    return s;
}

Configuration Configuration::leading(int s) {
    Configuration c;
    c.indices_.resize(static_cast<std::size_t>(std::max(s, 0)));
    for (int j = 0; j < s; ++j) c.indices_[static_cast<std::size_t>(j)] = j;
    return c;
}

bool Configuration::contains(int j) const noexcept {
    return std::binary_search(indices_.begin(), indices_.end(), j);
}

std::vector<std::uint8_t> Configuration::indicator(int p) const {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(p), 0);
    for (int j : indices_)
        if (j >= 0 && j < p) bits[static_cast<std::size_t>(j)] = 1;
    return bits;
}

Configuration Configuration::flipped(int j) const {
    Configuration out;
    out.indices_.reserve(indices_.size() + 1);
    auto it = std::lower_bound(indices_.begin(), indices_.end(), j);
    out.indices_.assign(indices_.begin(), it);
    if (it != indices_.end() && *it == j) {
        out.indices_.insert(out.indices_.end(), it + 1, indices_.end());
    } else {
        out.indices_.push_back(j);
        out.indices_.insert(out.indices_.end(), it, indices_.end());
    }
    return out;
}

std::size_t ConfigurationHash::operator()(const Configuration& s) const noexcept {
    // FNV-1a over the index sequence
    std::uint64_t h = 1469598103934665603ULL;
    for (int j : s.indices()) {
        h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
}

}  // namespace ebvi
