#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hairec/error.hpp"
#include "hairec/rng.hpp"

namespace hairec {

/// Tolerance on |sum - 1| for any probability table or distribution.
inline constexpr double kProbTolerance = 1e-9;

/// Normalizers below this are treated as impossible evidence.
inline constexpr double kMinNormalizer = 1e-300;

/// True if every entry is finite, non-negative and the entries sum to one.
inline bool is_distribution(std::span<const double> p, double tol = kProbTolerance) {
    if (p.empty()) return false;
    double sum = 0.0;
    for (double v : p) {
        if (!std::isfinite(v) || v < 0.0) return false;
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

/// Probability mass function over the dense index set 0..n-1.
///
/// Construction validates and never renormalizes; an input that is off by more
/// than kProbTolerance is rejected.
class Distribution {
public:
    Distribution() = default;

    static Distribution from(std::vector<double> probs) {
        if (!is_distribution(probs))
            throw DomainError("not a probability distribution (size " +
                              std::to_string(probs.size()) + ")");
        return Distribution(std::move(probs));
    }

    static Distribution point(std::size_t n, std::size_t index) {
        if (index >= n) throw IndexOutOfRange("point mass index out of range");
        std::vector<double> p(n, 0.0);
        p[index] = 1.0;
        return Distribution(std::move(p));
    }

    static Distribution uniform(std::size_t n) {
        if (n == 0) throw DomainError("uniform distribution over an empty set");
        return Distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
    }

    /// Divides non-negative weights by their sum; nullopt when the sum is
    /// below kMinNormalizer.
    static std::optional<Distribution> normalize(std::vector<double> weights) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        if (!(sum >= kMinNormalizer)) return std::nullopt;
        for (double& w : weights) w /= sum;
        return Distribution(std::move(weights));
    }

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }
    const std::vector<double>& vector() const noexcept { return probs_; }
    auto begin() const noexcept { return probs_.begin(); }
    auto end() const noexcept { return probs_.end(); }

    bool operator==(const Distribution&) const = default;

private:
    explicit Distribution(std::vector<double> p) : probs_(std::move(p)) {}
    std::vector<double> probs_;
};

/// Total variation distance, half the L1 distance.
inline double tv_distance(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw DimensionMismatch("tv_distance: support size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
    return 0.5 * acc;
}

inline double tv_distance(const Distribution& p, const Distribution& q) {
    return tv_distance(p.probs(), q.probs());
}

/// Inverse-CDF draw. The last index with positive mass absorbs rounding.
inline std::size_t sample_index(std::span<const double> p, Rng& rng) {
    const double u = uniform01(rng);
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        cum += p[i];
        last = i;
        if (u < cum) return i;
    }
    return last;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace hairec
