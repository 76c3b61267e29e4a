#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "depca/errors.hpp"

namespace depca {

/// A grid node stored as (integer part, rational offset k/m).  The hybrid
/// equation's discontinuity structure lives exactly at the integers, so nodes
/// are never formed by repeated floating-point addition.
struct GridNode {
    std::int64_t base;      ///< integer part of the node
    std::int64_t num;       ///< offset numerator, 0 <= num < den
    std::int64_t den;       ///< subdivisions per unit (m)

    double value() const {
        return static_cast<double>(base) +
               static_cast<double>(num) / static_cast<double>(den);
    }
    bool is_integer() const { return num == 0; }
    /// floor of the node, exact.
    std::int64_t floor() const { return base; }
};

/// Uniform grid on [t_start, t_end] with integer endpoints and m subdivisions
/// per unit interval.  Every integer in range is a node.
class TimeGrid {
public:
    TimeGrid(std::int64_t t_start, std::int64_t t_end, std::int64_t m)
        : t_start_(t_start), t_end_(t_end), m_(m) {
        if (t_start >= t_end) throw ConfigError("TimeGrid: t_start must be < t_end");
        if (m < 1) throw ConfigError("TimeGrid: subdivisions_per_unit must be >= 1");
    }

    std::int64_t t_start() const { return t_start_; }
    std::int64_t t_end() const { return t_end_; }
    std::int64_t subdivisions() const { return m_; }
    double step() const { return 1.0 / static_cast<double>(m_); }

    /// Number of nodes: (t_end - t_start) * m + 1.
    std::int64_t size() const { return (t_end_ - t_start_) * m_ + 1; }

    /// k-th node, 0 <= k < size().
    GridNode node(std::int64_t k) const {
        std::int64_t q = k / m_;
        std::int64_t r = k % m_;
        return GridNode{t_start_ + q, r, m_};
    }

    /// Index of the node at integer time n (n must be a grid integer).
    std::int64_t index_of_integer(std::int64_t n) const {
        if (n < t_start_ || n > t_end_)
            throw ConfigError("TimeGrid: integer outside grid range");
        return (n - t_start_) * m_;
    }

    bool contains(double t) const {
        return t >= static_cast<double>(t_start_) && t <= static_cast<double>(t_end_);
    }

    /// Index of the grid node nearest to t; throws if t is not (close to) a node.
    std::int64_t index_near(double t) const {
        double k = (t - static_cast<double>(t_start_)) * static_cast<double>(m_);
        auto ki = static_cast<std::int64_t>(std::llround(k));
        if (ki < 0 || ki >= size() || std::abs(k - static_cast<double>(ki)) > 1e-9)
            throw ConfigError("TimeGrid: requested time is not a grid node");
        return ki;
    }

private:
    std::int64_t t_start_, t_end_, m_;
};

inline TimeGrid build_grid(std::int64_t t_start, std::int64_t t_end, std::int64_t m) {
    return TimeGrid(t_start, t_end, m);
}

/// Greatest integer <= t.  At grid nodes prefer GridNode::floor(), which is
/// exact; this overload is for free real arguments.
inline std::int64_t floor_anchor(double t) {
    return static_cast<std::int64_t>(std::floor(t));
}

}  // namespace depca
