#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "depca/errors.hpp"

namespace depca {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A finite window of a vector-valued sequence on [n_min, n_max].
class SequenceWindow {
public:
    SequenceWindow() = default;

    SequenceWindow(std::int64_t n_min, std::int64_t n_max, Eigen::Index q)
        : n_min_(n_min), n_max_(n_max),
          values_(static_cast<size_t>(n_max - n_min + 1), Vec::Zero(q)) {
        if (n_min > n_max) throw ConfigError("SequenceWindow: n_min > n_max");
        if (q < 1) throw ConfigError("SequenceWindow: dimension must be positive");
    }

    std::int64_t n_min() const { return n_min_; }
    std::int64_t n_max() const { return n_max_; }
    Eigen::Index dim() const { return values_.empty() ? 0 : values_.front().size(); }
    bool contains(std::int64_t n) const { return n >= n_min_ && n <= n_max_; }

    const Vec& at(std::int64_t n) const {
        check(n);
        return values_[static_cast<size_t>(n - n_min_)];
    }
    Vec& at(std::int64_t n) {
        check(n);
        return values_[static_cast<size_t>(n - n_min_)];
    }

    /// Sup norm over the window (max Euclidean norm of entries).
    double sup_norm() const {
        double s = 0.0;
        for (const auto& v : values_) s = std::max(s, v.norm());
        return s;
    }

private:
    void check(std::int64_t n) const {
        if (!contains(n))
            throw WindowTooSmall("SequenceWindow: index " + std::to_string(n) +
                                 " outside [" + std::to_string(n_min_) + ", " +
                                 std::to_string(n_max_) + "]");
    }

    std::int64_t n_min_ = 0, n_max_ = -1;
    std::vector<Vec> values_;
};

}  // namespace depca
