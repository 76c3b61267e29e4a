#pragma once

#include <cstdint>
#include <vector>

#include "depca/sequence.hpp"
#include "depca/transition.hpp"

namespace depca {

/// The reduced difference equation x(n+1) = C(n) x(n) + h(n) on a finite
/// window [n_min, n_max] of integers (C and h defined for n in
/// [n_min, n_max - 1]).
class DiscreteSystem {
public:
    DiscreteSystem(std::int64_t n_min, std::int64_t n_max, Eigen::Index q);

    std::int64_t n_min() const { return n_min_; }
    std::int64_t n_max() const { return n_max_; }
    Eigen::Index dim() const { return q_; }

    const Mat& C(std::int64_t n) const;
    Mat& C(std::int64_t n);
    const Vec& h(std::int64_t n) const;
    Vec& h(std::int64_t n);

    double h_sup_norm() const;

    /// Constant-coefficient helper used throughout the tests.
    static DiscreteSystem constant(const Mat& C, const Vec& h, std::int64_t n_min,
                                   std::int64_t n_max);

private:
    std::int64_t n_min_, n_max_;
    Eigen::Index q_;
    std::vector<Mat> C_;
    std::vector<Vec> h_;
};

/// Reduce a DEPCA to its difference equation on the kernel's grid window:
/// C(n) = Z(n+1, n), h(n) = int_n^{n+1} Phi(n+1, u) f(u) du.
DiscreteSystem reduce(const HybridKernel& kernel, const CoefficientSystem& system);

/// Run the recursion from x0 at n0 to n1 (forward, or backward through
/// C(n)^{-1}).  Returns the trajectory window covering [min(n0,n1), max(n0,n1)].
SequenceWindow iterate(const DiscreteSystem& disc, const Vec& x0, std::int64_t n0,
                       std::int64_t n1);

}  // namespace depca
