#pragma once

#include <cstdint>
#include <vector>

#include "depca/dichotomy.hpp"
#include "depca/transition.hpp"

namespace depca {

/// A continuous DEPCA trajectory: grid values plus the anchoring integer
/// sequence.  Continuous across integers by construction; the measured
/// right-limit defect at each integer is recorded.
class HybridSolution {
public:
    HybridSolution(TimeGrid grid, Eigen::Index q);

    const TimeGrid& grid() const { return grid_; }
    Eigen::Index dim() const { return q_; }

    const Vec& at_node(std::int64_t k) const { return values_.at(static_cast<size_t>(k)); }
    Vec& at_node(std::int64_t k) { return values_.at(static_cast<size_t>(k)); }

    const Vec& at_integer(std::int64_t n) const {
        return at_node(grid_.index_of_integer(n));
    }

    /// Linear interpolation between grid nodes ([t] handled through the grid).
    Vec value(double t) const;

    /// Anchor sequence (values at the integers).
    SequenceWindow anchors() const;

    double sup_norm() const;
    double max_continuity_defect = 0.0;
    double lipschitz_bound = 0.0;  ///< measured sup ||A x + B x([.]) + f||

private:
    TimeGrid grid_;
    Eigen::Index q_;
    std::vector<Vec> values_;
};

/// Per-interval reconstruction x(t) = Z(t,n) x(n) + int_n^t Phi(t,u) f(u) du
/// from the anchor sequence.  Throws if the right-limit defect at any integer
/// exceeds continuity_tol (inconsistent anchors).
HybridSolution reconstruct(const HybridKernel& kernel,
                           const CoefficientSystem& system,
                           const SequenceWindow& anchors,
                           double continuity_tol = 1e-6);

/// Same, with an arbitrary forcing replacing system.f (used by the
/// perturbation solvers).
HybridSolution reconstruct_with_forcing(const HybridKernel& kernel,
                                        const VectorFn& forcing,
                                        const SequenceWindow& anchors,
                                        double continuity_tol = 1e-6);

/// The full pipeline reduce -> bounded_solution -> reconstruct.  The kernel
/// should span a window wider than the output by the series truncation depth;
/// the result covers the inner sub-grid where the truncated series is valid.
HybridSolution rap_solution(const CoefficientSystem& system,
                            const HybridKernel& kernel, const DichotomyData& dd,
                            double tol = 1e-10);

/// Variation-of-parameters kernels R(t,s) and G(t,u), for validation and
/// exposition (the anchor-based reconstruction is the primary solve path).
/// All times are grid nodes, s <= t.
Mat kernel_R(const HybridKernel& kernel, std::int64_t node_t, std::int64_t node_s);

/// G(t,u) for grid nodes u in (s, t]; at integer u the left-limit branch is
/// used (measure-zero choice, integrals unaffected).
Mat kernel_G(const HybridKernel& kernel, std::int64_t node_t, std::int64_t node_u,
             std::int64_t node_s);

/// x(t) = R(t,s) x(s) + int_s^t G(t,tau) f(tau) dtau, assembled from the
/// tabulated kernels; cross-checks reconstruct.
Vec variation_solution(const HybridKernel& kernel, const CoefficientSystem& system,
                       std::int64_t node_t, std::int64_t node_s, const Vec& x_s);

/// Exact solution of the scalar x' = a x + b x([t]) + c, x(0) = x0, via the
/// per-interval closed form (requires a != 0).  Test oracle for the pipeline.
double closed_form_oracle(double a, double b, double c, double x0, double t);

/// Closed-form Z(t-s) = e^{a(t-s)} + (b/a)(e^{a(t-s)} - 1) for the scalar
/// constant-coefficient case.
double scalar_Z(double a, double b, double dt);

}  // namespace depca
