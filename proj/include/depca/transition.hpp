#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "depca/coefficients.hpp"
#include "depca/grid.hpp"

namespace depca {

/// 5-point Gauss-Legendre rule on [0, 1].
struct GaussLegendre5 {
    static const double nodes[5];
    static const double weights[5];
};

/// Classical fixed-step RK4 on the matrix equation M' = A(t) M over [t0, t1],
/// nsteps equal steps.  Fixed step keeps results deterministic and grid-aligned.
Mat rk4_propagate(const MatrixFn& A, Mat M, double t0, double t1, int nsteps);

/// Tabulated transition data for one unit interval [n, n+1]:
///   U[k] = Phi(n + k/m, n),  W[k] = Phi(n, n + k/m) = U[k]^{-1}
/// plus W at the 5 Gauss-Legendre abscissae of every grid cell, which later
/// quadratures (B-kernel, forcing) reuse.
struct UnitTable {
    std::int64_t n = 0;
    std::vector<Mat> U;                    // m+1 entries
    std::vector<Mat> W;                    // m+1 entries
    std::vector<std::array<Mat, 5>> Wgl;   // m entries (per cell)
    std::vector<std::array<double, 5>> tgl;  // abscissae per cell
};

/// Tabulated Phi(t,s) on a unit-interval-aligned grid.  Within a closed unit
/// interval Phi(t,s) = U(t) U(s)^{-1}; across integers factors are chained
/// through the integer-to-integer products Phi(n+1, n), never integrated in
/// one long sweep.
class TransitionKernel {
public:
    TransitionKernel(TimeGrid grid, std::vector<UnitTable> units, int substeps);

    const TimeGrid& grid() const { return grid_; }
    Eigen::Index dim() const { return units_.front().U.front().rows(); }
    int integrator_order() const { return 4; }
    int substeps() const { return substeps_; }

    std::int64_t n_units() const { return static_cast<std::int64_t>(units_.size()); }
    const UnitTable& unit(std::int64_t n) const;  // unit interval [n, n+1]

    /// Phi between two global grid-node indices (any order, any separation).
    Mat phi(std::int64_t node_t, std::int64_t node_s) const;

    /// Phi(n2, n1) for grid integers, chained through integer factors.
    Mat phi_int(std::int64_t n2, std::int64_t n1) const;

    /// Measured sup of ||Phi(t,s)|| over tabulated pairs with |t-s| <= 1
    /// (the k0 constant of the continuity estimates).
    double k0() const { return k0_; }

private:
    TimeGrid grid_;
    std::vector<UnitTable> units_;
    int substeps_;
    double k0_ = 0.0;
};

/// Integrate Phi' = A(t) Phi per unit interval (RK4, `substeps` micro-steps
/// per grid cell).  Throws NumericBlowup if entries go non-finite.
TransitionKernel fundamental(const CoefficientSystem& system, const TimeGrid& grid,
                             int substeps = 4);

/// Transition tables plus the B-integral kernels
///   J(t,s) = I + int_s^t Phi(s,u) B(u) du,   Z(t,s) = Phi(t,s) J(t,s),
/// with per-unit cumulative tables Q[k] = int_n^{t_k} Phi(n,u) B(u) du so that
/// J(t,s) = I + U(s) (Q(t) - Q(s)) for s, t in the same closed unit interval.
class HybridKernel {
public:
    HybridKernel(TransitionKernel kernel, const CoefficientSystem& system,
                 double cond_ceiling = 1e8);

    const TransitionKernel& transition() const { return kernel_; }
    const TimeGrid& grid() const { return kernel_.grid(); }
    Eigen::Index dim() const { return kernel_.dim(); }
    double cond_ceiling() const { return cond_ceiling_; }

    /// J, Z and the J condition estimate for grid nodes t, s in the same
    /// closed unit interval (global node indices).
    Mat J(std::int64_t node_t, std::int64_t node_s) const;
    Mat Z(std::int64_t node_t, std::int64_t node_s) const;
    double cond_J(std::int64_t node_t, std::int64_t node_s) const;

    /// C(n) = Z(n+1, n); throws NearSingularJ if cond(J(n+1,n)) exceeds the
    /// ceiling.
    Mat C(std::int64_t n) const;

    /// Cumulative forcing integrals Hf[unit][k] = int_n^{t_k} Phi(n,u) g(u) du
    /// for an arbitrary forcing g (same Gauss-Legendre cells as the B-kernel).
    std::vector<std::vector<Vec>> forcing_table(const VectorFn& g) const;

    /// h(n) = int_n^{n+1} Phi(n+1,u) g(u) du assembled from a forcing table.
    Vec h(std::int64_t n, const std::vector<std::vector<Vec>>& table) const;

    /// Q table accessor (unit interval [n, n+1], local node k).
    const Mat& Q(std::int64_t n, std::int64_t k) const;

private:
    std::int64_t unit_index(std::int64_t n) const;

    TransitionKernel kernel_;
    double cond_ceiling_;
    std::vector<std::vector<Mat>> Q_;  // per unit, m+1 cumulative integrals
};

/// Convenience: fundamental + hybrid kernels in one call.
inline HybridKernel hybrid_kernels(const CoefficientSystem& system,
                                   const TimeGrid& grid, int substeps = 4,
                                   double cond_ceiling = 1e8) {
    return HybridKernel(fundamental(system, grid, substeps), system, cond_ceiling);
}

}  // namespace depca
