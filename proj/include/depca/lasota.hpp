#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "depca/depca.hpp"

namespace depca {

using ScalarFn = std::function<double(double)>;

/// Data of the blood-cell production model
///   y'(t) = -delta(t) y(t) + p(t) f_prod(y([t]))
/// with the default production response f_prod(x) = exp(-gamma x).
struct LasotaParams {
    ScalarFn delta;       ///< death rate, must stay positive
    ScalarFn p;           ///< production rate, must stay positive
    double gamma = 0.0;   ///< Lipschitz constant of f_prod
    ScalarFn f_prod;
    double delta_minus = 0.0;  ///< positive lower bound for the mean of delta
};

/// Params with the default exponential response.
LasotaParams lasota_params(ScalarFn delta, ScalarFn p, double gamma,
                           double delta_minus);

/// Forward simulation from y(t_start) = y0: per interval the equation is
/// linear in y(t) with y([t]) frozen, so each interval is integrated in
/// closed form through the transition tables.  Positive whenever y0 >= 0.
HybridSolution simulate(const LasotaParams& params, double y0,
                        const TimeGrid& grid, int substeps = 4);

struct ErgodicRow {
    std::int64_t tau;
    std::int64_t t;
    double value;  ///< truncated integral of |E(t+tau, s+tau) - E(t, s)| ds
};

struct ErgodicTable {
    std::vector<ErgodicRow> rows;
    /// max over the outer half of the t range, per tau (limsup proxy)
    std::vector<std::pair<std::int64_t, double>> limsup_proxy;
    std::int64_t depth = 0;  ///< integral truncated at s = t - depth
};

/// Shift sensitivity of the decaying kernel E(t,s) = exp(-int_s^t delta):
/// for each lag tau and tail time t, the truncated integral
/// int_{t-L}^{t} |E(t+tau, s+tau) - E(t, s)| ds.  The truncation depth L
/// follows from the exponential decay rate delta_minus.
ErgodicTable ergodic_kernel_scan(const ScalarFn& delta,
                                 const std::vector<std::int64_t>& taus,
                                 std::int64_t T0, std::int64_t T,
                                 double delta_minus, double tol = 1e-8);

/// Finite-window mean (1/(2T)) int_{-T}^{T} g.
double bohr_mean(const ScalarFn& g, double T = 200.0);

struct LasotaSolveResult {
    HybridSolution psi;
    double kappa = 0.0;       ///< gamma * measured kernel gain
    double gamma_star = 0.0;  ///< contraction threshold 1 / gain
    int iterations = 0;
    double residual = 0.0;
};

/// The unique positive bounded solution by fixed point: each sweep solves the
/// linear equation with forcing p(t) f_prod(psi([t])) through the dichotomy
/// pipeline.  Throws NoContraction when gamma >= gamma_star.
LasotaSolveResult rap_positive_solution(const LasotaParams& params,
                                        const TimeGrid& grid, double tol = 1e-9,
                                        int substeps = 4, int max_iter = 200);

}  // namespace depca
