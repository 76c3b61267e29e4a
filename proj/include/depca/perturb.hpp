#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "depca/depca.hpp"
#include "depca/dichotomy.hpp"

namespace depca {

/// Perturbing term g(t, x, y, nu) of a perturbed system; y receives the state
/// at the integer part of t.  g(., ., ., 0) must vanish.
using PerturbFn = std::function<Vec(double, const Vec&, const Vec&, double)>;

struct Perturbation {
    PerturbFn g;
    double nu = 0.0;
    double r = 1.0;       ///< neighborhood radius around the reference solution
    double M0 = 0.0;      ///< measured Lipschitz proxy of g on the r-ball
    double g_norm = 0.0;  ///< measured sup of ||g|| on the r-ball
};

/// Measure M0 and g_norm by seeded random sampling of (t, point-pair) draws
/// in the r-ball around the path center(t) (and center(floor t) for the
/// second argument).  M0 is the largest observed ratio
/// ||g(t,x1,y1) - g(t,x2,y2)|| / max(||x1-x2||, ||y1-y2||).
Perturbation measure_perturbation(PerturbFn g, double nu, double r,
                                  const TimeGrid& grid,
                                  const std::function<Vec(double)>& center,
                                  std::uint64_t seed = 12345,
                                  int samples = 10000);

/// Fixed-point run record.  The a-priori factor kappa comes from the measured
/// constants; the certificate is issued only when kappa < 1 and the radius
/// check holds.  When kappa >= 1 the iteration still runs (the bound is
/// conservative) and diverging residuals raise NoContraction.
struct ContractionCertificate {
    double kappa = 0.0;           ///< a-priori contraction factor
    double kappa_observed = 0.0;  ///< largest residual decay ratio seen
    bool radius_check = false;
    bool issued = false;
    int iterations = 0;
    double final_residual = 0.0;
};

struct DiscreteFixedPoint {
    SequenceWindow psi;  ///< the perturbed solution (reference + correction)
    ContractionCertificate cert;
};

/// Solve x(n+1) = C(n) x(n) + h(n) + g(n, x(n), x(n), nu) around the bounded
/// reference solution xi of the unperturbed system.  xi must cover the full
/// discrete window; the result covers the series-truncation interior.
DiscreteFixedPoint solve_perturbed_discrete(const DiscreteSystem& disc,
                                            const DichotomyData& dd,
                                            const Perturbation& pert,
                                            const SequenceWindow& xi,
                                            double tol = 1e-9, int max_iter = 200,
                                            bool strict = false);

struct HybridFixedPoint {
    HybridSolution psi;
    ContractionCertificate cert;
};

/// Solve x'(t) = A x + B x([t]) + f + g(t, x(t), x([t]), nu) around the
/// bounded reference solution xi (defined on the kernel grid).  Each sweep
/// pushes the current forcing through reduction, the Green series and
/// reconstruction.
HybridFixedPoint solve_perturbed_depca(const CoefficientSystem& system,
                                       const HybridKernel& kernel,
                                       const DichotomyData& dd,
                                       const Perturbation& pert,
                                       const HybridSolution& xi,
                                       double tol = 1e-9, int max_iter = 200,
                                       bool strict = false);

/// Right-hand side f(t, x, y) of a nonlinear system x'(t) = f(t, x(t), x([t])).
using NonlinearRhs = std::function<Vec(double, const Vec&, const Vec&)>;

/// Central-difference Jacobians of f in its second / third argument.
Mat jacobian_x(const NonlinearRhs& f, double t, const Vec& x, const Vec& y,
               double h = 1e-5);
Mat jacobian_y(const NonlinearRhs& f, double t, const Vec& x, const Vec& y,
               double h = 1e-5);

/// Largest relative disagreement between the h and h/2 central differences
/// over both Jacobians (step-halving self check).
double jacobian_self_check(const NonlinearRhs& f, double t, const Vec& x,
                           const Vec& y, double h = 1e-5);

/// Solve the nonlinear equation in a ball of radius r around the known
/// solution xi: linearize along xi with finite-difference Jacobians, move the
/// Taylor remainder into a perturbing term, and run the fixed point on the
/// correction.  user_P is required when the variational reduction has
/// variable coefficients.
HybridFixedPoint solve_nonlinear(const NonlinearRhs& f, const HybridSolution& xi,
                                 double r, double tol = 1e-9, int substeps = 4,
                                 std::optional<Mat> user_P = std::nullopt,
                                 int max_iter = 200, std::uint64_t seed = 12345);

}  // namespace depca
