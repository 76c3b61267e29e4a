#include "depca/lasota.hpp"

#include <cmath>

#include "depca/errors.hpp"
#include "depca/parallel.hpp"
#include "depca/reduction.hpp"

namespace depca {

namespace {

double gl5(const ScalarFn& fn, double a, double b) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
        s += GaussLegendre5::weights[i] * fn(a + (b - a) * GaussLegendre5::nodes[i]);
    return (b - a) * s;
}

void check_positive(const LasotaParams& params, const TimeGrid& grid) {
    if (params.gamma < 0.0) throw ConfigError("lasota: gamma must be >= 0");
    if (!params.delta || !params.p || !params.f_prod)
        throw ConfigError("lasota: delta, p and f_prod must all be set");
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        double t = grid.node(k).value();
        if (!(params.delta(t) > 0.0))
            throw ConfigError("lasota: delta(t) must stay positive (t=" +
                              std::to_string(t) + ")");
        if (!(params.p(t) > 0.0))
            throw ConfigError("lasota: p(t) must stay positive (t=" +
                              std::to_string(t) + ")");
    }
}

CoefficientSystem scalar_system(const LasotaParams& params, const TimeGrid& grid) {
    ScalarFn delta = params.delta, p = params.p;
    MatrixFn A = [delta](double t) { return Mat::Constant(1, 1, -delta(t)).eval(); };
    MatrixFn B = [](double) { return Mat::Zero(1, 1).eval(); };
    VectorFn f = [p](double t) { return Vec::Constant(1, p(t)).eval(); };
    return validate_system(1, A, B, f, grid);
}

}  // namespace

LasotaParams lasota_params(ScalarFn delta, ScalarFn p, double gamma,
                           double delta_minus) {
    LasotaParams params;
    params.delta = std::move(delta);
    params.p = std::move(p);
    params.gamma = gamma;
    params.f_prod = [gamma](double x) { return std::exp(-gamma * x); };
    params.delta_minus = delta_minus;
    return params;
}

HybridSolution simulate(const LasotaParams& params, double y0,
                        const TimeGrid& grid, int substeps) {
    if (y0 < 0.0) throw ConfigError("simulate: y0 must be >= 0");
    check_positive(params, grid);
    CoefficientSystem sys = scalar_system(params, grid);
    HybridKernel kernel = hybrid_kernels(sys, grid, substeps);
    auto table = kernel.forcing_table(sys.f);

    const std::int64_t m = grid.subdivisions();
    HybridSolution out(grid, 1);
    out.at_node(0) = Vec::Constant(1, y0);
    for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n) {
        std::int64_t base = grid.index_of_integer(n);
        std::int64_t unit = n - grid.t_start();
        const UnitTable& u = kernel.transition().unit(n);
        Vec yn = out.at_node(base);
        double c = params.f_prod(yn(0));
        for (std::int64_t k = 1; k <= m; ++k)
            out.at_node(base + k) =
                u.U[static_cast<size_t>(k)] *
                (yn + table[static_cast<size_t>(unit)][static_cast<size_t>(k)] * c);
    }
    return out;
}

ErgodicTable ergodic_kernel_scan(const ScalarFn& delta,
                                 const std::vector<std::int64_t>& taus,
                                 std::int64_t T0, std::int64_t T,
                                 double delta_minus, double tol) {
    if (!(delta_minus > 1e-6))
        throw ConfigError(
            "ergodic_kernel_scan: mean of delta too close to 0, the integral "
            "tail cannot be truncated");
    if (T0 >= T) throw ConfigError("ergodic_kernel_scan: need T0 < T");
    auto L = static_cast<std::int64_t>(std::ceil(std::log(2.0 / tol) / delta_minus));
    std::int64_t tau_max = 0;
    for (std::int64_t tau : taus) {
        if (tau < 0) throw ConfigError("ergodic_kernel_scan: lags must be >= 0");
        tau_max = std::max(tau_max, tau);
    }

    // cumulative integral of delta at the integers of the covered span
    const std::int64_t d_lo = -T - L, d_hi = T + tau_max;
    std::vector<double> D(static_cast<size_t>(d_hi - d_lo + 1), 0.0);
    for (std::int64_t n = d_lo; n < d_hi; ++n)
        D[static_cast<size_t>(n - d_lo + 1)] =
            D[static_cast<size_t>(n - d_lo)] +
            gl5(delta, static_cast<double>(n), static_cast<double>(n + 1));
    auto D_at = [&](std::int64_t n, double s) {
        return D[static_cast<size_t>(n - d_lo)] +
               gl5(delta, static_cast<double>(n), s);
    };

    std::vector<std::int64_t> t_samples;
    std::int64_t stride = std::max<std::int64_t>(1, (T - T0) / 8);
    for (std::int64_t t = T0; t <= T; t += stride) {
        t_samples.push_back(t);
        t_samples.push_back(-t);
    }

    ErgodicTable table;
    table.depth = L;
    table.rows.resize(taus.size() * t_samples.size());
    parallel_for(static_cast<std::int64_t>(table.rows.size()), [&](std::int64_t i) {
        std::int64_t tau = taus[static_cast<size_t>(i) / t_samples.size()];
        std::int64_t t = t_samples[static_cast<size_t>(i) % t_samples.size()];
        double Dt = D[static_cast<size_t>(t - d_lo)];
        double Dts = D[static_cast<size_t>(t + tau - d_lo)];
        double sum = 0.0;
        for (std::int64_t a = t - L; a < t; ++a) {
            double cell = 0.0;
            for (int j = 0; j < 5; ++j) {
                double s = static_cast<double>(a) + GaussLegendre5::nodes[j];
                double plain = std::exp(-(Dt - D_at(a, s)));
                double shifted = std::exp(
                    -(Dts - D_at(a + tau, s + static_cast<double>(tau))));
                cell += GaussLegendre5::weights[j] * std::abs(shifted - plain);
            }
            sum += cell;
        }
        table.rows[static_cast<size_t>(i)] = ErgodicRow{tau, t, sum};
    });

    std::int64_t outer = (T0 + T) / 2;
    for (std::int64_t tau : taus) {
        double proxy = 0.0;
        for (const auto& row : table.rows)
            if (row.tau == tau && std::llabs(row.t) >= outer)
                proxy = std::max(proxy, row.value);
        table.limsup_proxy.emplace_back(tau, proxy);
    }
    return table;
}

double bohr_mean(const ScalarFn& g, double T) {
    if (!(T > 0.0)) throw ConfigError("bohr_mean: T must be > 0");
    auto cells = static_cast<std::int64_t>(std::ceil(2.0 * T));
    double h = 2.0 * T / static_cast<double>(cells);
    double sum = 0.0;
    for (std::int64_t i = 0; i < cells; ++i)
        sum += gl5(g, -T + static_cast<double>(i) * h,
                   -T + static_cast<double>(i + 1) * h);
    return sum / (2.0 * T);
}

LasotaSolveResult rap_positive_solution(const LasotaParams& params,
                                        const TimeGrid& grid, double tol,
                                        int substeps, int max_iter) {
    check_positive(params, grid);
    double mean = bohr_mean(params.delta,
                            static_cast<double>(std::max(std::llabs(grid.t_start()),
                                                         std::llabs(grid.t_end()))));
    if (!(mean > params.delta_minus))
        throw ConfigError("rap_positive_solution: window mean of delta (" +
                          std::to_string(mean) + ") does not exceed delta_minus");

    CoefficientSystem sys = scalar_system(params, grid);
    HybridKernel kernel = hybrid_kernels(sys, grid, substeps);
    DiscreteSystem disc = reduce(kernel, sys);

    DichotomyData dd = detect_dichotomy(disc, Mat::Ones(1, 1));

    // linear response to forcing p: its sup is the kernel gain of the
    // fixed-point map, so gamma * gain < 1 is the contraction condition
    auto bs0 = bounded_solution(disc, dd, 0.1 * tol);
    HybridSolution lin = reconstruct(kernel, sys, bs0.y, 1e-5);
    double gain = lin.sup_norm();
    LasotaSolveResult result{HybridSolution(lin.grid(), 1), params.gamma * gain,
                             1.0 / gain, 0, 0.0};
    if (result.kappa >= 1.0)
        throw NoContraction("rap_positive_solution: gamma=" +
                            std::to_string(params.gamma) +
                            " is not below the contraction threshold gamma*=" +
                            std::to_string(result.gamma_star));

    std::int64_t lo = bs0.y.n_min() + 2, hi = bs0.y.n_max() - 2;
    if (lo >= hi)
        throw WindowTooSmall(
            "rap_positive_solution: grid too small for the series truncation");

    const Eigen::Index q = 1;
    HybridSolution psi(grid, q);  // current iterate, zero near the edges
    auto forcing = [&](double u) {
        std::int64_t fl = floor_anchor(u);
        return Vec::Constant(1, params.p(u) *
                                    params.f_prod(psi.at_integer(fl)(0)))
            .eval();
    };

    std::vector<Mat> C_cache;
    for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n)
        C_cache.push_back(kernel.C(n));

    // iterate on the full grid (edge-clamped Green sums) and report only the
    // interior [lo, hi], where the edge contamination has decayed below tol
    std::int64_t inner_base = grid.index_of_integer(lo);
    TimeGrid inner_grid(lo, hi, grid.subdivisions());
    double residual = 0.0;
    int iter = 0;
    for (;;) {
        ++iter;
        auto table = kernel.forcing_table(forcing);
        DiscreteSystem forced(grid.t_start(), grid.t_end(), q);
        for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n) {
            forced.C(n) = C_cache[static_cast<size_t>(n - grid.t_start())];
            forced.h(n) = kernel.h(n, table);
        }
        SequenceWindow anchors = clamped_green_series(forced, dd, 0.1 * tol,
                                                      grid.t_start(), grid.t_end());
        HybridSolution next = reconstruct_with_forcing(kernel, forcing, anchors, 1e-5);
        residual = 0.0;
        for (std::int64_t k = 0; k < grid.size(); ++k)
            residual =
                std::max(residual, (next.at_node(k) - psi.at_node(k)).norm());
        psi = next;
        if (residual <= tol) break;
        if (iter >= max_iter)
            throw NonConvergence("rap_positive_solution: no convergence after " +
                                 std::to_string(max_iter) + " iterations");
    }

    result.psi = HybridSolution(inner_grid, q);
    for (std::int64_t k = 0; k < inner_grid.size(); ++k) {
        result.psi.at_node(k) = psi.at_node(inner_base + k);
        if (!(result.psi.at_node(k)(0) > 0.0))
            throw NumericBlowup(
                "rap_positive_solution: fixed point lost positivity at node " +
                std::to_string(k));
    }
    result.iterations = iter;
    result.residual = residual;
    return result;
}

}  // namespace depca
