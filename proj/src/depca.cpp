#include "depca/depca.hpp"

#include <cmath>

#include "depca/errors.hpp"

namespace depca {

HybridSolution::HybridSolution(TimeGrid grid, Eigen::Index q)
    : grid_(grid), q_(q),
      values_(static_cast<size_t>(grid.size()), Vec::Zero(q)) {}

Vec HybridSolution::value(double t) const {
    if (!grid_.contains(t)) throw ConfigError("HybridSolution: t outside grid");
    double x = (t - static_cast<double>(grid_.t_start())) *
               static_cast<double>(grid_.subdivisions());
    auto k = static_cast<std::int64_t>(std::floor(x));
    if (k >= grid_.size() - 1) k = grid_.size() - 2;
    double frac = x - static_cast<double>(k);
    return (1.0 - frac) * at_node(k) + frac * at_node(k + 1);
}

SequenceWindow HybridSolution::anchors() const {
    SequenceWindow w(grid_.t_start(), grid_.t_end(), q_);
    for (std::int64_t n = grid_.t_start(); n <= grid_.t_end(); ++n)
        w.at(n) = at_integer(n);
    return w;
}

double HybridSolution::sup_norm() const {
    double s = 0.0;
    for (std::int64_t k = 0; k < grid_.size(); ++k)
        s = std::max(s, at_node(k).norm());
    return s;
}

namespace {

HybridSolution reconstruct_impl(const HybridKernel& kernel,
                                const std::vector<std::vector<Vec>>& f_table,
                                const SequenceWindow& anchors,
                                double continuity_tol) {
    const TimeGrid& full = kernel.grid();
    const std::int64_t m = full.subdivisions();
    const Eigen::Index q = kernel.dim();
    // reconstruct on the overlap of the kernel grid and the anchor window
    std::int64_t lo = std::max(full.t_start(), anchors.n_min());
    std::int64_t hi = std::min(full.t_end(), anchors.n_max());
    if (lo >= hi)
        throw WindowTooSmall("reconstruct: anchors and grid share no unit interval");
    TimeGrid grid(lo, hi, m);

    HybridSolution sol(grid, q);
    for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n) {
        const UnitTable& u = kernel.transition().unit(n);
        const auto& Hf =
            f_table[static_cast<size_t>(n - full.t_start())];
        std::int64_t base = grid.index_of_integer(n);
        const Vec& xn = anchors.at(n);
        for (std::int64_t k = 0; k <= m; ++k) {
            // Z(t,n) = U(t)(I + Q(t)) on [n, n+1]
            Mat Zt = u.U[static_cast<size_t>(k)] *
                     (Mat::Identity(q, q) + kernel.Q(n, k));
            Vec x = Zt * xn +
                    u.U[static_cast<size_t>(k)] * Hf[static_cast<size_t>(k)];
            if (!x.allFinite())
                throw NumericBlowup("reconstruct: non-finite value in unit [" +
                                    std::to_string(n) + ", " + std::to_string(n + 1) +
                                    "]");
            if (k < m) {
                sol.at_node(base + k) = x;
            } else {
                // right limit at the integer n+1; the anchor wins, defect recorded
                double defect = (x - anchors.at(n + 1)).norm();
                sol.max_continuity_defect =
                    std::max(sol.max_continuity_defect, defect);
            }
        }
    }
    sol.at_node(grid.size() - 1) = anchors.at(grid.t_end());
    if (sol.max_continuity_defect > continuity_tol)
        throw Error("reconstruct: continuity defect " +
                    std::to_string(sol.max_continuity_defect) +
                    " exceeds tolerance " + std::to_string(continuity_tol) +
                    " (inconsistent anchors)");
    return sol;
}

}  // namespace

HybridSolution reconstruct(const HybridKernel& kernel,
                           const CoefficientSystem& system,
                           const SequenceWindow& anchors, double continuity_tol) {
    auto sol = reconstruct_impl(kernel, kernel.forcing_table(system.f), anchors,
                                continuity_tol);
    // measured Lipschitz bound of the trajectory; walk the solution's own
    // grid, which may be a sub-window of the kernel grid
    double M0 = 0.0;
    const TimeGrid& grid = sol.grid();
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        double t = grid.node(k).value();
        std::int64_t n = grid.node(k).floor();
        if (n >= grid.t_end()) n = grid.t_end() - 1;
        const Vec x = sol.at_node(k);
        const Vec xf = sol.at_integer(std::min(grid.node(k).floor(), grid.t_end()));
        M0 = std::max(M0, (system.A(t) * x + system.B(t) * xf + system.f(t)).norm());
    }
    sol.lipschitz_bound = M0;
    return sol;
}

HybridSolution reconstruct_with_forcing(const HybridKernel& kernel,
                                        const VectorFn& forcing,
                                        const SequenceWindow& anchors,
                                        double continuity_tol) {
    return reconstruct_impl(kernel, kernel.forcing_table(forcing), anchors,
                            continuity_tol);
}

HybridSolution rap_solution(const CoefficientSystem& system,
                            const HybridKernel& kernel, const DichotomyData& dd,
                            double tol) {
    DiscreteSystem disc = reduce(kernel, system);
    BoundedSolution bs = bounded_solution(disc, dd, tol);
    std::int64_t lo = bs.y.n_min(), hi = bs.y.n_max();
    if (hi <= lo)
        throw WindowTooSmall("rap_solution: inner window collapsed; widen the grid");
    // reconstruct already restricts to the overlap of the grid and the
    // anchors, which is exactly [lo, hi] here
    return reconstruct(kernel, system, bs.y, 10.0 * std::max(tol, 1e-12));
}

namespace {

// product of Z(i+1, i) over i in [i_lo, i_hi), identity when empty
Mat z_chain(const HybridKernel& kernel, std::int64_t i_lo, std::int64_t i_hi) {
    const Eigen::Index q = kernel.dim();
    Mat P = Mat::Identity(q, q);
    const std::int64_t m = kernel.grid().subdivisions();
    for (std::int64_t i = i_lo; i < i_hi; ++i) {
        std::int64_t base = kernel.grid().index_of_integer(i);
        P = kernel.Z(base + m, base) * P;
    }
    return P;
}

}  // namespace

Mat kernel_R(const HybridKernel& kernel, std::int64_t node_t, std::int64_t node_s) {
    if (node_s > node_t) throw ConfigError("kernel_R: need s <= t");
    const TimeGrid& grid = kernel.grid();
    const std::int64_t m = grid.subdivisions();
    GridNode t = grid.node(node_t), s = grid.node(node_s);
    std::int64_t n = t.is_integer() ? t.floor() : t.floor();  // n = [t]
    std::int64_t n_idx = grid.index_of_integer(std::min(n, grid.t_end()));

    if (s.is_integer()) {
        Mat Zt = (node_t == n_idx) ? Mat::Identity(kernel.dim(), kernel.dim())
                                   : kernel.Z(node_t, n_idx);
        return Zt * z_chain(kernel, s.floor(), n);
    }
    if (s.floor() == n) {
        // same unit interval: R = Z(t, n) Z(s, n)^{-1}
        Mat Zs = kernel.Z(node_s, n_idx);
        Eigen::FullPivLU<Mat> lu(Zs);
        if (!lu.isInvertible())
            throw NearSingularJ("kernel_R: Z(s, [s]) not invertible");
        return kernel.Z(node_t, n_idx) * lu.inverse();
    }
    std::int64_t s1 = s.floor() + 1;  // [s] + 1
    std::int64_t s1_idx = grid.index_of_integer(s1);
    Mat Zt = (node_t == n_idx) ? Mat::Identity(kernel.dim(), kernel.dim())
                               : kernel.Z(node_t, n_idx);
    return Zt * z_chain(kernel, s1, n) * kernel.Z(s1_idx, node_s);
}

Mat kernel_G(const HybridKernel& kernel, std::int64_t node_t, std::int64_t node_u,
             std::int64_t node_s) {
    if (!(node_s < node_u && node_u <= node_t))
        throw ConfigError("kernel_G: need s < u <= t");
    const TimeGrid& grid = kernel.grid();
    GridNode t = grid.node(node_t), u = grid.node(node_u), s = grid.node(node_s);
    std::int64_t n = t.floor();  // n = [t]
    std::int64_t n_idx = grid.index_of_integer(n);
    const Eigen::Index q = kernel.dim();

    if (node_u > n_idx) {
        // [t] < u <= t
        return kernel.transition().phi(node_t, node_u);
    }
    Mat Zt = (node_t == n_idx) ? Mat::Identity(q, q) : kernel.Z(node_t, n_idx);

    // interval (i, i+1] containing u (left-limit branch at integer u)
    std::int64_t i = u.is_integer() ? u.floor() - 1 : u.floor();
    std::int64_t i1_idx = grid.index_of_integer(i + 1);

    if (!s.is_integer() && i == s.floor()) {
        // s <= u <= [s]+1
        return Zt * z_chain(kernel, s.floor() + 1, n) *
               kernel.transition().phi(i1_idx, node_u);
    }
    return Zt * z_chain(kernel, i + 1, n) * kernel.transition().phi(i1_idx, node_u);
}

Vec variation_solution(const HybridKernel& kernel, const CoefficientSystem& system,
                       std::int64_t node_t, std::int64_t node_s, const Vec& x_s) {
    if (node_s > node_t) throw ConfigError("variation_solution: need s <= t");
    const TimeGrid& grid = kernel.grid();
    const std::int64_t m = grid.subdivisions();
    GridNode t = grid.node(node_t), s = grid.node(node_s);
    auto f_table = kernel.forcing_table(system.f);
    auto Hf = [&](std::int64_t unit, std::int64_t k) -> const Vec& {
        return f_table[static_cast<size_t>(unit - grid.t_start())]
                      [static_cast<size_t>(k)];
    };

    Mat R = kernel_R(kernel, node_t, node_s);
    Vec x = R * x_s;

    std::int64_t n = t.floor();
    if (!s.is_integer() && s.floor() == n) {
        // same interval: forcing term U(t)Hf(t) - R U(s)Hf(s)
        const UnitTable& un = kernel.transition().unit(n);
        std::int64_t kt = node_t - grid.index_of_integer(n);
        std::int64_t ks = node_s - grid.index_of_integer(n);
        x += un.U[static_cast<size_t>(kt)] * Hf(n, kt) -
             R * (un.U[static_cast<size_t>(ks)] * Hf(n, ks));
        return x;
    }

    std::int64_t i0;  // first whole interval contributing h(i)
    if (s.is_integer()) {
        i0 = s.floor();
    } else {
        i0 = s.floor() + 1;
        // partial first interval: int_s^{[s]+1} Phi([s]+1, u) f(u) du
        const UnitTable& us = kernel.transition().unit(s.floor());
        std::int64_t ks = node_s - grid.index_of_integer(s.floor());
        Vec partial =
            us.U.back() * (Hf(s.floor(), m) - Hf(s.floor(), ks));
        std::int64_t n_idx = grid.index_of_integer(n);
        Mat Zt = (node_t == n_idx) ? Mat::Identity(kernel.dim(), kernel.dim())
                                   : kernel.Z(node_t, n_idx);
        x += Zt * z_chain(kernel, i0, n) * partial;
    }
    std::int64_t n_idx = grid.index_of_integer(n);
    Mat Zt = (node_t == n_idx) ? Mat::Identity(kernel.dim(), kernel.dim())
                               : kernel.Z(node_t, n_idx);
    for (std::int64_t i = i0; i < n; ++i)
        x += Zt * z_chain(kernel, i + 1, n) * kernel.h(i, f_table);
    // tail int_n^t Phi(t,u) f(u) du = U(t) Hf(t)
    if (node_t > n_idx) {
        const UnitTable& un = kernel.transition().unit(n);
        std::int64_t kt = node_t - n_idx;
        x += un.U[static_cast<size_t>(kt)] * Hf(n, kt);
    }
    return x;
}

double scalar_Z(double a, double b, double dt) {
    return std::exp(a * dt) + (b / a) * (std::exp(a * dt) - 1.0);
}

double closed_form_oracle(double a, double b, double c, double x0, double t) {
    if (a == 0.0) throw ConfigError("closed_form_oracle: requires a != 0");
    const double C = scalar_Z(a, b, 1.0);
    const double h = (c / a) * (std::exp(a) - 1.0);
    auto n = static_cast<std::int64_t>(std::floor(t));
    double xn = x0;
    if (n >= 0) {
        for (std::int64_t i = 0; i < n; ++i) xn = C * xn + h;
    } else {
        if (std::abs(C) < 1e-300)
            throw ConfigError("closed_form_oracle: backward step is singular");
        for (std::int64_t i = 0; i > n; --i) xn = (xn - h) / C;
    }
    double frac = t - static_cast<double>(n);
    return scalar_Z(a, b, frac) * xn + (c / a) * (std::exp(a * frac) - 1.0);
}

}  // namespace depca
