#include "depca/transition.hpp"

#include <cmath>
#include <limits>

#include "depca/errors.hpp"

namespace depca {

const double GaussLegendre5::nodes[5] = {
    0.5 * (1.0 - 0.9061798459386640), 0.5 * (1.0 - 0.5384693101056831), 0.5,
    0.5 * (1.0 + 0.5384693101056831), 0.5 * (1.0 + 0.9061798459386640)};
const double GaussLegendre5::weights[5] = {
    0.5 * 0.2369268850561891, 0.5 * 0.4786286704993665, 0.5 * 0.5688888888888889,
    0.5 * 0.4786286704993665, 0.5 * 0.2369268850561891};

Mat rk4_propagate(const MatrixFn& A, Mat M, double t0, double t1, int nsteps) {
    if (nsteps < 1) nsteps = 1;
    const double h = (t1 - t0) / nsteps;
    for (int i = 0; i < nsteps; ++i) {
        double t = t0 + i * h;
        Mat k1 = A(t) * M;
        Mat k2 = A(t + 0.5 * h) * (M + 0.5 * h * k1);
        Mat k3 = A(t + 0.5 * h) * (M + 0.5 * h * k2);
        Mat k4 = A(t + h) * (M + h * k3);
        M += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return M;
}

TransitionKernel::TransitionKernel(TimeGrid grid, std::vector<UnitTable> units,
                                   int substeps)
    : grid_(std::move(grid)), units_(std::move(units)), substeps_(substeps) {
    // k0: sup over tabulated in-interval values and one-step integer chains
    for (const auto& u : units_) {
        for (const auto& m : u.U) k0_ = std::max(k0_, m.operatorNorm());
        for (const auto& m : u.W) k0_ = std::max(k0_, m.operatorNorm());
    }
}

const UnitTable& TransitionKernel::unit(std::int64_t n) const {
    std::int64_t i = n - grid_.t_start();
    if (i < 0 || i >= n_units())
        throw ConfigError("TransitionKernel: unit interval [" + std::to_string(n) +
                          ", " + std::to_string(n + 1) + "] outside grid");
    return units_[static_cast<size_t>(i)];
}

Mat TransitionKernel::phi_int(std::int64_t n2, std::int64_t n1) const {
    const Eigen::Index q = dim();
    if (n2 == n1) return Mat::Identity(q, q);
    if (n2 < n1) return phi_int(n1, n2).inverse();
    Mat P = Mat::Identity(q, q);
    for (std::int64_t j = n1; j < n2; ++j) P = unit(j).U.back() * P;
    return P;
}

Mat TransitionKernel::phi(std::int64_t node_t, std::int64_t node_s) const {
    const std::int64_t m = grid_.subdivisions();
    const Eigen::Index q = dim();
    if (node_t == node_s) return Mat::Identity(q, q);
    if (node_t < node_s) return phi(node_s, node_t).inverse();

    const std::int64_t a = node_s, b = node_t;  // a < b
    const std::int64_t ua = a / m;              // unit index of a (left-closed)
    if (b <= (ua + 1) * m) {
        const auto& u = units_[static_cast<size_t>(ua)];
        return u.U[static_cast<size_t>(b - ua * m)] *
               u.W[static_cast<size_t>(a - ua * m)];
    }
    // b in unit ub (as right endpoint when b is an integer node)
    const std::int64_t ub = (b - 1) / m;
    const auto& ut = units_[static_cast<size_t>(ub)];
    const auto& us = units_[static_cast<size_t>(ua)];
    Mat P = us.U.back() * us.W[static_cast<size_t>(a - ua * m)];  // Phi(ua_end, a)
    P = phi_int(grid_.t_start() + ub, grid_.t_start() + ua + 1) * P;
    return ut.U[static_cast<size_t>(b - ub * m)] * P;
}

TransitionKernel fundamental(const CoefficientSystem& system, const TimeGrid& grid,
                             int substeps) {
    if (substeps < 1) throw ConfigError("fundamental: substeps must be >= 1");
    const Eigen::Index q = system.q;
    const std::int64_t m = grid.subdivisions();
    const double h = grid.step();
    std::vector<UnitTable> units;
    units.reserve(static_cast<size_t>(grid.t_end() - grid.t_start()));

    for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n) {
        UnitTable u;
        u.n = n;
        u.U.reserve(static_cast<size_t>(m + 1));
        u.U.push_back(Mat::Identity(q, q));
        for (std::int64_t k = 0; k < m; ++k) {
            double t0 = static_cast<double>(n) + static_cast<double>(k) * h;
            double t1 = static_cast<double>(n) + static_cast<double>(k + 1) * h;
            if (k + 1 == m) t1 = static_cast<double>(n + 1);
            Mat next = rk4_propagate(system.A, u.U.back(), t0, t1, substeps);
            if (!next.allFinite())
                throw NumericBlowup("fundamental: integrator blow-up on [" +
                                    std::to_string(t0) + ", " + std::to_string(t1) +
                                    "]");
            u.U.push_back(std::move(next));

            // W at the Gauss-Legendre abscissae of this cell
            std::array<Mat, 5> wgl;
            std::array<double, 5> tgl;
            for (int g = 0; g < 5; ++g) {
                double tg = t0 + GaussLegendre5::nodes[g] * (t1 - t0);
                int ns = std::max(1, static_cast<int>(std::ceil(
                                         substeps * GaussLegendre5::nodes[g])));
                Mat Ug = rk4_propagate(system.A, u.U[static_cast<size_t>(k)], t0, tg, ns);
                wgl[static_cast<size_t>(g)] = Ug.inverse();
                tgl[static_cast<size_t>(g)] = tg;
            }
            u.Wgl.push_back(std::move(wgl));
            u.tgl.push_back(tgl);
        }
        u.W.reserve(u.U.size());
        for (const auto& Uk : u.U) u.W.push_back(Uk.inverse());
        units.push_back(std::move(u));
    }
    return TransitionKernel(grid, std::move(units), substeps);
}

HybridKernel::HybridKernel(TransitionKernel kernel, const CoefficientSystem& system,
                           double cond_ceiling)
    : kernel_(std::move(kernel)), cond_ceiling_(cond_ceiling) {
    const Eigen::Index q = kernel_.dim();
    const std::int64_t m = grid().subdivisions();
    const double h = grid().step();
    Q_.reserve(static_cast<size_t>(kernel_.n_units()));
    for (std::int64_t i = 0; i < kernel_.n_units(); ++i) {
        const UnitTable& u = kernel_.unit(grid().t_start() + i);
        std::vector<Mat> Q;
        Q.reserve(static_cast<size_t>(m + 1));
        Q.push_back(Mat::Zero(q, q));
        for (std::int64_t k = 0; k < m; ++k) {
            Mat cell = Mat::Zero(q, q);
            for (int g = 0; g < 5; ++g) {
                double tg = u.tgl[static_cast<size_t>(k)][static_cast<size_t>(g)];
                cell += GaussLegendre5::weights[g] *
                        (u.Wgl[static_cast<size_t>(k)][static_cast<size_t>(g)] *
                         system.B(tg));
            }
            Q.push_back(Q.back() + h * cell);
        }
        Q_.push_back(std::move(Q));
    }
}

std::int64_t HybridKernel::unit_index(std::int64_t n) const {
    std::int64_t i = n - grid().t_start();
    if (i < 0 || i >= kernel_.n_units())
        throw ConfigError("HybridKernel: unit interval outside grid");
    return i;
}

const Mat& HybridKernel::Q(std::int64_t n, std::int64_t k) const {
    return Q_[static_cast<size_t>(unit_index(n))][static_cast<size_t>(k)];
}

namespace {

// locate the closed unit interval containing both nodes
void same_unit(const TimeGrid& grid, std::int64_t node_t, std::int64_t node_s,
               std::int64_t& unit, std::int64_t& kt, std::int64_t& ks) {
    const std::int64_t m = grid.subdivisions();
    std::int64_t lo = std::min(node_t, node_s), hi = std::max(node_t, node_s);
    std::int64_t u = lo / m;
    if (hi > (u + 1) * m)
        throw ConfigError("HybridKernel: J/Z nodes must share a closed unit interval");
    if (u >= (grid.t_end() - grid.t_start())) u = grid.t_end() - grid.t_start() - 1;
    unit = u;
    kt = node_t - u * m;
    ks = node_s - u * m;
}

double cond2(const Mat& M) {
    Eigen::JacobiSVD<Mat> svd(M);
    double smin = svd.singularValues().minCoeff();
    // J = I + integral term, so the natural scale never drops below 1; an
    // absolutely tiny J (possible in low dimension) is as bad as a large
    // spread of singular values
    double smax = std::max(svd.singularValues().maxCoeff(), 1.0);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

}  // namespace

Mat HybridKernel::J(std::int64_t node_t, std::int64_t node_s) const {
    std::int64_t u, kt, ks;
    same_unit(grid(), node_t, node_s, u, kt, ks);
    const UnitTable& ut = kernel_.unit(grid().t_start() + u);
    const auto& Q = Q_[static_cast<size_t>(u)];
    const Eigen::Index q = dim();
    return Mat::Identity(q, q) +
           ut.U[static_cast<size_t>(ks)] *
               (Q[static_cast<size_t>(kt)] - Q[static_cast<size_t>(ks)]);
}

Mat HybridKernel::Z(std::int64_t node_t, std::int64_t node_s) const {
    std::int64_t u, kt, ks;
    same_unit(grid(), node_t, node_s, u, kt, ks);
    const UnitTable& ut = kernel_.unit(grid().t_start() + u);
    Mat phi = ut.U[static_cast<size_t>(kt)] * ut.W[static_cast<size_t>(ks)];
    return phi * J(node_t, node_s);
}

double HybridKernel::cond_J(std::int64_t node_t, std::int64_t node_s) const {
    return cond2(J(node_t, node_s));
}

Mat HybridKernel::C(std::int64_t n) const {
    const std::int64_t m = grid().subdivisions();
    std::int64_t base = grid().index_of_integer(n);
    Mat Jn = J(base + m, base);
    double c = cond2(Jn);
    if (!(c < cond_ceiling_))
        throw NearSingularJ("J(n+1,n) nearly singular at n=" + std::to_string(n) +
                            " (cond ~ " + std::to_string(c) +
                            "): invertibility hypothesis fails numerically");
    const UnitTable& u = kernel_.unit(n);
    return u.U.back() * Jn;
}

std::vector<std::vector<Vec>> HybridKernel::forcing_table(const VectorFn& g) const {
    const Eigen::Index q = dim();
    const std::int64_t m = grid().subdivisions();
    const double h = grid().step();
    std::vector<std::vector<Vec>> table;
    table.reserve(static_cast<size_t>(kernel_.n_units()));
    for (std::int64_t i = 0; i < kernel_.n_units(); ++i) {
        const UnitTable& u = kernel_.unit(grid().t_start() + i);
        std::vector<Vec> Hf;
        Hf.reserve(static_cast<size_t>(m + 1));
        Hf.push_back(Vec::Zero(q));
        for (std::int64_t k = 0; k < m; ++k) {
            Vec cell = Vec::Zero(q);
            for (int gg = 0; gg < 5; ++gg) {
                double tg = u.tgl[static_cast<size_t>(k)][static_cast<size_t>(gg)];
                cell += GaussLegendre5::weights[gg] *
                        (u.Wgl[static_cast<size_t>(k)][static_cast<size_t>(gg)] *
                         g(tg));
            }
            Vec next = Hf.back() + h * cell;
            if (!next.allFinite())
                throw NumericBlowup("forcing_table: non-finite quadrature in unit [" +
                                    std::to_string(u.n) + ", " +
                                    std::to_string(u.n + 1) + "]");
            Hf.push_back(std::move(next));
        }
        table.push_back(std::move(Hf));
    }
    return table;
}

Vec HybridKernel::h(std::int64_t n, const std::vector<std::vector<Vec>>& table) const {
    std::int64_t i = unit_index(n);
    const UnitTable& u = kernel_.unit(n);
    return u.U.back() * table[static_cast<size_t>(i)].back();
}

}  // namespace depca
