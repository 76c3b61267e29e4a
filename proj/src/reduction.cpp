#include "depca/reduction.hpp"

#include "depca/errors.hpp"

namespace depca {

DiscreteSystem::DiscreteSystem(std::int64_t n_min, std::int64_t n_max, Eigen::Index q)
    : n_min_(n_min), n_max_(n_max), q_(q) {
    if (n_min >= n_max) throw ConfigError("DiscreteSystem: need n_min < n_max");
    auto len = static_cast<size_t>(n_max - n_min);
    C_.assign(len, Mat::Identity(q, q));
    h_.assign(len, Vec::Zero(q));
}

const Mat& DiscreteSystem::C(std::int64_t n) const {
    if (n < n_min_ || n >= n_max_)
        throw WindowTooSmall("DiscreteSystem: C(" + std::to_string(n) +
                             ") outside window [" + std::to_string(n_min_) + ", " +
                             std::to_string(n_max_ - 1) + "]");
    return C_[static_cast<size_t>(n - n_min_)];
}
Mat& DiscreteSystem::C(std::int64_t n) {
    return const_cast<Mat&>(static_cast<const DiscreteSystem&>(*this).C(n));
}
const Vec& DiscreteSystem::h(std::int64_t n) const {
    if (n < n_min_ || n >= n_max_)
        throw WindowTooSmall("DiscreteSystem: h(" + std::to_string(n) +
                             ") outside window");
    return h_[static_cast<size_t>(n - n_min_)];
}
Vec& DiscreteSystem::h(std::int64_t n) {
    return const_cast<Vec&>(static_cast<const DiscreteSystem&>(*this).h(n));
}

double DiscreteSystem::h_sup_norm() const {
    double s = 0.0;
    for (const auto& v : h_) s = std::max(s, v.norm());
    return s;
}

DiscreteSystem DiscreteSystem::constant(const Mat& C, const Vec& h,
                                        std::int64_t n_min, std::int64_t n_max) {
    DiscreteSystem d(n_min, n_max, C.rows());
    for (std::int64_t n = n_min; n < n_max; ++n) {
        d.C(n) = C;
        d.h(n) = h;
    }
    return d;
}

DiscreteSystem reduce(const HybridKernel& kernel, const CoefficientSystem& system) {
    const TimeGrid& grid = kernel.grid();
    DiscreteSystem disc(grid.t_start(), grid.t_end(), system.q);
    auto table = kernel.forcing_table(system.f);
    for (std::int64_t n = grid.t_start(); n < grid.t_end(); ++n) {
        disc.C(n) = kernel.C(n);
        Vec hn = kernel.h(n, table);
        if (!hn.allFinite())
            throw NumericBlowup("reduce: non-finite h(n) at n=" + std::to_string(n));
        disc.h(n) = hn;
    }
    return disc;
}

SequenceWindow iterate(const DiscreteSystem& disc, const Vec& x0, std::int64_t n0,
                       std::int64_t n1) {
    std::int64_t lo = std::min(n0, n1), hi = std::max(n0, n1);
    if (lo < disc.n_min() || hi > disc.n_max())
        throw WindowTooSmall("iterate: requested range outside the discrete window");
    SequenceWindow out(lo, hi, disc.dim());
    out.at(n0) = x0;
    if (n1 > n0) {
        for (std::int64_t n = n0; n < n1; ++n)
            out.at(n + 1) = disc.C(n) * out.at(n) + disc.h(n);
    } else if (n1 < n0) {
        for (std::int64_t n = n0; n > n1; --n) {
            const Mat& C = disc.C(n - 1);
            Eigen::FullPivLU<Mat> lu(C);
            if (!lu.isInvertible())
                throw NearSingularJ("iterate: singular C(n) on backward sweep at n=" +
                                    std::to_string(n - 1));
            out.at(n - 1) = lu.solve(out.at(n) - disc.h(n - 1));
        }
    }
    return out;
}

}  // namespace depca
