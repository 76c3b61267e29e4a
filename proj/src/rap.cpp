#include "depca/rap.hpp"

#include <algorithm>
#include <cmath>

#include "depca/coefficients.hpp"
#include "depca/errors.hpp"
#include "depca/parallel.hpp"

namespace depca {

namespace {

/// Reject sequences whose magnitude grows steadily toward the window edges.
/// Deciles of |n| with strictly increasing sups and a doubling from first to
/// last decile indicate unbounded growth, which the scan cannot interpret.
void check_bounded(const SequenceWindow& u, std::int64_t range) {
    if (range < 20) return;
    std::vector<double> decile(10, 0.0);
    for (std::int64_t n = -range; n <= range; ++n) {
        if (!u.contains(n)) continue;
        std::int64_t d = std::min<std::int64_t>(9, (std::llabs(n) * 10) / range);
        decile[static_cast<size_t>(d)] =
            std::max(decile[static_cast<size_t>(d)], u.at(n).norm());
    }
    bool increasing = true;
    for (int d = 1; d < 10; ++d)
        if (decile[static_cast<size_t>(d)] <= decile[static_cast<size_t>(d - 1)])
            increasing = false;
    if (increasing && decile[9] > 2.0 * decile[0])
        throw ConfigError(
            "scan: sequence magnitude grows across the whole window; the "
            "translation-number scan requires a bounded sequence");
}

/// Accepted-lag bookkeeping shared by the sequence and function scans.
/// variation[tau] indexed 0..tau_max.
void finish_report(RapReport& rep, const std::vector<double>& variation,
                   std::int64_t tau_max) {
    for (std::int64_t tau = 0; tau <= tau_max; ++tau) {
        rep.remote_variation[tau] = variation[static_cast<size_t>(tau)];
        if (variation[static_cast<size_t>(tau)] < rep.epsilon)
            rep.taus_found.push_back(tau);
    }
    auto max_gap_at = [&](double eps) {
        std::int64_t prev = -1, gap = 0;
        for (std::int64_t tau = 0; tau <= tau_max; ++tau) {
            if (variation[static_cast<size_t>(tau)] >= eps) continue;
            gap = std::max(gap, prev < 0 ? tau : tau - prev);
            prev = tau;
        }
        // trailing gap, so a cluster near 0 cannot pass alone
        gap = std::max(gap, prev < 0 ? tau_max + 1 : tau_max - prev);
        return gap;
    };
    rep.max_gap = max_gap_at(rep.epsilon);
    if (rep.max_gap <= rep.density_bound) {
        rep.verdict = "pass";
    } else if (max_gap_at(2.0 * rep.epsilon) <= rep.density_bound) {
        rep.verdict = "inconclusive";
        rep.note = "accepted lags too sparse at epsilon but dense at 2*epsilon; "
                   "window too short to decide";
    } else {
        rep.verdict = "fail";
    }
}

}  // namespace

RapReport scan_sequence(const SequenceWindow& u, double epsilon, std::int64_t T0,
                        std::int64_t T, std::int64_t tau_max,
                        std::optional<std::int64_t> density_bound) {
    if (epsilon <= 0.0) throw ConfigError("scan_sequence: epsilon must be > 0");
    if (T0 < 0 || T0 >= T) throw ConfigError("scan_sequence: need 0 <= T0 < T");
    if (tau_max < 1) throw ConfigError("scan_sequence: tau_max must be >= 1");
    std::int64_t range = T + tau_max;
    if (u.n_min() > -range || u.n_max() < range)
        throw WindowTooSmall("scan_sequence: window must cover [" +
                             std::to_string(-range) + ", " + std::to_string(range) +
                             "]");
    check_bounded(u, range);

    RapReport rep;
    rep.epsilon = epsilon;
    rep.T0 = T0;
    rep.T = T;
    rep.density_bound = density_bound.value_or(std::max<std::int64_t>(1, tau_max / 10));

    std::vector<double> variation(static_cast<size_t>(tau_max + 1), 0.0);
    parallel_for(tau_max + 1, [&](std::int64_t tau) {
        double v = 0.0;
        for (std::int64_t n = T0; n <= T; ++n) {
            v = std::max(v, (u.at(n + tau) - u.at(n)).norm());
            v = std::max(v, (u.at(-n + tau) - u.at(-n)).norm());
        }
        variation[static_cast<size_t>(tau)] = v;
    });
    finish_report(rep, variation, tau_max);
    return rep;
}

RapReport scan_function(const HybridSolution& x, double epsilon, std::int64_t T0,
                        std::int64_t T, std::int64_t tau_max, ScanMode mode,
                        std::optional<std::int64_t> density_bound) {
    if (epsilon <= 0.0) throw ConfigError("scan_function: epsilon must be > 0");
    if (T0 < 0 || T0 >= T) throw ConfigError("scan_function: need 0 <= T0 < T");
    if (tau_max < 1) throw ConfigError("scan_function: tau_max must be >= 1");
    const TimeGrid& grid = x.grid();
    std::int64_t range = T + tau_max;
    if (grid.t_start() > -range || grid.t_end() < range)
        throw WindowTooSmall("scan_function: grid must cover [" +
                             std::to_string(-range) + ", " + std::to_string(range) +
                             "]");

    RapReport rep;
    rep.epsilon = epsilon;
    rep.T0 = T0;
    rep.T = T;
    rep.density_bound = density_bound.value_or(std::max<std::int64_t>(1, tau_max / 10));

    const std::int64_t m = grid.subdivisions();
    if (mode == ScanMode::RAP && m > 1) {
        // continuity prefilter: a jump at an integer that dwarfs the
        // within-interval increments marks a function of [t]
        double inner_step = 0.0, integer_jump = 0.0;
        for (std::int64_t k = 1; k < grid.size(); ++k) {
            double step = (x.at_node(k) - x.at_node(k - 1)).norm();
            if (grid.node(k).is_integer())
                integer_jump = std::max(integer_jump, step);
            else
                inner_step = std::max(inner_step, step);
        }
        if (integer_jump > 10.0 * (inner_step + 1e-12)) {
            rep.verdict = "fail";
            rep.note = "continuity prefilter: jump at integer times (" +
                       std::to_string(integer_jump) + " vs within-interval step " +
                       std::to_string(inner_step) +
                       "); use ZRAP mode for functions of [t]";
            rep.max_gap = tau_max + 1;
            return rep;
        }
    }

    std::int64_t k_lo = grid.index_of_integer(-T);
    std::int64_t k_hi = grid.index_of_integer(T);
    std::int64_t k_tail = grid.index_of_integer(T0) - grid.index_of_integer(0);
    std::int64_t k_mid = grid.index_of_integer(0);

    std::vector<double> variation(static_cast<size_t>(tau_max + 1), 0.0);
    parallel_for(tau_max + 1, [&](std::int64_t tau) {
        std::int64_t shift = tau * m;
        double v = 0.0;
        for (std::int64_t k = k_lo; k <= k_hi; ++k) {
            if (std::llabs(k - k_mid) < k_tail) continue;
            v = std::max(v, (x.at_node(k + shift) - x.at_node(k)).norm());
        }
        variation[static_cast<size_t>(tau)] = v;
    });
    finish_report(rep, variation, tau_max);
    return rep;
}

HybridSolution interpolate_sequence(const SequenceWindow& u, std::int64_t m) {
    if (u.n_min() >= u.n_max())
        throw ConfigError("interpolate_sequence: need at least two sequence points");
    TimeGrid grid(u.n_min(), u.n_max(), m);
    HybridSolution out(grid, u.dim());
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        GridNode node = grid.node(k);
        double theta = static_cast<double>(node.num) / static_cast<double>(node.den);
        if (node.num == 0) {
            out.at_node(k) = u.at(node.base);
        } else {
            out.at_node(k) =
                u.at(node.base) + theta * (u.at(node.base + 1) - u.at(node.base));
        }
    }
    return out;
}

SequenceWindow demo_sequence(std::int64_t n_min, std::int64_t n_max) {
    SequenceWindow u(n_min, n_max, 1);
    for (std::int64_t n = n_min; n <= n_max; ++n)
        u.at(n)(0) = rap_demo_value(static_cast<double>(n));
    return u;
}

}  // namespace depca
