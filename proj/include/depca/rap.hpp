#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "depca/depca.hpp"
#include "depca/sequence.hpp"

namespace depca {

/// Result of a translation-number scan on a finite window.  The verdict is a
/// finite-window proxy, not a proof: "pass" means the accepted lags are dense
/// enough in the scan range, "inconclusive" means the scan failed at epsilon
/// but would pass at 2*epsilon (the window is too short to tell).
struct RapReport {
    double epsilon = 0.0;
    std::vector<std::int64_t> taus_found;
    std::map<std::int64_t, double> remote_variation;  ///< tau -> tail sup
    std::int64_t max_gap = 0;   ///< largest gap between accepted lags
    std::int64_t density_bound = 0;  ///< gap ceiling for a "pass"
    std::int64_t T0 = 0;        ///< tail start
    std::int64_t T = 0;         ///< tail end
    std::string verdict;        ///< "pass", "fail" or "inconclusive"
    std::string note;
};

/// Scan integer lags tau in [0, tau_max] against the tail variation
///   v(tau) = max over |n| in [T0, T] of ||u(n+tau) - u(n)||.
/// A lag is accepted when v(tau) < epsilon.  The window must cover
/// [-(T + tau_max), T + tau_max].  Sequences that grow steadily across the
/// window are rejected (the notion only applies to bounded sequences).
RapReport scan_sequence(const SequenceWindow& u, double epsilon, std::int64_t T0,
                        std::int64_t T, std::int64_t tau_max,
                        std::optional<std::int64_t> density_bound = std::nullopt);

enum class ScanMode {
    RAP,   ///< compare at every grid node; requires continuity at integers
    ZRAP   ///< integer lags, integer-point jumps allowed
};

/// Scan a sampled function at integer lags, comparing grid nodes with
/// |t| in [T0, T].  RAP mode first checks that the samples have no jump at
/// the integers (a function of [t] fails there and gets verdict "fail").
RapReport scan_function(const HybridSolution& x, double epsilon, std::int64_t T0,
                        std::int64_t T, std::int64_t tau_max, ScanMode mode,
                        std::optional<std::int64_t> density_bound = std::nullopt);

/// Piecewise-linear interpolant of a sequence, sampled on an m-subdivision
/// grid.  A lag accepted for u at epsilon/3 is accepted for the interpolant
/// at epsilon.
HybridSolution interpolate_sequence(const SequenceWindow& u, std::int64_t m);

/// The demo sequence cos(n) + cos(sqrt(2) n) + sin(n + sqrt(|n|))
/// + 3n^2/(n^2+1) on [n_min, n_max] (scalar window).
SequenceWindow demo_sequence(std::int64_t n_min, std::int64_t n_max);

}  // namespace depca
