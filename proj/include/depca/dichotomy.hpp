#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "depca/reduction.hpp"
#include "depca/sequence.hpp"

namespace depca {

enum class DichotomyProvenance { UserSupplied, Spectral, Fitted };

struct DichotomyOptions {
    double delta_gap = 1e-6;  ///< forbidden band around the unit circle
    /// Fitted case: K is the measured envelope ceiling, so the certified
    /// bound always holds; fit_slack caps how much of the decay budget
    /// (alpha * probe_span, in log units) the ceiling may sit above the
    /// regression line before the exponential model is rejected.
    double fit_slack = 0.5;
    std::int64_t probe_span = 40;  ///< |n-m| range for envelope measurement
};

/// An (alpha, K, P)-exponential dichotomy of x(n+1) = C(n) x(n) on a window:
/// ||G(n,m)|| <= K exp(-alpha |n-m|) for the two-branch discrete Green
/// function.  Holds the conjugated projectors P_n = Phi(n) P Phi(n)^{-1}
/// along the window so Green evaluations never multiply a growing factor
/// against a decaying one.
class DichotomyData {
public:
    /// Build from the window's C(n), the projection at the anchor integer
    /// (0 if the window contains it, else n_min), and the constants.
    DichotomyData(const DiscreteSystem& disc, Mat P, double alpha, double K,
                  DichotomyProvenance provenance);

    double alpha() const { return alpha_; }
    double K() const { return K_; }
    const Mat& P() const { return proj_at(anchor_); }
    DichotomyProvenance provenance() const { return provenance_; }
    std::int64_t n_min() const { return n_min_; }
    std::int64_t n_max() const { return n_max_; }
    std::int64_t anchor() const { return anchor_; }
    Eigen::Index dim() const { return q_; }

    const Mat& C(std::int64_t n) const;
    const Mat& proj_at(std::int64_t n) const;  ///< P_n

    /// Fundamental matrix Phi(n) with Phi(anchor) = I (chained products).
    const Mat& fundamental(std::int64_t n) const;

    /// Discrete Green function
    ///   G(n,m) =  Phi(n,m) P_m        for n >= m,
    ///   G(n,m) = -Phi(n,m) (I - P_m)  for n <  m.
    Mat green(std::int64_t n, std::int64_t m) const;

    /// G(n,k) for all k in [k_lo, k_hi], via the stable one-step recursions
    /// G(n,k-1) = G(n,k) C(k-1) and G(n,k+1) = G(n,k) C(k)^{-1}.
    std::vector<Mat> green_row(std::int64_t n, std::int64_t k_lo,
                               std::int64_t k_hi) const;

    /// Series bound K (1 + e^{-alpha}) / (1 - e^{-alpha}).
    double series_gain() const;

private:
    std::int64_t n_min_, n_max_, anchor_;
    Eigen::Index q_;
    double alpha_, K_;
    DichotomyProvenance provenance_;
    std::vector<Mat> C_;
    std::vector<Mat> proj_;         // P_n for n in [n_min, n_max]
    std::vector<Mat> fundamental_;  // Phi(n) for n in [n_min, n_max]
};

/// Thin view pairing a dichotomy with the window it certifies.
struct GreenFunction {
    const DichotomyData& dichotomy;
    Mat operator()(std::int64_t n, std::int64_t m) const {
        return dichotomy.green(n, m);
    }
};

/// Constant C: spectral projection onto the eigenvalues inside the unit
/// circle, alpha from the spectral gap, K from the measured Green envelope.
/// Variable C: requires a user-supplied projection; (alpha, K) fitted by
/// log-linear regression of the decay envelope, rejected if the bound is
/// violated by more than fit_slack.
DichotomyData detect_dichotomy(const DiscreteSystem& disc,
                               std::optional<Mat> user_P = std::nullopt,
                               const DichotomyOptions& opts = {});

/// Result of the truncated Green series with its truncation metadata.
/// "Unique bounded solution on Z" holds on the window with tail contributions
/// bounded by tol.
struct BoundedSolution {
    SequenceWindow y;
    std::int64_t truncation = 0;  ///< series truncated at |n-k| >= truncation
    double tol = 0.0;
    double bound = 0.0;  ///< K (1+e^{-a})(1-e^{-a})^{-1} ||h||_inf
};

/// y(n) = sum_k G(n,k) h(k), truncated so the tail is <= tol.  Output window
/// defaults to the largest sub-window whose truncated sums stay inside the
/// data; throws WindowTooSmall (naming the needed window) if empty.
BoundedSolution bounded_solution(const DiscreteSystem& disc, const DichotomyData& dd,
                                 double tol = 1e-10,
                                 std::optional<std::int64_t> out_min = std::nullopt,
                                 std::optional<std::int64_t> out_max = std::nullopt);

/// Best-effort Green series on [lo, hi] with the sums clamped to the data
/// actually available.  Near the window edges the missing tail is only
/// O(K e^{-alpha d}) for d the distance to the edge, so fixed-point sweeps
/// can iterate on the full window and report a certified interior.
SequenceWindow clamped_green_series(const DiscreteSystem& disc,
                                    const DichotomyData& dd, double tol,
                                    std::int64_t lo, std::int64_t hi);

struct BisummabilityRow {
    std::int64_t tau;
    std::int64_t n;
    double sum;  ///< truncated sum_k ||G(n+tau, k+tau) - G(n,k)||
};

struct BisummabilityTable {
    std::vector<BisummabilityRow> rows;
    /// max over the largest-|n| half of the scan range, per tau (limsup proxy)
    std::vector<std::pair<std::int64_t, double>> limsup_proxy;
    std::int64_t truncation = 0;
};

/// Finite-window proxy for the bi-summability condition of the Green kernel.
/// Reports the proxy and its window; it does not certify the hypothesis.
BisummabilityTable bisummability_scan(const DichotomyData& dd,
                                      const std::vector<std::int64_t>& taus,
                                      std::int64_t n_lo, std::int64_t n_hi,
                                      double tol = 1e-10);

}  // namespace depca
