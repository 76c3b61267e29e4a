#include "depca/dichotomy.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "depca/errors.hpp"

namespace depca {

DichotomyData::DichotomyData(const DiscreteSystem& disc, Mat P, double alpha,
                             double K, DichotomyProvenance provenance)
    : n_min_(disc.n_min()), n_max_(disc.n_max()), q_(disc.dim()), alpha_(alpha),
      K_(K), provenance_(provenance) {
    if (!(alpha > 0)) throw NoDichotomy("DichotomyData: alpha must be positive");
    if (K < 1.0) throw ConfigError("DichotomyData: K must be >= 1");
    if ((P * P - P).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("DichotomyData: P is not a projection (P^2 != P)");

    anchor_ = (n_min_ <= 0 && 0 <= n_max_) ? 0 : n_min_;

    C_.reserve(static_cast<size_t>(n_max_ - n_min_));
    for (std::int64_t n = n_min_; n < n_max_; ++n) C_.push_back(disc.C(n));

    auto len = static_cast<size_t>(n_max_ - n_min_ + 1);
    proj_.assign(len, Mat());
    fundamental_.assign(len, Mat());
    auto idx = [this](std::int64_t n) { return static_cast<size_t>(n - n_min_); };

    fundamental_[idx(anchor_)] = Mat::Identity(q_, q_);
    for (std::int64_t n = anchor_; n < n_max_; ++n)
        fundamental_[idx(n + 1)] = C(n) * fundamental_[idx(n)];
    for (std::int64_t n = anchor_; n > n_min_; --n)
        fundamental_[idx(n - 1)] =
            Eigen::PartialPivLU<Mat>(C(n - 1)).solve(fundamental_[idx(n)]);

    // When every C(n) equals the same matrix commuting with P the conjugated
    // projectors are all P.  Skipping the chain matters numerically: each
    // conjugation amplifies roundoff by the stable/unstable spectral ratio,
    // which over a long window would swamp the projector entirely.
    bool same_projector = true;
    const Mat& C0 = C_.empty() ? P : C_.front();
    double scale = std::max(1.0, C0.cwiseAbs().maxCoeff());
    for (const Mat& Cn : C_)
        if ((Cn - C0).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            same_projector = false;
            break;
        }
    if (same_projector && (C0 * P - P * C0).cwiseAbs().maxCoeff() > 1e-9 * scale)
        same_projector = false;

    if (same_projector) {
        for (auto& Pn : proj_) Pn = P;
        return;
    }

    // nudge a drifting product back to an idempotent
    auto clean = [](Mat& M) { M = 3.0 * M * M - 2.0 * M * M * M; };
    proj_[idx(anchor_)] = P;
    for (std::int64_t n = anchor_; n < n_max_; ++n) {
        const Mat& Cn = C(n);
        // P_{n+1} = C(n) P_n C(n)^{-1}, via C(n)^T x = (C(n) P_n)^T
        Eigen::PartialPivLU<Mat> luT(Cn.transpose());
        proj_[idx(n + 1)] =
            luT.solve((Cn * proj_[idx(n)]).transpose().eval()).transpose();
        clean(proj_[idx(n + 1)]);
    }
    for (std::int64_t n = anchor_; n > n_min_; --n) {
        const Mat& Cn = C(n - 1);
        proj_[idx(n - 1)] = Eigen::PartialPivLU<Mat>(Cn).solve(proj_[idx(n)]) * Cn;
        clean(proj_[idx(n - 1)]);
    }
}

const Mat& DichotomyData::C(std::int64_t n) const {
    if (n < n_min_ || n >= n_max_)
        throw WindowTooSmall("DichotomyData: C(" + std::to_string(n) +
                             ") outside window");
    return C_[static_cast<size_t>(n - n_min_)];
}

const Mat& DichotomyData::proj_at(std::int64_t n) const {
    if (n < n_min_ || n > n_max_)
        throw WindowTooSmall("DichotomyData: projector outside window");
    return proj_[static_cast<size_t>(n - n_min_)];
}

const Mat& DichotomyData::fundamental(std::int64_t n) const {
    if (n < n_min_ || n > n_max_)
        throw WindowTooSmall("DichotomyData: fundamental outside window");
    return fundamental_[static_cast<size_t>(n - n_min_)];
}

double DichotomyData::series_gain() const {
    double e = std::exp(-alpha_);
    return K_ * (1.0 + e) / (1.0 - e);
}

Mat DichotomyData::green(std::int64_t n, std::int64_t m) const {
    // Re-project after every step: the exact product lies in the range of the
    // projector (resp. its complement), and without the re-projection the
    // roundoff component in the other subspace grows geometrically.
    if (n >= m) {
        Mat G = proj_at(m);
        for (std::int64_t j = m; j < n; ++j) G = proj_at(j + 1) * (C(j) * G);
        return G;
    }
    Mat G = -(Mat::Identity(q_, q_) - proj_at(m));
    for (std::int64_t j = m; j > n; --j) {
        G = Eigen::PartialPivLU<Mat>(C(j - 1)).solve(G);
        G = (Mat::Identity(q_, q_) - proj_at(j - 1)) * G;
    }
    return G;
}

std::vector<Mat> DichotomyData::green_row(std::int64_t n, std::int64_t k_lo,
                                          std::int64_t k_hi) const {
    if (k_lo > k_hi) return {};
    std::vector<Mat> row(static_cast<size_t>(k_hi - k_lo + 1));
    auto put = [&](std::int64_t k, Mat G) {
        row[static_cast<size_t>(k - k_lo)] = std::move(G);
    };
    // branch k <= n: G(n,k-1) = G(n,k) C(k-1), from G(n,n) = P_n; the
    // trailing projector keeps the product in the decaying subspace (see
    // green() for why the re-projection is load-bearing)
    if (k_lo <= n) {
        std::int64_t start = std::min(n, k_hi);
        Mat G = green(n, start);
        put(start, G);
        for (std::int64_t k = start; k > k_lo; --k) {
            G = (G * C(k - 1)) * proj_at(k - 1);
            put(k - 1, G);
        }
    }
    // branch k > n: G(n,k+1) = G(n,k) C(k)^{-1}, from G(n,n+1) = -(I-P_n) C(n)^{-1}
    if (k_hi > n) {
        std::int64_t start = std::max(n + 1, k_lo);
        Mat G = green(n, start);
        put(start, G);
        for (std::int64_t k = start; k < k_hi; ++k) {
            G = Eigen::PartialPivLU<Mat>(C(k).transpose())
                    .solve(G.transpose())
                    .transpose();
            G = G * (Mat::Identity(q_, q_) - proj_at(k + 1));
            put(k + 1, G);
        }
    }
    return row;
}

namespace {

bool is_constant(const DiscreteSystem& disc, Mat& C_out) {
    C_out = disc.C(disc.n_min());
    double scale = std::max(1.0, C_out.cwiseAbs().maxCoeff());
    for (std::int64_t n = disc.n_min() + 1; n < disc.n_max(); ++n)
        if ((disc.C(n) - C_out).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
    return true;
}

/// max_n ||G(n, n+-d)|| for d = 0..span on a probe sub-window.
std::vector<double> decay_envelope(const DichotomyData& dd, std::int64_t span) {
    std::vector<double> env(static_cast<size_t>(span + 1), 0.0);
    std::int64_t lo = dd.n_min(), hi = dd.n_max();
    for (std::int64_t n = lo; n <= hi; ++n) {
        std::int64_t k_lo = std::max(lo, n - span);
        std::int64_t k_hi = std::min(hi, n + span);
        auto row = dd.green_row(n, k_lo, k_hi);
        for (std::int64_t k = k_lo; k <= k_hi; ++k) {
            auto d = static_cast<size_t>(std::llabs(n - k));
            env[d] = std::max(env[d],
                              row[static_cast<size_t>(k - k_lo)].operatorNorm());
        }
    }
    return env;
}

}  // namespace

DichotomyData detect_dichotomy(const DiscreteSystem& disc, std::optional<Mat> user_P,
                               const DichotomyOptions& opts) {
    const Eigen::Index q = disc.dim();
    Mat C0;
    const bool constant = is_constant(disc, C0);

    if (constant && !user_P) {
        Eigen::EigenSolver<Mat> es(C0);
        if (es.info() != Eigen::Success)
            throw NoDichotomy("detect_dichotomy: eigenvalue computation failed");
        const auto& lambda = es.eigenvalues();
        double stable_max = 0.0, unstable_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < q; ++i) {
            double mod = std::abs(lambda(i));
            if (std::abs(mod - 1.0) <= opts.delta_gap)
                throw NoDichotomy(
                    "detect_dichotomy: eigenvalue of modulus " + std::to_string(mod) +
                    " inside the unit-circle gap (dichotomy hypothesis fails)");
            if (mod < 1.0)
                stable_max = std::max(stable_max, mod);
            else
                unstable_min = std::min(unstable_min, mod);
        }
        double ratio = 0.0;  // largest boundary-adjacent modulus ratio
        if (stable_max > 0.0) ratio = std::max(ratio, stable_max);
        if (std::isfinite(unstable_min)) ratio = std::max(ratio, 1.0 / unstable_min);
        double alpha = -std::log(ratio);

        // spectral projection onto the stable eigenvalues via the eigenbasis
        Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::VectorXcd sel(q);
        for (Eigen::Index i = 0; i < q; ++i)
            sel(i) = std::abs(lambda(i)) < 1.0 ? 1.0 : 0.0;
        Eigen::MatrixXcd Pc = V * sel.asDiagonal() * V.inverse();
        Mat P = Pc.real();
        // symmetrize the tiny imaginary residue away and re-project
        if ((P * P - P).cwiseAbs().maxCoeff() > 1e-10)
            throw NoDichotomy(
                "detect_dichotomy: spectral projection ill-conditioned "
                "(defective or near-defective C)");

        DichotomyData dd(disc, P, alpha, 1.0, DichotomyProvenance::Spectral);
        // K from the measured envelope (>= 1 by G(n,n) branch sum)
        std::int64_t span =
            std::min<std::int64_t>(opts.probe_span, disc.n_max() - disc.n_min());
        auto env = decay_envelope(dd, span);
        double K = 1.0;
        for (std::int64_t d = 0; d <= span; ++d)
            K = std::max(K, env[static_cast<size_t>(d)] *
                                std::exp(alpha * static_cast<double>(d)));
        return DichotomyData(disc, P, alpha, K, DichotomyProvenance::Spectral);
    }

    if (!user_P)
        throw NoDichotomy(
            "detect_dichotomy: variable C(n) requires a user-supplied projection "
            "(P inference is ill-posed)");

    // Fit (alpha, K) by log-linear regression of the decay envelope.
    DichotomyData probe(disc, *user_P, 1e-3, 1.0,
                        constant ? DichotomyProvenance::UserSupplied
                                 : DichotomyProvenance::Fitted);
    std::int64_t span =
        std::min<std::int64_t>(opts.probe_span, disc.n_max() - disc.n_min());
    auto env = decay_envelope(probe, span);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::int64_t npts = 0;
    for (std::int64_t d = 0; d <= span; ++d) {
        double g = env[static_cast<size_t>(d)];
        if (g <= 0.0) continue;
        double x = static_cast<double>(d), y = std::log(g);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++npts;
    }
    if (npts < 3) throw FitRejected("detect_dichotomy: too few envelope points");
    double denom = static_cast<double>(npts) * sxx - sx * sx;
    double slope = (static_cast<double>(npts) * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / static_cast<double>(npts);
    double alpha = -slope;
    if (!(alpha > 0))
        throw FitRejected("detect_dichotomy: fitted decay rate is not positive");
    // certify with the envelope ceiling, so K e^{-alpha d} dominates every
    // measured point exactly; the regression line only supplies the rate
    double K = 1.0;
    for (std::int64_t d = 0; d <= span; ++d)
        K = std::max(K, env[static_cast<size_t>(d)] *
                            std::exp(alpha * static_cast<double>(d)));
    // the ceiling sits above the central fit by the envelope scatter; if that
    // scatter eats more than fit_slack of the total decay budget over the
    // probe span, a single exponential is the wrong model for this window
    double scatter = std::log(K) - intercept;
    double budget = alpha * static_cast<double>(std::max<std::int64_t>(span, 1));
    if (scatter > opts.fit_slack * budget)
        throw FitRejected(
            "detect_dichotomy: envelope scatter " + std::to_string(scatter) +
            " exceeds " + std::to_string(opts.fit_slack) +
            " of the decay budget " + std::to_string(budget) +
            " (log-linear model rejected)");
    return DichotomyData(disc, *user_P, alpha, K,
                         constant ? DichotomyProvenance::UserSupplied
                                  : DichotomyProvenance::Fitted);
}

BoundedSolution bounded_solution(const DiscreteSystem& disc, const DichotomyData& dd,
                                 double tol, std::optional<std::int64_t> out_min,
                                 std::optional<std::int64_t> out_max) {
    const Eigen::Index q = disc.dim();
    const double h_sup = disc.h_sup_norm();
    BoundedSolution out;
    out.tol = tol;
    out.bound = dd.series_gain() * h_sup;

    if (h_sup == 0.0) {
        std::int64_t lo = out_min.value_or(disc.n_min());
        std::int64_t hi = out_max.value_or(disc.n_max());
        out.y = SequenceWindow(lo, hi, q);
        return out;
    }

    const double alpha = dd.alpha();
    double N_real = (std::log(dd.K() * h_sup) -
                     std::log(tol * (1.0 - std::exp(-alpha)))) /
                    alpha;
    std::int64_t N = std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                                   std::ceil(N_real)));
    out.truncation = N;

    std::int64_t lo = out_min.value_or(disc.n_min() + N);
    std::int64_t hi = out_max.value_or(disc.n_max() - N);
    if (lo > hi)
        throw WindowTooSmall(
            "bounded_solution: window [" + std::to_string(disc.n_min()) + ", " +
            std::to_string(disc.n_max()) + "] too small for truncation depth " +
            std::to_string(N) + "; need at least [" + std::to_string(lo - N) +
            ", " + std::to_string(hi + N) + "]");
    if (lo - N < disc.n_min() || hi + N > disc.n_max())
        throw WindowTooSmall(
            "bounded_solution: requested output window needs data on [" +
            std::to_string(lo - N) + ", " + std::to_string(hi + N) + "]");

    out.y = SequenceWindow(lo, hi, q);
    for (std::int64_t n = lo; n <= hi; ++n) {
        // y(n) = sum_k G(n, k+1) h(k): the forcing h(k) enters the state at
        // k+1, so it is weighted by the Green factor anchored there
        std::int64_t k_lo = std::max(disc.n_min(), n - N);
        std::int64_t k_hi = std::min(disc.n_max() - 1, n + N);
        auto row = dd.green_row(n, k_lo + 1, k_hi + 1);
        Vec y = Vec::Zero(q);
        for (std::int64_t k = k_lo; k <= k_hi; ++k)
            y += row[static_cast<size_t>(k - k_lo)] * disc.h(k);
        if (!y.allFinite())
            throw NumericBlowup("bounded_solution: non-finite series at n=" +
                                std::to_string(n));
        if (y.norm() > out.bound * (1.0 + 1e-9) + 10.0 * tol)
            throw Error("bounded_solution: uniform bound violated at n=" +
                        std::to_string(n) + " (" + std::to_string(y.norm()) + " > " +
                        std::to_string(out.bound) + ")");
        out.y.at(n) = y;
    }
    return out;
}

SequenceWindow clamped_green_series(const DiscreteSystem& disc,
                                    const DichotomyData& dd, double tol,
                                    std::int64_t lo, std::int64_t hi) {
    const Eigen::Index q = disc.dim();
    if (lo < disc.n_min() || hi > disc.n_max() || lo > hi)
        throw WindowTooSmall("clamped_green_series: output window outside data");
    SequenceWindow y(lo, hi, q);
    const double h_sup = disc.h_sup_norm();
    if (h_sup == 0.0) return y;

    const double alpha = dd.alpha();
    double N_real = (std::log(dd.K() * h_sup) -
                     std::log(tol * (1.0 - std::exp(-alpha)))) /
                    alpha;
    std::int64_t N = std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                                   std::ceil(N_real)));
    for (std::int64_t n = lo; n <= hi; ++n) {
        std::int64_t k_lo = std::max(disc.n_min(), n - N);
        std::int64_t k_hi = std::min(disc.n_max() - 1, n + N);
        auto row = dd.green_row(n, k_lo + 1, k_hi + 1);
        Vec v = Vec::Zero(q);
        for (std::int64_t k = k_lo; k <= k_hi; ++k)
            v += row[static_cast<size_t>(k - k_lo)] * disc.h(k);
        if (!v.allFinite())
            throw NumericBlowup("clamped_green_series: non-finite series at n=" +
                                std::to_string(n));
        y.at(n) = v;
    }
    return y;
}

BisummabilityTable bisummability_scan(const DichotomyData& dd,
                                      const std::vector<std::int64_t>& taus,
                                      std::int64_t n_lo, std::int64_t n_hi,
                                      double tol) {
    if (n_lo > n_hi) throw ConfigError("bisummability_scan: empty n range");
    const double alpha = dd.alpha();
    double N_real =
        (std::log(std::max(dd.K(), 1.0)) - std::log(tol * (1.0 - std::exp(-alpha)))) /
        alpha;
    std::int64_t N = std::max<std::int64_t>(1, static_cast<std::int64_t>(
                                                   std::ceil(N_real)));
    BisummabilityTable table;
    table.truncation = N;

    for (std::int64_t tau : taus) {
        // window must cover n +- N and the tau-shifted copies
        std::int64_t need_lo = std::min(n_lo - N, n_lo + tau - N);
        std::int64_t need_hi = std::max(n_hi + N, n_hi + tau + N);
        if (need_lo < dd.n_min() || need_hi > dd.n_max() - 1)
            throw WindowTooSmall(
                "bisummability_scan: tau=" + std::to_string(tau) +
                " needs Green data on [" + std::to_string(need_lo) + ", " +
                std::to_string(need_hi) + "]");
        double proxy = 0.0;
        for (std::int64_t n = n_lo; n <= n_hi; ++n) {
            auto base = dd.green_row(n, n - N, n + N);
            auto shifted = dd.green_row(n + tau, n + tau - N, n + tau + N);
            double sum = 0.0;
            for (std::int64_t d = -N; d <= N; ++d)
                sum += (shifted[static_cast<size_t>(d + N)] -
                        base[static_cast<size_t>(d + N)])
                           .operatorNorm();
            table.rows.push_back({tau, n, sum});
            // limsup proxy: the outer half of the scan range by |n|
            std::int64_t mid = (n_lo + n_hi) / 2;
            bool outer = std::llabs(n) >= std::llabs(mid);
            if (outer) proxy = std::max(proxy, sum);
        }
        table.limsup_proxy.emplace_back(tau, proxy);
    }
    return table;
}

}  // namespace depca
