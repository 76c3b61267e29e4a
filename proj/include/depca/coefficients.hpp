#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "depca/grid.hpp"
#include "depca/sequence.hpp"

#include <nlohmann/json_fwd.hpp>

namespace depca {

using MatrixFn = std::function<Mat(double)>;
using VectorFn = std::function<Vec(double)>;

/// The data (A, B, f) of x'(t) = A(t)x(t) + B(t)x([t]) + f(t), dimension q,
/// with the uniform bound M measured on a window at construction.
///
/// A, B, f must be pure (same input, same output) and total on the window;
/// purity is a contract, not enforced.  Violating it voids all downstream
/// guarantees.  All fields are immutable after construction and safe to share
/// across threads.
struct CoefficientSystem {
    Eigen::Index q = 1;
    MatrixFn A;
    MatrixFn B;
    VectorFn f;
    double M = 0.0;  ///< sampled sup of max(|A|, |B|, |f|) on the window, x1.01
};

/// Configuration form of a coefficient entry (JSON-driven).
///
/// kinds:
///   constant  - {"kind":"constant","value": scalar | [[...]] | [...]}
///   trig-sum  - {"kind":"trig-sum","terms":[{"amp":..,"freq":..,"phase":..},...],
///                "offset":..}  (scalar; promoted to a diagonal matrix)
///   rap-demo  - the demo sequence cos(t)+cos(sqrt(2) t)+sin(t+sqrt(|t|))+3t^2/(t^2+1)
///               scaled by optional "scale" and shifted by optional "offset"
///   expression- {"kind":"expression","entries":[["...",...],...]} with variable t;
///               scalar form {"kind":"expression","value":"..."}
struct CoefficientSpec {
    nlohmann::json to_json() const;
    static CoefficientSpec from_json(const nlohmann::json& j, Eigen::Index q,
                                     bool vector_valued);

    /// Compile to an evaluator.  Exactly one of these is valid depending on
    /// vector_valued at parse time.
    MatrixFn matrix_fn() const;
    VectorFn vector_fn() const;

    Eigen::Index q = 1;
    bool vector_valued = false;
    std::string kind;
    std::string raw;  ///< original JSON (kept for manifests / round-trips)
};

/// The demo sequence value at time t.
double rap_demo_value(double t);

/// Sample A, B, f on the grid nodes, verify finiteness, and set
/// M = 1.01 * sampled sup (floor 1e-12).  Operator 2-norm for matrices,
/// Euclidean norm for f.
CoefficientSystem validate_system(Eigen::Index q, MatrixFn A, MatrixFn B,
                                  VectorFn f, const TimeGrid& grid);

/// Parse the {"q", "A", "B", "f"} system block of a config document.
CoefficientSystem system_from_json(const nlohmann::json& j, const TimeGrid& grid);

/// Parse the {"start","end","m"} window block.
TimeGrid grid_from_json(const nlohmann::json& j);

}  // namespace depca
