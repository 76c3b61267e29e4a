#include "depca/coefficients.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "depca/expression.hpp"

namespace depca {

using nlohmann::json;

double rap_demo_value(double t) {
    return std::cos(t) + std::cos(std::sqrt(2.0) * t) +
           std::sin(t + std::sqrt(std::abs(t))) +
           3.0 * t * t / (t * t + 1.0);
}

namespace {

Mat constant_matrix_from_json(const json& v, Eigen::Index q) {
    Mat m = Mat::Zero(q, q);
    if (v.is_number()) {
        m = v.get<double>() * Mat::Identity(q, q);
    } else if (v.is_array() && !v.empty() && v[0].is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != q)
            throw ConfigError("constant matrix: row count != q");
        for (Eigen::Index i = 0; i < q; ++i) {
            if (static_cast<Eigen::Index>(v[i].size()) != q)
                throw ConfigError("constant matrix: column count != q");
            for (Eigen::Index j = 0; j < q; ++j) m(i, j) = v[i][j].get<double>();
        }
    } else {
        throw ConfigError("constant matrix: expected scalar or array of rows");
    }
    return m;
}

Vec constant_vector_from_json(const json& v, Eigen::Index q) {
    Vec x = Vec::Zero(q);
    if (v.is_number()) {
        x.setConstant(v.get<double>());
    } else if (v.is_array()) {
        if (static_cast<Eigen::Index>(v.size()) != q)
            throw ConfigError("constant vector: length != q");
        for (Eigen::Index i = 0; i < q; ++i) x(i) = v[i].get<double>();
    } else {
        throw ConfigError("constant vector: expected scalar or array");
    }
    return x;
}

struct TrigTerm {
    double amp, freq, phase;
};

double trig_sum(const std::vector<TrigTerm>& terms, double offset, double t) {
    double s = offset;
    for (const auto& tt : terms) s += tt.amp * std::cos(tt.freq * t + tt.phase);
    return s;
}

std::vector<TrigTerm> trig_terms_from_json(const json& j) {
    std::vector<TrigTerm> terms;
    for (const auto& term : j.at("terms")) {
        terms.push_back({term.at("amp").get<double>(),
                         term.at("freq").get<double>(),
                         term.value("phase", 0.0)});
    }
    return terms;
}

}  // namespace

CoefficientSpec CoefficientSpec::from_json(const json& j, Eigen::Index q,
                                           bool vector_valued) {
    CoefficientSpec s;
    s.q = q;
    s.vector_valued = vector_valued;
    if (j.is_number() || j.is_array()) {
        // shorthand: a bare number/array means a constant coefficient
        s.kind = "constant";
        s.raw = json{{"kind", "constant"}, {"value", j}}.dump();
        return s;
    }
    if (j.is_string()) {
        s.kind = "expression";
        s.raw = json{{"kind", "expression"}, {"value", j}}.dump();
        return s;
    }
    s.kind = j.at("kind").get<std::string>();
    if (s.kind != "constant" && s.kind != "trig-sum" && s.kind != "rap-demo" &&
        s.kind != "expression")
        throw ConfigError("CoefficientSpec: unknown kind '" + s.kind + "'");
    s.raw = j.dump();
    return s;
}

json CoefficientSpec::to_json() const { return json::parse(raw); }

MatrixFn CoefficientSpec::matrix_fn() const {
    if (vector_valued) throw ConfigError("CoefficientSpec: vector spec used as matrix");
    const json j = json::parse(raw);
    const Eigen::Index q = this->q;
    if (kind == "constant") {
        Mat m = constant_matrix_from_json(j.at("value"), q);
        return [m](double) { return m; };
    }
    if (kind == "trig-sum") {
        auto terms = trig_terms_from_json(j);
        double offset = j.value("offset", 0.0);
        return [terms, offset, q](double t) {
            return Mat(trig_sum(terms, offset, t) * Mat::Identity(q, q));
        };
    }
    if (kind == "rap-demo") {
        double scale = j.value("scale", 1.0);
        double offset = j.value("offset", 0.0);
        return [scale, offset, q](double t) {
            return Mat((offset + scale * rap_demo_value(t)) * Mat::Identity(q, q));
        };
    }
    // expression: scalar "value" (diagonal) or q x q "entries"
    if (j.contains("value")) {
        Expression e = Expression::parse(j.at("value").get<std::string>());
        return [e, q](double t) {
            return Mat(e.eval({{"t", t}}) * Mat::Identity(q, q));
        };
    }
    const auto& rows = j.at("entries");
    if (static_cast<Eigen::Index>(rows.size()) != q)
        throw ConfigError("expression matrix: row count != q");
    std::vector<std::vector<Expression>> exprs(q);
    for (Eigen::Index i = 0; i < q; ++i) {
        if (static_cast<Eigen::Index>(rows[i].size()) != q)
            throw ConfigError("expression matrix: column count != q");
        for (Eigen::Index k = 0; k < q; ++k)
            exprs[i].push_back(Expression::parse(rows[i][k].get<std::string>()));
    }
    return [exprs, q](double t) {
        Mat m(q, q);
        for (Eigen::Index i = 0; i < q; ++i)
            for (Eigen::Index k = 0; k < q; ++k) m(i, k) = exprs[i][k].eval({{"t", t}});
        return m;
    };
}

VectorFn CoefficientSpec::vector_fn() const {
    if (!vector_valued) throw ConfigError("CoefficientSpec: matrix spec used as vector");
    const json j = json::parse(raw);
    const Eigen::Index q = this->q;
    if (kind == "constant") {
        Vec v = constant_vector_from_json(j.at("value"), q);
        return [v](double) { return v; };
    }
    if (kind == "trig-sum") {
        auto terms = trig_terms_from_json(j);
        double offset = j.value("offset", 0.0);
        return [terms, offset, q](double t) {
            return Vec(Vec::Constant(q, trig_sum(terms, offset, t)));
        };
    }
    if (kind == "rap-demo") {
        double scale = j.value("scale", 1.0);
        double offset = j.value("offset", 0.0);
        return [scale, offset, q](double t) {
            return Vec(Vec::Constant(q, offset + scale * rap_demo_value(t)));
        };
    }
    if (j.contains("value")) {
        Expression e = Expression::parse(j.at("value").get<std::string>());
        return [e, q](double t) { return Vec(Vec::Constant(q, e.eval({{"t", t}}))); };
    }
    const auto& rows = j.at("entries");
    if (static_cast<Eigen::Index>(rows.size()) != q)
        throw ConfigError("expression vector: length != q");
    std::vector<Expression> exprs;
    for (Eigen::Index i = 0; i < q; ++i)
        exprs.push_back(Expression::parse(rows[i].get<std::string>()));
    return [exprs, q](double t) {
        Vec v(q);
        for (Eigen::Index i = 0; i < q; ++i) v(i) = exprs[i].eval({{"t", t}});
        return v;
    };
}

CoefficientSystem validate_system(Eigen::Index q, MatrixFn A, MatrixFn B,
                                  VectorFn f, const TimeGrid& grid) {
    if (q < 1) throw ConfigError("validate_system: q must be positive");
    double sup = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        double t = grid.node(k).value();
        Mat a = A(t), b = B(t);
        Vec ff = f(t);
        if (a.rows() != q || a.cols() != q || b.rows() != q || b.cols() != q ||
            ff.size() != q)
            throw ConfigError("validate_system: dimension mismatch at t=" +
                              std::to_string(t));
        if (!a.allFinite() || !b.allFinite() || !ff.allFinite())
            throw NumericBlowup("validate_system: non-finite coefficient at t=" +
                                std::to_string(t));
        sup = std::max({sup, a.operatorNorm(), b.operatorNorm(), ff.norm()});
    }
    CoefficientSystem sys;
    sys.q = q;
    sys.A = std::move(A);
    sys.B = std::move(B);
    sys.f = std::move(f);
    sys.M = std::max(1.01 * sup, 1e-12);
    return sys;
}

TimeGrid grid_from_json(const json& j) {
    return TimeGrid(j.at("start").get<std::int64_t>(),
                    j.at("end").get<std::int64_t>(),
                    j.at("m").get<std::int64_t>());
}

CoefficientSystem system_from_json(const json& j, const TimeGrid& grid) {
    auto q = j.at("q").get<Eigen::Index>();
    auto A = CoefficientSpec::from_json(j.at("A"), q, false).matrix_fn();
    MatrixFn B = j.contains("B")
                     ? CoefficientSpec::from_json(j.at("B"), q, false).matrix_fn()
                     : MatrixFn([q](double) { return Mat(Mat::Zero(q, q)); });
    VectorFn f = j.contains("f")
                     ? CoefficientSpec::from_json(j.at("f"), q, true).vector_fn()
                     : VectorFn([q](double) { return Vec(Vec::Zero(q)); });
    return validate_system(q, std::move(A), std::move(B), std::move(f), grid);
}

}  // namespace depca
