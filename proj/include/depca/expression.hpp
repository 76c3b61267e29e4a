#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace depca {

/// A compiled scalar expression in named variables (e.g. "sin(t) + 0.5*x^2").
///
/// Grammar: the usual arithmetic with + - * / ^, parentheses, unary minus,
/// numeric literals, the constants pi and e, and the one-argument functions
/// sin cos tan exp log sqrt abs floor sinh cosh tanh sign.
/// Variables are any other identifier; their values are supplied at eval time.
class Expression {
public:
    static Expression parse(const std::string& text);

    double eval(const std::map<std::string, double>& vars) const;

    /// Names of free variables appearing in the expression.
    const std::vector<std::string>& variables() const { return vars_; }

    const std::string& text() const { return text_; }

    Expression() = default;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::vector<std::string> vars_;
    std::string text_;
};

}  // namespace depca
