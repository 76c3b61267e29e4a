#include "depca/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

#include "depca/errors.hpp"

namespace depca {

struct Expression::Node {
    enum class Kind { Number, Variable, Unary, Binary, Call };
    Kind kind;
    double number = 0.0;
    std::string name;                 // variable or function name
    char op = 0;                      // for Unary/Binary
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

double apply_fn(const std::string& name, double x) {
    if (name == "sin") return std::sin(x);
    if (name == "cos") return std::cos(x);
    if (name == "tan") return std::tan(x);
    if (name == "exp") return std::exp(x);
    if (name == "log") return std::log(x);
    if (name == "sqrt") return std::sqrt(x);
    if (name == "abs") return std::abs(x);
    if (name == "floor") return std::floor(x);
    if (name == "sinh") return std::sinh(x);
    if (name == "cosh") return std::cosh(x);
    if (name == "tanh") return std::tanh(x);
    if (name == "sign") return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
    throw ConfigError("expression: unknown function '" + name + "'");
}

bool is_function(const std::string& name) {
    static const char* fns[] = {"sin", "cos", "tan", "exp", "log", "sqrt",
                                "abs", "floor", "sinh", "cosh", "tanh", "sign"};
    for (auto* f : fns)
        if (name == f) return true;
    return false;
}

class Parser {
public:
    Parser(const std::string& s, std::vector<std::string>& vars)
        : s_(s), vars_(vars) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != s_.size())
            throw ConfigError("expression: trailing input at '" + s_.substr(pos_) + "'");
        return e;
    }

private:
    const std::string& s_;
    std::vector<std::string>& vars_;
    size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    NodePtr make_bin(char op, NodePtr l, NodePtr r) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Binary;
        n->op = op;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (eat('+')) lhs = make_bin('+', lhs, term());
            else if (eat('-')) lhs = make_bin('-', lhs, term());
            else return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (eat('*')) lhs = make_bin('*', lhs, unary());
            else if (eat('/')) lhs = make_bin('/', lhs, unary());
            else return lhs;
        }
    }

    NodePtr unary() {
        if (eat('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Unary;
            n->op = '-';
            n->lhs = unary();
            return n;
        }
        if (eat('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) return make_bin('^', base, unary());  // right associative
        return base;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= s_.size()) throw ConfigError("expression: unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!eat(')')) throw ConfigError("expression: missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw ConfigError(std::string("expression: unexpected character '") + c + "'");
    }

    NodePtr number() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isdigit(static_cast<unsigned char>(s_[end])) || s_[end] == '.' ||
                s_[end] == 'e' || s_[end] == 'E' ||
                ((s_[end] == '+' || s_[end] == '-') && end > pos_ &&
                 (s_[end - 1] == 'e' || s_[end - 1] == 'E'))))
            ++end;
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Number;
        try {
            n->number = std::stod(s_.substr(pos_, end - pos_));
        } catch (const std::exception&) {
            throw ConfigError("expression: bad number '" + s_.substr(pos_, end - pos_) + "'");
        }
        pos_ = end;
        return n;
    }

    NodePtr identifier() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
            ++end;
        std::string name = s_.substr(pos_, end - pos_);
        pos_ = end;

        auto n = std::make_shared<Node>();
        if (name == "pi") {
            n->kind = Node::Kind::Number;
            n->number = 3.14159265358979323846;
            return n;
        }
        if (name == "e") {
            n->kind = Node::Kind::Number;
            n->number = 2.71828182845904523536;
            return n;
        }
        if (is_function(name)) {
            if (!eat('(')) throw ConfigError("expression: function '" + name + "' needs '('");
            NodePtr arg = expr();
            if (!eat(')')) throw ConfigError("expression: missing ')' after '" + name + "'");
            n->kind = Node::Kind::Call;
            n->name = name;
            n->lhs = arg;
            return n;
        }
        n->kind = Node::Kind::Variable;
        n->name = name;
        if (std::find(vars_.begin(), vars_.end(), name) == vars_.end()) vars_.push_back(name);
        return n;
    }
};

double eval_node(const Node& n, const std::map<std::string, double>& vars) {
    switch (n.kind) {
        case Node::Kind::Number: return n.number;
        case Node::Kind::Variable: {
            auto it = vars.find(n.name);
            if (it == vars.end())
                throw ConfigError("expression: unbound variable '" + n.name + "'");
            return it->second;
        }
        case Node::Kind::Unary: return -eval_node(*n.lhs, vars);
        case Node::Kind::Call: return apply_fn(n.name, eval_node(*n.lhs, vars));
        case Node::Kind::Binary: {
            double a = eval_node(*n.lhs, vars);
            double b = eval_node(*n.rhs, vars);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                case '^': return std::pow(a, b);
            }
        }
    }
    throw ConfigError("expression: corrupt tree");
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.text_ = text;
    Parser p(text, e.vars_);
    e.root_ = p.parse();
    return e;
}

double Expression::eval(const std::map<std::string, double>& vars) const {
    if (!root_) throw ConfigError("expression: empty");
    return eval_node(*root_, vars);
}

}  // namespace depca
