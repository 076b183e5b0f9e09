#include "blayer/expr.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "blayer/grid.hpp"

namespace blayer {

namespace {

struct Node {
    virtual ~Node() = default;
    virtual double eval(double v) const = 0;
};
using NodePtr = std::unique_ptr<Node>;

struct Const : Node {
    double c;
    explicit Const(double c_) : c(c_) {}
    double eval(double) const override { return c; }
};
struct Var : Node {
    double eval(double v) const override { return v; }
};
struct Unary : Node {
    double (*fn)(double);
    NodePtr arg;
    Unary(double (*f)(double), NodePtr a) : fn(f), arg(std::move(a)) {}
    double eval(double v) const override { return fn(arg->eval(v)); }
};
struct Binary : Node {
    char op;
    NodePtr a, b;
    Binary(char o, NodePtr x, NodePtr y) : op(o), a(std::move(x)), b(std::move(y)) {}
    double eval(double v) const override {
        const double x = a->eval(v), y = b->eval(v);
        switch (op) {
            case '+': return x + y;
            case '-': return x - y;
            case '*': return x * y;
            case '/': return x / y;
            default:  return std::pow(x, y);
        }
    }
};

class Parser {
  public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = sum();
        skip();
        if (pos_ != s_.size())
            throw ConfigError("expr: trailing input at '" + s_.substr(pos_) + "'");
        return e;
    }

  private:
    NodePtr sum() {
        NodePtr e = term();
        for (;;) {
            skip();
            if (match('+')) e = std::make_unique<Binary>('+', std::move(e), term());
            else if (match('-')) e = std::make_unique<Binary>('-', std::move(e), term());
            else return e;
        }
    }
    NodePtr term() {
        NodePtr e = power();
        for (;;) {
            skip();
            if (match('*')) e = std::make_unique<Binary>('*', std::move(e), power());
            else if (match('/')) e = std::make_unique<Binary>('/', std::move(e), power());
            else return e;
        }
    }
    NodePtr power() {
        NodePtr base = unary();
        skip();
        if (match('^'))  // right associative
            return std::make_unique<Binary>('^', std::move(base), power());
        return base;
    }
    NodePtr unary() {
        skip();
        if (match('-')) {
            NodePtr a = unary();
            return std::make_unique<Binary>('-', std::make_unique<Const>(0.0), std::move(a));
        }
        if (match('+')) return unary();
        return atom();
    }
    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) throw ConfigError("expr: unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = sum();
            skip();
            if (!match(')')) throw ConfigError("expr: missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        throw ConfigError(std::string("expr: unexpected character '") + c + "'");
    }
    NodePtr number() {
        size_t end = pos_;
        const char* begin = s_.c_str() + pos_;
        char* stop = nullptr;
        const double val = std::strtod(begin, &stop);
        if (stop == begin) throw ConfigError("expr: bad number");
        end = pos_ + static_cast<size_t>(stop - begin);
        pos_ = end;
        return std::make_unique<Const>(val);
    }
    NodePtr ident() {
        size_t end = pos_;
        while (end < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
            ++end;
        const std::string name = s_.substr(pos_, end - pos_);
        pos_ = end;
        static const std::map<std::string, double (*)(double)> fns = {
            {"exp", std::exp},   {"sin", std::sin},   {"cos", std::cos},
            {"tan", std::tan},   {"tanh", std::tanh}, {"cosh", std::cosh},
            {"sinh", std::sinh}, {"sqrt", std::sqrt}, {"abs", std::fabs},
            {"log", std::log},   {"erf", std::erf}};
        auto it = fns.find(name);
        if (it != fns.end()) {
            skip();
            if (!match('(')) throw ConfigError("expr: function '" + name + "' needs '('");
            NodePtr a = sum();
            skip();
            if (!match(')')) throw ConfigError("expr: missing ')' after " + name);
            return std::make_unique<Unary>(it->second, std::move(a));
        }
        if (name == "pi") return std::make_unique<Const>(M_PI);
        if (name == "e") return std::make_unique<Const>(M_E);
        return std::make_unique<Var>();  // any other identifier is the free variable
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool match(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& s_;
    size_t pos_ = 0;
};

}  // namespace

ScalarFn parse_expr(const std::string& text) {
    auto root = std::make_shared<NodePtr>(Parser(text).parse());
    return [root](double v) { return (*root)->eval(v); };
}

}  // namespace blayer
