// Minimal arithmetic-expression evaluator for profile specs in config files.
// Grammar: + - * / ^, parentheses, unary minus, numeric literals, one free
// variable (any identifier not recognized as a function or constant), and the
// functions exp, sin, cos, tan, tanh, cosh, sinh, sqrt, abs, log, erf.
#pragma once

#include <functional>
#include <memory>
#include <string>

namespace blayer {

using ScalarFn = std::function<double(double)>;

/// Compile `text` into a callable of the single free variable.
/// Throws ConfigError on malformed input.
ScalarFn parse_expr(const std::string& text);

}  // namespace blayer
