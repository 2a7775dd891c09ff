#pragma once

#include <memory>
#include <string>
#include <vector>

#include "oblique/vec.hpp"

namespace oblique {

/// Arithmetic over x1, x2: + - * / ^, unary minus, parentheses, numbers,
/// `pi`, and abs, min, max, sqrt, exp, log, sin, cos, sinh, cosh.
/// `^` binds tighter than unary minus and associates to the right.
class Expression {
 public:
  struct Node;

  Expression();
  /// Throws ConfigError naming the offending column.
  static Expression parse(const std::string& text);
  static Expression constant(double c);

  double operator()(Vec2 x) const;
  const std::string& text() const { return text_; }
  /// True when the value does not depend on x1 or x2.
  bool is_constant() const;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

/// Splits "(a, b, ...)" (parentheses optional) at top-level commas.
std::vector<std::string> split_tuple(const std::string& text);

}  // namespace oblique
