#include "oblique/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace oblique {

struct Expression::Node {
  enum class Op { kNum, kX1, kX2, kAdd, kSub, kMul, kDiv, kPow, kNeg, kCall };
  Op op = Op::kNum;
  double value = 0.0;
  std::string fn;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(Vec2 x) const {
    switch (op) {
      case Op::kNum: return value;
      case Op::kX1: return x.x;
      case Op::kX2: return x.y;
      case Op::kAdd: return args[0]->eval(x) + args[1]->eval(x);
      case Op::kSub: return args[0]->eval(x) - args[1]->eval(x);
      case Op::kMul: return args[0]->eval(x) * args[1]->eval(x);
      case Op::kDiv: return args[0]->eval(x) / args[1]->eval(x);
      case Op::kPow: return std::pow(args[0]->eval(x), args[1]->eval(x));
      case Op::kNeg: return -args[0]->eval(x);
      case Op::kCall: break;
    }
    const double a = args[0]->eval(x);
    if (fn == "min") return std::min(a, args[1]->eval(x));
    if (fn == "max") return std::max(a, args[1]->eval(x));
    if (fn == "abs") return std::abs(a);
    if (fn == "sqrt") return std::sqrt(a);
    if (fn == "exp") return std::exp(a);
    if (fn == "log") return std::log(a);
    if (fn == "sin") return std::sin(a);
    if (fn == "cos") return std::cos(a);
    if (fn == "sinh") return std::sinh(a);
    return std::cosh(a);
  }

  bool depends_on_x() const {
    if (op == Op::kX1 || op == Op::kX2) return true;
    for (const auto& a : args)
      if (a->depends_on_x()) return true;
    return false;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

int arity(const std::string& fn) {
  if (fn == "min" || fn == "max") return 2;
  if (fn == "abs" || fn == "sqrt" || fn == "exp" || fn == "log" || fn == "sin" || fn == "cos" || fn == "sinh" ||
      fn == "cosh")
    return 1;
  return -1;
}

NodePtr make(Op op, std::vector<NodePtr> args = {}, double v = 0.0, std::string fn = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  n->value = v;
  n->fn = std::move(fn);
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("expression '" + s_ + "': " + what + " at column " + std::to_string(pos_ + 1));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = make(Op::kAdd, {lhs, term()});
      else if (eat('-'))
        lhs = make(Op::kSub, {lhs, term()});
      else
        return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*'))
        lhs = make(Op::kMul, {lhs, unary()});
      else if (eat('/'))
        lhs = make(Op::kDiv, {lhs, unary()});
      else
        return lhs;
    }
  }
  NodePtr unary() {
    if (eat('-')) return make(Op::kNeg, {unary()});
    if (eat('+')) return unary();
    return power();
  }
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Op::kPow, {base, unary()});
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Op::kNum, {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name = s_.substr(start, pos_ - start);
      if (name == "x1") return make(Op::kX1);
      if (name == "x2") return make(Op::kX2);
      if (name == "pi") return make(Op::kNum, {}, M_PI);
      const int n = arity(name);
      if (n < 0) {
        pos_ = start;
        fail("unknown identifier '" + name + "'");
      }
      if (!eat('(')) fail("expected '(' after " + name);
      std::vector<NodePtr> args{expr()};
      while (eat(',')) args.push_back(expr());
      if (!eat(')')) fail("missing ')'");
      if (static_cast<int>(args.size()) != n)
        fail(name + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s"));
      return make(Op::kCall, std::move(args), 0.0, name);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : root_(make(Op::kNum)), text_("0") {}

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

Expression Expression::constant(double c) {
  Expression e;
  e.root_ = make(Op::kNum, {}, c);
  e.text_ = std::to_string(c);
  return e;
}

double Expression::operator()(Vec2 x) const { return root_->eval(x); }

bool Expression::is_constant() const { return !root_->depends_on_x(); }

std::vector<std::string> split_tuple(const std::string& text) {
  std::string s = text;
  auto trim = [](std::string t) {
    const auto b = t.find_first_not_of(" \t");
    const auto e = t.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  s = trim(s);
  if (s.size() >= 2 && s.front() == '(' && s.back() == ')') {
    // Only strip if the outer parentheses enclose the whole text.
    int depth = 0;
    bool encloses = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '(') ++depth;
      if (s[i] == ')') --depth;
      if (depth == 0 && i + 1 < s.size()) encloses = false;
    }
    if (encloses) s = s.substr(1, s.size() - 2);
  }
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace oblique
