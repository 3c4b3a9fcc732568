#include "metacog/stl/ast.hpp"

#include <cmath>
#include <sstream>

namespace metacog::stl {

ExprPtr Expr::constant(double v) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Const;
  e->value = v;
  return e;
}

ExprPtr Expr::var(int index, std::string name) {
  auto e = std::make_shared<Expr>();
  e->op = ExprOp::Var;
  e->var_index = index;
  e->var_name = std::move(name);
  return e;
}

ExprPtr Expr::unary(ExprOp op, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->children = {std::move(a)};
  return e;
}

ExprPtr Expr::binary(ExprOp op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->children = {std::move(a), std::move(b)};
  return e;
}

ExprPtr Expr::nary(ExprOp op, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->children = std::move(args);
  return e;
}

double eval(const Expr& e, const Eigen::VectorXd& x) {
  switch (e.op) {
    case ExprOp::Const:
      return e.value;
    case ExprOp::Var:
      if (e.var_index < 0 || e.var_index >= x.size())
        throw DimensionError("signal component '" + e.var_name + "' out of range for state of size " +
                             std::to_string(x.size()));
      return x[e.var_index];
    case ExprOp::Neg:
      return -eval(*e.children[0], x);
    case ExprOp::Add:
      return eval(*e.children[0], x) + eval(*e.children[1], x);
    case ExprOp::Sub:
      return eval(*e.children[0], x) - eval(*e.children[1], x);
    case ExprOp::Mul:
      return eval(*e.children[0], x) * eval(*e.children[1], x);
    case ExprOp::Div:
      return eval(*e.children[0], x) / eval(*e.children[1], x);
    case ExprOp::Abs:
      return std::abs(eval(*e.children[0], x));
    case ExprOp::Min: {
      double v = eval(*e.children[0], x);
      for (std::size_t i = 1; i < e.children.size(); ++i) v = std::min(v, eval(*e.children[i], x));
      return v;
    }
    case ExprOp::Max: {
      double v = eval(*e.children[0], x);
      for (std::size_t i = 1; i < e.children.size(); ++i) v = std::max(v, eval(*e.children[i], x));
      return v;
    }
    case ExprOp::Norm2: {
      double s = 0.0;
      for (const auto& c : e.children) {
        double v = eval(*c, x);
        s += v * v;
      }
      return std::sqrt(s);
    }
  }
  throw Error("unreachable expression kind");
}

namespace {

std::string number_to_string(double v) {
  std::ostringstream os;
  os.precision(15);
  os << v;
  return os.str();
}

int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub:
      return 1;
    case ExprOp::Mul:
    case ExprOp::Div:
      return 2;
    case ExprOp::Neg:
      return 3;
    default:
      return 4;
  }
}

void print_expr(const Expr& e, std::ostringstream& os, int parent_prec) {
  const int prec = precedence(e.op);
  switch (e.op) {
    case ExprOp::Const:
      os << number_to_string(e.value);
      return;
    case ExprOp::Var:
      os << e.var_name;
      return;
    case ExprOp::Neg:
      if (prec < parent_prec) os << "(";
      os << "-";
      print_expr(*e.children[0], os, prec + 1);
      if (prec < parent_prec) os << ")";
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div: {
      const char* sym = e.op == ExprOp::Add   ? " + "
                        : e.op == ExprOp::Sub ? " - "
                        : e.op == ExprOp::Mul ? " * "
                                              : " / ";
      if (prec < parent_prec) os << "(";
      print_expr(*e.children[0], os, prec);
      os << sym;
      // Right operand of - and / binds tighter.
      print_expr(*e.children[1], os, prec + (e.op == ExprOp::Sub || e.op == ExprOp::Div ? 1 : 0));
      if (prec < parent_prec) os << ")";
      return;
    }
    case ExprOp::Abs:
    case ExprOp::Min:
    case ExprOp::Max:
    case ExprOp::Norm2: {
      const char* fn = e.op == ExprOp::Abs   ? "abs"
                       : e.op == ExprOp::Min ? "min"
                       : e.op == ExprOp::Max ? "max"
                                             : "norm2";
      os << fn << "(";
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) os << ", ";
        print_expr(*e.children[i], os, 0);
      }
      os << ")";
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(e, os, 0);
  return os.str();
}

FormulaPtr Formula::truth() {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::True;
  return f;
}

FormulaPtr Formula::predicate(Predicate p) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Pred;
  f->pred = std::move(p);
  return f;
}

FormulaPtr Formula::negation(FormulaPtr child) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Not;
  f->left = std::move(child);
  return f;
}

FormulaPtr Formula::conjunction(FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::And;
  f->left = std::move(a);
  f->right = std::move(b);
  return f;
}

FormulaPtr Formula::disjunction(FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Or;
  f->left = std::move(a);
  f->right = std::move(b);
  return f;
}

namespace {
void check_interval(double a, double b) {
  if (a < 0.0 || b < a || !std::isfinite(b))
    throw ParseError("inverted or negative interval [" + std::to_string(a) + "," + std::to_string(b) + "]", 1, 1);
}
}  // namespace

FormulaPtr Formula::eventually(double a, double b, FormulaPtr child) {
  check_interval(a, b);
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Eventually;
  f->interval = {a, b};
  f->left = std::move(child);
  return f;
}

FormulaPtr Formula::always(double a, double b, FormulaPtr child) {
  check_interval(a, b);
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Always;
  f->interval = {a, b};
  f->left = std::move(child);
  return f;
}

FormulaPtr Formula::until(double a, double b, FormulaPtr lhs, FormulaPtr rhs) {
  check_interval(a, b);
  auto f = std::make_shared<Formula>();
  f->kind = FormulaKind::Until;
  f->interval = {a, b};
  f->left = std::move(lhs);
  f->right = std::move(rhs);
  return f;
}

namespace {

std::string interval_to_string(const Interval& iv) {
  return "[" + number_to_string(iv.a) + "," + number_to_string(iv.b) + "]";
}

// Binary boolean connectives are printed fully parenthesized on the left
// grammar level so the canonical form is associativity-unambiguous.
void print_formula(const Formula& f, std::ostringstream& os) {
  switch (f.kind) {
    case FormulaKind::True:
      os << "T";
      return;
    case FormulaKind::Pred:
      os << to_string(*f.pred.expr) << " > 0";
      return;
    case FormulaKind::Not:
      os << "!(";
      print_formula(*f.left, os);
      os << ")";
      return;
    case FormulaKind::And:
      os << "(";
      print_formula(*f.left, os);
      os << ") & (";
      print_formula(*f.right, os);
      os << ")";
      return;
    case FormulaKind::Or:
      os << "(";
      print_formula(*f.left, os);
      os << ") | (";
      print_formula(*f.right, os);
      os << ")";
      return;
    case FormulaKind::Eventually:
      os << "F" << interval_to_string(f.interval) << "(";
      print_formula(*f.left, os);
      os << ")";
      return;
    case FormulaKind::Always:
      os << "G" << interval_to_string(f.interval) << "(";
      print_formula(*f.left, os);
      os << ")";
      return;
    case FormulaKind::Until:
      os << "((";
      print_formula(*f.left, os);
      os << ") U" << interval_to_string(f.interval) << " (";
      print_formula(*f.right, os);
      os << "))";
      return;
  }
}

}  // namespace

std::string to_string(const Formula& f) {
  std::ostringstream os;
  print_formula(f, os);
  return os.str();
}

}  // namespace metacog::stl
