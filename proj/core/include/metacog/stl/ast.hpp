#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "metacog/errors.hpp"

namespace metacog::stl {

// ---------------------------------------------------------------------------
// Arithmetic expressions over named signal components (predicate functions).
// ---------------------------------------------------------------------------

enum class ExprOp {
  Const,
  Var,    // resolved component index
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Abs,
  Min,
  Max,
  Norm2,  // sqrt of sum of squares of all children
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  ExprOp op = ExprOp::Const;
  double value = 0.0;              // Const
  int var_index = -1;              // Var
  std::string var_name;            // Var, kept for printing
  std::vector<ExprPtr> children;

  static ExprPtr constant(double v);
  static ExprPtr var(int index, std::string name);
  static ExprPtr unary(ExprOp op, ExprPtr a);
  static ExprPtr binary(ExprOp op, ExprPtr a, ExprPtr b);
  static ExprPtr nary(ExprOp op, std::vector<ExprPtr> args);
};

double eval(const Expr& e, const Eigen::VectorXd& x);
std::string to_string(const Expr& e);

/// Named predicate function z^sigma(x); the predicate holds iff z(x) > 0.
struct Predicate {
  std::string name;
  ExprPtr expr;

  double operator()(const Eigen::VectorXd& x) const { return eval(*expr, x); }
};

// ---------------------------------------------------------------------------
// STL formulas.
// ---------------------------------------------------------------------------

enum class FormulaKind {
  True,
  Pred,
  Not,
  And,
  Or,
  Eventually,
  Always,
  Until,
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Interval {
  double a = 0.0;
  double b = 0.0;
};

struct Formula {
  FormulaKind kind = FormulaKind::True;
  Predicate pred;           // Pred
  Interval interval;        // temporal nodes
  FormulaPtr left;          // unary child or first binary child
  FormulaPtr right;         // second binary child

  static FormulaPtr truth();
  static FormulaPtr predicate(Predicate p);
  static FormulaPtr negation(FormulaPtr f);
  static FormulaPtr conjunction(FormulaPtr f, FormulaPtr g);
  static FormulaPtr disjunction(FormulaPtr f, FormulaPtr g);
  static FormulaPtr eventually(double a, double b, FormulaPtr f);
  static FormulaPtr always(double a, double b, FormulaPtr f);
  static FormulaPtr until(double a, double b, FormulaPtr f, FormulaPtr g);
};

/// Canonical textual form; parse(to_string(f)) re-prints identically.
std::string to_string(const Formula& f);

/// Parse a formula over the given signal-component schema. Unknown
/// identifiers and malformed intervals raise ParseError.
FormulaPtr parse_formula(const std::string& text, const std::vector<std::string>& schema);

}  // namespace metacog::stl
