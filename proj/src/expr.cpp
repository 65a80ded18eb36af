#include "gm/expr.hpp"

#include <cmath>

namespace gm {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

ExprPtr expr_const(double v) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Const;
  e->value = v;
  return e;
}

ExprPtr expr_ref(NodeRef r) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Ref;
  e->ref = std::move(r);
  return e;
}

ExprPtr expr_binary(Expr::Op op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr expr_unary(Expr::Op op, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->a = std::move(a);
  return e;
}

ExprPtr expr_cmp(Expr::CmpOp cmp, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Cmp;
  e->cmp = cmp;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr expr_sum(PlateId plate, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->op = Expr::Op::Sum;
  e->sum_plate = plate;
  e->a = std::move(body);
  return e;
}

double eval_expr(const Expr& e, const RefLookup& lookup) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Const: return e.value;
    case Op::Ref: return lookup(e.ref);
    case Op::Add: return eval_expr(*e.a, lookup) + eval_expr(*e.b, lookup);
    case Op::Sub: return eval_expr(*e.a, lookup) - eval_expr(*e.b, lookup);
    case Op::Mul: return eval_expr(*e.a, lookup) * eval_expr(*e.b, lookup);
    case Op::Div: return eval_expr(*e.a, lookup) / eval_expr(*e.b, lookup);
    case Op::Neg: return -eval_expr(*e.a, lookup);
    case Op::Pow: return std::pow(eval_expr(*e.a, lookup), eval_expr(*e.b, lookup));
    case Op::Exp: return std::exp(eval_expr(*e.a, lookup));
    case Op::Log: return std::log(eval_expr(*e.a, lookup));
    case Op::Sigmoid: return sigmoid(eval_expr(*e.a, lookup));
    case Op::Cmp: {
      double x = eval_expr(*e.a, lookup), y = eval_expr(*e.b, lookup);
      switch (e.cmp) {
        case Expr::CmpOp::Eq: return x == y ? 1.0 : 0.0;
        case Expr::CmpOp::Ne: return x != y ? 1.0 : 0.0;
        case Expr::CmpOp::Lt: return x < y ? 1.0 : 0.0;
        case Expr::CmpOp::Le: return x <= y ? 1.0 : 0.0;
        case Expr::CmpOp::Gt: return x > y ? 1.0 : 0.0;
        case Expr::CmpOp::Ge: return x >= y ? 1.0 : 0.0;
      }
      return 0.0;
    }
    case Op::Sum:
      throw ModelError("plate sum must be expanded before evaluation");
  }
  return 0.0;
}

double eval_expr_deriv(const Expr& e, NodeId target, const RefLookup& lookup,
                       const RefResolve& resolve) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Const: return 0.0;
    case Op::Ref: return resolve(e.ref) == target ? 1.0 : 0.0;
    case Op::Add:
      return eval_expr_deriv(*e.a, target, lookup, resolve) +
             eval_expr_deriv(*e.b, target, lookup, resolve);
    case Op::Sub:
      return eval_expr_deriv(*e.a, target, lookup, resolve) -
             eval_expr_deriv(*e.b, target, lookup, resolve);
    case Op::Mul:
      return eval_expr_deriv(*e.a, target, lookup, resolve) * eval_expr(*e.b, lookup) +
             eval_expr(*e.a, lookup) * eval_expr_deriv(*e.b, target, lookup, resolve);
    case Op::Div: {
      double fa = eval_expr(*e.a, lookup), fb = eval_expr(*e.b, lookup);
      double da = eval_expr_deriv(*e.a, target, lookup, resolve);
      double db = eval_expr_deriv(*e.b, target, lookup, resolve);
      return (da * fb - fa * db) / (fb * fb);
    }
    case Op::Neg: return -eval_expr_deriv(*e.a, target, lookup, resolve);
    case Op::Pow: {
      double fa = eval_expr(*e.a, lookup), fb = eval_expr(*e.b, lookup);
      double da = eval_expr_deriv(*e.a, target, lookup, resolve);
      double db = eval_expr_deriv(*e.b, target, lookup, resolve);
      double v = std::pow(fa, fb);
      double d = 0.0;
      if (da != 0.0) d += fb * std::pow(fa, fb - 1.0) * da;
      if (db != 0.0) d += v * std::log(fa) * db;
      return d;
    }
    case Op::Exp:
      return std::exp(eval_expr(*e.a, lookup)) * eval_expr_deriv(*e.a, target, lookup, resolve);
    case Op::Log:
      return eval_expr_deriv(*e.a, target, lookup, resolve) / eval_expr(*e.a, lookup);
    case Op::Sigmoid: {
      double s = sigmoid(eval_expr(*e.a, lookup));
      return s * (1.0 - s) * eval_expr_deriv(*e.a, target, lookup, resolve);
    }
    case Op::Cmp: return 0.0;  // piecewise constant
    case Op::Sum:
      throw ModelError("plate sum must be expanded before differentiation");
  }
  return 0.0;
}

void collect_refs(const Expr& e, std::vector<NodeRef>& out) {
  if (e.op == Expr::Op::Ref) out.push_back(e.ref);
  if (e.a) collect_refs(*e.a, out);
  if (e.b) collect_refs(*e.b, out);
}

}  // namespace gm
