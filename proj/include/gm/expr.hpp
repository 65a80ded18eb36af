#ifndef GM_EXPR_HPP
#define GM_EXPR_HPP

#include <functional>
#include <memory>
#include <vector>

#include "gm/types.hpp"

namespace gm {

// Reference to a node's value. Before plate expansion `node` is the declared
// node and `subs` are selector nodes, one per plate of `node` not shared with
// the referencing context. After expansion either `copies` is empty and `node`
// is the concrete copy, or the value is copies[flatten(sub values)] with
// `subs` holding concrete selector copies and `sub_arity` their cardinalities.
struct NodeRef {
  NodeId node = kNoNode;
  std::vector<NodeId> subs;
  std::vector<NodeId> copies;
  std::vector<int> sub_arity;

  bool dynamic() const { return !copies.empty(); }
  bool operator==(const NodeRef&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Scalar expression over node values: the deterministic-node language.
struct Expr {
  enum class Op { Const, Ref, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sigmoid, Cmp, Sum };
  enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

  Op op = Op::Const;
  double value = 0.0;   // Const
  NodeRef ref;          // Ref
  ExprPtr a, b;
  CmpOp cmp = CmpOp::Eq;
  PlateId sum_plate = -1;  // Sum: iterate this plate's index over the body
};

ExprPtr expr_const(double v);
ExprPtr expr_ref(NodeRef r);
ExprPtr expr_binary(Expr::Op op, ExprPtr a, ExprPtr b);
ExprPtr expr_unary(Expr::Op op, ExprPtr a);
ExprPtr expr_cmp(Expr::CmpOp cmp, ExprPtr a, ExprPtr b);
ExprPtr expr_sum(PlateId plate, ExprPtr body);

// Value lookup used during evaluation; resolves a reference to a scalar.
using RefLookup = std::function<double(const NodeRef&)>;
// Identity of the concrete node a reference resolves to (for derivatives).
using RefResolve = std::function<NodeId(const NodeRef&)>;

double eval_expr(const Expr& e, const RefLookup& lookup);
// d(e)/d(value of `target`) at the point given by `lookup`. Discrete refs are
// treated as constants. `resolve` maps a reference to the node it currently
// selects.
double eval_expr_deriv(const Expr& e, NodeId target, const RefLookup& lookup,
                       const RefResolve& resolve);
// All nodes an expression can read (including selector nodes and every
// candidate copy of dynamic references).
void collect_refs(const Expr& e, std::vector<NodeRef>& out);

double sigmoid(double x);

}  // namespace gm

#endif
