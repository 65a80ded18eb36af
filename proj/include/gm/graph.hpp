#ifndef GM_GRAPH_HPP
#define GM_GRAPH_HPP

#include <optional>
#include <string>
#include <vector>

#include "gm/expr.hpp"
#include "gm/types.hpp"

namespace gm {

enum class FamilyTag {
  Bernoulli,
  Beta,
  Multinomial,
  Dirichlet,
  Gaussian,
  GaussianLinear,
  Gamma,
  MvGaussian,
  Wishart,
};

const char* family_name(FamilyTag t);

// One positional argument of a family: a literal, a node reference, a
// bracketed list whose items are literals or references, or (after
// deterministic elimination) an inline expression.
struct Arg {
  enum class Kind { Number, Ref, List, Expr };
  Kind kind = Kind::Number;
  double number = 0.0;
  NodeRef ref;
  std::vector<Arg> items;
  ExprPtr expr;

  static Arg num(double v) {
    Arg a;
    a.kind = Kind::Number;
    a.number = v;
    return a;
  }
  static Arg of(NodeRef r) {
    Arg a;
    a.kind = Kind::Ref;
    a.ref = std::move(r);
    return a;
  }
  static Arg list(std::vector<Arg> xs) {
    Arg a;
    a.kind = Kind::List;
    a.items = std::move(xs);
    return a;
  }
  static Arg list(const VectorXd& v) {
    Arg a;
    a.kind = Kind::List;
    for (int i = 0; i < v.size(); ++i) a.items.push_back(num(v[i]));
    return a;
  }
  static Arg of_expr(ExprPtr e) {
    Arg a;
    a.kind = Kind::Expr;
    a.expr = std::move(e);
    return a;
  }
};

struct FamilySpec {
  FamilyTag tag = FamilyTag::Gaussian;
  std::vector<Arg> args;
};

struct VariableNode {
  std::string name;
  bool deterministic = false;
  bool observed = false;
  Domain domain;
  std::optional<FamilySpec> family;  // stochastic nodes only
  ExprPtr expr;                      // deterministic nodes only
  std::vector<PlateId> plates;       // enclosing plates, outermost first

  // Set on copies produced by expand_plates.
  NodeId base = kNoNode;
  std::vector<int> index;
};

struct Arc {
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  bool directed = true;
  bool optional_arc = false;
  VectorXd link_table;  // undirected pair log-potential, row-major |from| x |to|; may be empty
};

struct Plate {
  std::string name;
  // -1 means "bound later from the data table row count".
  int cardinality = -1;
};

struct ChainGraph {
  std::vector<VariableNode> nodes;
  std::vector<Arc> arcs;
  std::vector<Plate> plates;

  // Populated by expand_plates: copies[base] lists copy ids row-major over
  // the base node's plate cardinalities (outermost plate slowest).
  std::vector<std::vector<NodeId>> copies;
  bool expanded = false;

  NodeId add_node(VariableNode n) {
    nodes.push_back(std::move(n));
    return static_cast<NodeId>(nodes.size()) - 1;
  }
  ArcId add_arc(Arc a) {
    arcs.push_back(std::move(a));
    return static_cast<ArcId>(arcs.size()) - 1;
  }
  PlateId add_plate(Plate p) {
    plates.push_back(std::move(p));
    return static_cast<PlateId>(plates.size()) - 1;
  }
  NodeId find(const std::string& name) const;
  int arity(NodeId v) const { return nodes[v].domain.size; }
  bool discrete(NodeId v) const { return nodes[v].domain.kind == Domain::Kind::Discrete; }
};

// Parent/child/neighbor lists materialized once per graph.
struct Adjacency {
  std::vector<std::vector<NodeId>> parents, children, neighbors;
  std::vector<std::vector<ArcId>> link_arcs;  // undirected arcs at each node
  explicit Adjacency(const ChainGraph& g);
};

struct Diagnostic {
  std::string code;
  std::string message;
  std::vector<NodeId> nodes;
  ArcId arc = -1;
};

// Empty result means every structural invariant holds.
std::vector<Diagnostic> validate_graph(const ChainGraph& g);

struct ChainComponentPartition {
  std::vector<std::vector<NodeId>> components;  // topologically ordered
  std::vector<int> component_of;                // node id -> component index
};

ChainComponentPartition chain_components(const ChainGraph& g);

// Removes plates by duplicating nodes and arcs per plate index.
ChainGraph expand_plates(const ChainGraph& g);

// Maximal cliques of the undirected subgraph, each sorted, list sorted
// lexicographically. Nodes without undirected arcs appear as singletons.
std::vector<std::vector<NodeId>> maximal_cliques(const ChainGraph& g);

std::vector<NodeId> nd_children(const ChainGraph& g, const Adjacency& adj, NodeId v);
std::vector<NodeId> nd_parents(const ChainGraph& g, const Adjacency& adj, NodeId v);
std::vector<NodeId> det_parents(const ChainGraph& g, const Adjacency& adj, NodeId v);

std::vector<NodeId> markov_blanket(const ChainGraph& g, NodeId u);

// All nodes whose value a family argument can read (selectors included).
std::vector<NodeRef> family_refs(const FamilySpec& f);

}  // namespace gm

#endif
