#ifndef GM_EVAL_HPP
#define GM_EVAL_HPP

#include <functional>

#include "gm/expfam.hpp"
#include "gm/graph.hpp"

namespace gm {

// Full assignment of every node of a (plate-free) graph.
struct State {
  std::vector<Value> vals;
};

// Default in-support values: discrete 0, reals 0, positives 1, simplices
// uniform, matrices identity.
State make_state(const ChainGraph& g);

// Concrete node a reference currently selects (resolving dynamic selection
// through the state) and its scalar value.
NodeId ref_target(const State& s, const NodeRef& r);
double ref_value(const State& s, const NodeRef& r);
const Value& ref_full_value(const State& s, const NodeRef& r);

double arg_scalar(const ChainGraph& g, const State& s, const Arg& a);
VectorXd arg_vector(const ChainGraph& g, const State& s, const Arg& a);
MatrixXd arg_matrix(const ChainGraph& g, const State& s, const Arg& a, int dim);

// Distribution over a discrete node's values given the current parent
// assignment (normalized for CPT/parameter forms).
VectorXd categorical_params(const ChainGraph& g, const State& s, NodeId v);

// Unnormalized log contribution of one stochastic node at the current state.
double log_node_factor(const ChainGraph& g, const State& s, NodeId v);
double log_link_potential(const ChainGraph& g, const State& s, const Arc& a);

// Per-graph evaluation plan: chain components, their links, and whether each
// component needs explicit normalization over its joint domain.
struct ComponentModel {
  ChainComponentPartition comps;
  Adjacency adj;
  std::vector<std::vector<ArcId>> comp_links;
  std::vector<char> needs_normalizer;
  std::vector<NodeId> det_order;  // deterministic nodes in dependency order

  explicit ComponentModel(const ChainGraph& g);
};

// Recompute deterministic nodes (dependency order) into the state.
void refresh_deterministic(const ChainGraph& g, const ComponentModel& cm, State& s);

double log_component_conditional(const ChainGraph& g, const ComponentModel& cm, State& s,
                                 int comp);

// log of the joint density of the full assignment; deterministic nodes are
// refreshed first.
double log_joint(const ChainGraph& g, const ComponentModel& cm, State& s);

// Enumerate joint configurations of the given discrete nodes, invoking fn at
// each; restores prior values afterwards.
void for_each_config(const ChainGraph& g, const std::vector<NodeId>& targets, State& s,
                     const std::function<void()>& fn);

// Stable log-sum-exp of a sequence.
double log_sum_exp(const std::vector<double>& xs);

}  // namespace gm

#endif
