#ifndef GM_GRAPH_OPS_HPP
#define GM_GRAPH_OPS_HPP

#include "gm/graph.hpp"

namespace gm {

// Explicit conditional table view of a discrete node whose family is a
// literal table (or literal probabilities, for a parentless node).
struct DiscreteTable {
  std::vector<NodeId> parents;  // in argument order; row-major config index
  int arity = 2;
  MatrixXd probs;  // (#configs) x arity
};

std::optional<DiscreteTable> as_table(const ChainGraph& g, NodeId v);
FamilySpec table_family(const DiscreteTable& t);

// Reverses the directed arc b -> a; both endpoints must be table-backed
// discrete nodes and afterwards share each other's former parents. The joint
// distribution is preserved.
ChainGraph reverse_arc(const ChainGraph& g, NodeId a, NodeId b);

// Deletes unobserved childless chain components until none remain.
ChainGraph remove_barren(const ChainGraph& g);

// Rewrites deterministic nodes into their consumers and deletes them.
ChainGraph eliminate_deterministic(const ChainGraph& g);

// Drops arcs made irrelevant by conditioning: directed arcs into observed
// nodes with all-observed parents (applied per fully observed chain
// component) and undirected arcs whose endpoints and common neighbors are all
// observed.
ChainGraph prune_given(const ChainGraph& g);

// Replaces a clique of discrete nodes having identical parents and children
// with one node over the product domain.
ChainGraph merge_clique_component(const ChainGraph& g, const std::vector<NodeId>& members);

// Compacts a graph after dropping the flagged nodes; references into dropped
// nodes must have been rewritten first. Returns the old->new id map through
// `remap` when non-null.
ChainGraph remove_nodes(const ChainGraph& g, const std::vector<char>& drop,
                        std::vector<NodeId>* remap = nullptr);

}  // namespace gm

#endif
