#include "gm/graph_ops.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

namespace gm {

namespace {

int config_count(const ChainGraph& g, const std::vector<NodeId>& parents) {
  int n = 1;
  for (NodeId p : parents) n *= g.arity(p);
  return n;
}

int config_index(const ChainGraph& g, const std::vector<NodeId>& parents,
                 const std::map<NodeId, int>& vals) {
  int f = 0;
  for (NodeId p : parents) f = f * g.arity(p) + vals.at(p);
  return f;
}

std::map<NodeId, int> decode_config(const ChainGraph& g, const std::vector<NodeId>& parents,
                                    int f) {
  std::map<NodeId, int> vals;
  for (size_t i = parents.size(); i-- > 0;) {
    vals[parents[i]] = f % g.arity(parents[i]);
    f /= g.arity(parents[i]);
  }
  return vals;
}

NodeRef remap_ref(const NodeRef& r, const std::vector<NodeId>& remap) {
  NodeRef out = r;
  auto m = [&](NodeId v) {
    if (v == kNoNode) return v;
    if (remap[v] == kNoNode) throw ModelError("dangling reference after node removal");
    return remap[v];
  };
  out.node = m(r.node);
  for (NodeId& s : out.subs) s = m(s);
  for (NodeId& c : out.copies) c = m(c);
  return out;
}

ExprPtr remap_expr(const Expr& e, const std::vector<NodeId>& remap);

Arg remap_arg(const Arg& a, const std::vector<NodeId>& remap) {
  Arg out = a;
  switch (a.kind) {
    case Arg::Kind::Number: break;
    case Arg::Kind::Ref: out.ref = remap_ref(a.ref, remap); break;
    case Arg::Kind::List:
      for (Arg& it : out.items) it = remap_arg(it, remap);
      break;
    case Arg::Kind::Expr: out.expr = remap_expr(*a.expr, remap); break;
  }
  return out;
}

ExprPtr remap_expr(const Expr& e, const std::vector<NodeId>& remap) {
  auto out = std::make_shared<Expr>(e);
  if (e.op == Expr::Op::Ref) out->ref = remap_ref(e.ref, remap);
  if (e.a) out->a = remap_expr(*e.a, remap);
  if (e.b) out->b = remap_expr(*e.b, remap);
  return out;
}

}  // namespace

ChainGraph remove_nodes(const ChainGraph& g, const std::vector<char>& drop,
                        std::vector<NodeId>* remap_out) {
  std::vector<NodeId> remap(g.nodes.size(), kNoNode);
  ChainGraph out;
  out.plates = g.plates;
  out.expanded = g.expanded;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v) {
    if (drop[v]) continue;
    remap[v] = out.add_node(g.nodes[v]);
  }
  for (VariableNode& n : out.nodes) {
    if (n.base != kNoNode) n.base = kNoNode;  // base ids no longer meaningful
    if (n.family) {
      FamilySpec fs;
      fs.tag = n.family->tag;
      for (const Arg& a : n.family->args) fs.args.push_back(remap_arg(a, remap));
      n.family = std::move(fs);
    }
    if (n.expr) n.expr = remap_expr(*n.expr, remap);
  }
  for (const Arc& a : g.arcs) {
    if (drop[a.from] || drop[a.to]) continue;
    Arc na = a;
    na.from = remap[a.from];
    na.to = remap[a.to];
    out.add_arc(na);
  }
  if (remap_out) *remap_out = remap;
  return out;
}

// ---------------------------------------------------------------------------
// table view

std::optional<DiscreteTable> as_table(const ChainGraph& g, NodeId v) {
  const VariableNode& n = g.nodes[v];
  if (n.deterministic || !n.family || n.domain.kind != Domain::Kind::Discrete)
    return std::nullopt;
  const FamilySpec& f = *n.family;
  DiscreteTable t;
  t.arity = n.domain.size;
  if (f.tag == FamilyTag::Multinomial || f.tag == FamilyTag::Bernoulli) {
    bool all_num = !f.args.empty();
    for (const Arg& a : f.args)
      if (a.kind != Arg::Kind::Number) all_num = false;
    if (all_num && f.tag == FamilyTag::Multinomial) {
      t.probs.resize(1, t.arity);
      if (static_cast<int>(f.args.size()) != t.arity) return std::nullopt;
      for (int c = 0; c < t.arity; ++c) t.probs(0, c) = f.args[c].number;
      return t;
    }
    if (all_num && f.tag == FamilyTag::Bernoulli && f.args.size() == 1) {
      t.probs.resize(1, 2);
      t.probs(0, 0) = 1.0 - f.args[0].number;
      t.probs(0, 1) = f.args[0].number;
      return t;
    }
    if (!f.args.empty() && f.args[0].kind == Arg::Kind::List) {
      for (size_t i = 1; i < f.args.size(); ++i) {
        const Arg& a = f.args[i];
        if (a.kind != Arg::Kind::Ref || a.ref.dynamic() || !a.ref.subs.empty())
          return std::nullopt;
        if (!g.discrete(a.ref.node)) return std::nullopt;
        t.parents.push_back(a.ref.node);
      }
      int rows = config_count(g, t.parents);
      const auto& items = f.args[0].items;
      int per_row = f.tag == FamilyTag::Bernoulli ? 1 : t.arity;
      if (static_cast<int>(items.size()) != rows * per_row) return std::nullopt;
      t.probs.resize(rows, t.arity);
      for (int r = 0; r < rows; ++r) {
        if (f.tag == FamilyTag::Bernoulli) {
          double p = items[r].number;
          t.probs(r, 0) = 1.0 - p;
          t.probs(r, 1) = p;
        } else {
          for (int c = 0; c < t.arity; ++c) t.probs(r, c) = items[r * t.arity + c].number;
        }
      }
      return t;
    }
  }
  return std::nullopt;
}

FamilySpec table_family(const DiscreteTable& t) {
  FamilySpec f;
  f.tag = FamilyTag::Multinomial;
  if (t.parents.empty()) {
    for (int c = 0; c < t.arity; ++c) f.args.push_back(Arg::num(t.probs(0, c)));
    return f;
  }
  std::vector<Arg> items;
  for (int r = 0; r < t.probs.rows(); ++r)
    for (int c = 0; c < t.arity; ++c) items.push_back(Arg::num(t.probs(r, c)));
  f.args.push_back(Arg::list(std::move(items)));
  for (NodeId p : t.parents) {
    NodeRef ref;
    ref.node = p;
    f.args.push_back(Arg::of(ref));
  }
  return f;
}

// ---------------------------------------------------------------------------
// arc reversal

ChainGraph reverse_arc(const ChainGraph& g, NodeId a, NodeId b) {
  ArcId found = -1;
  for (ArcId i = 0; i < static_cast<ArcId>(g.arcs.size()); ++i) {
    const Arc& arc = g.arcs[i];
    if (arc.directed && arc.from == b && arc.to == a) found = i;
  }
  if (found < 0) throw ModelError("no directed arc to reverse");

  // a longer directed path b ~> a would become a cycle
  Adjacency adj(g);
  std::vector<char> seen(g.nodes.size(), 0);
  std::function<bool(NodeId)> reaches = [&](NodeId v) -> bool {
    if (v == a) return true;
    if (seen[v]) return false;
    seen[v] = 1;
    for (NodeId c : adj.children[v])
      if (!(v == b && c == a) && reaches(c)) return true;
    return false;
  };
  seen[b] = 1;
  for (NodeId c : adj.children[b])
    if (c != a && reaches(c)) throw ModelError("arc reversal would create a directed cycle");

  auto ta = as_table(g, a), tb = as_table(g, b);
  if (!ta || !tb)
    throw ModelError("arc reversal is unsupported outside table-backed discrete nodes");

  std::set<NodeId> shared_set;
  for (NodeId p : ta->parents)
    if (p != b) shared_set.insert(p);
  for (NodeId p : tb->parents) shared_set.insert(p);
  std::vector<NodeId> shared(shared_set.begin(), shared_set.end());

  int rows = config_count(g, shared);
  int ka = ta->arity, kb = tb->arity;
  MatrixXd pa(rows, ka);           // new table for a given shared
  MatrixXd pb(rows * ka, kb);      // new table for b given (shared, a)
  for (int r = 0; r < rows; ++r) {
    std::map<NodeId, int> vals = decode_config(g, shared, r);
    for (int av = 0; av < ka; ++av) {
      double total = 0;
      for (int bv = 0; bv < kb; ++bv) {
        vals[b] = bv;
        double pb_old = tb->probs(config_index(g, tb->parents, vals), bv);
        double pa_old = ta->probs(config_index(g, ta->parents, vals), av);
        total += pb_old * pa_old;
      }
      vals.erase(b);
      pa(r, av) = total;
      if (total <= 0.0)
        throw NumericError("arc reversal hit a zero-probability configuration");
      for (int bv = 0; bv < kb; ++bv) {
        vals[b] = bv;
        double pb_old = tb->probs(config_index(g, tb->parents, vals), bv);
        double pa_old = ta->probs(config_index(g, ta->parents, vals), av);
        vals.erase(b);
        // row index: shared config first, then a's value
        pb(r * ka + av, bv) = pb_old * pa_old / total;
      }
    }
  }

  ChainGraph out = g;
  DiscreteTable na{shared, ka, pa};
  std::vector<NodeId> bparents = shared;
  bparents.push_back(a);
  DiscreteTable nb{bparents, kb, pb};
  out.nodes[a].family = table_family(na);
  out.nodes[b].family = table_family(nb);

  // rebuild arcs around a and b: drop old parent arcs, add ones implied by
  // the new tables
  std::vector<Arc> arcs;
  for (const Arc& arc : out.arcs) {
    if (arc.directed && (arc.to == a || arc.to == b)) continue;
    arcs.push_back(arc);
  }
  for (NodeId p : shared) {
    arcs.push_back({p, a, true, false, {}});
    arcs.push_back({p, b, true, false, {}});
  }
  arcs.push_back({a, b, true, false, {}});
  out.arcs = std::move(arcs);
  return out;
}

// ---------------------------------------------------------------------------
// barren node removal

ChainGraph remove_barren(const ChainGraph& g) {
  ChainGraph cur = g;
  for (;;) {
    Adjacency adj(cur);
    ChainComponentPartition comps = chain_components(cur);
    std::vector<char> drop(cur.nodes.size(), 0);
    bool any = false;
    for (const auto& comp : comps.components) {
      bool barren = true;
      for (NodeId v : comp) {
        if (cur.nodes[v].observed) barren = false;
        for (NodeId c : adj.children[v])
          if (comps.component_of[c] != comps.component_of[v]) barren = false;
      }
      if (barren && !comp.empty()) {
        // a barren component must not be read by surviving definitions
        std::set<NodeId> inside(comp.begin(), comp.end());
        bool referenced = false;
        for (NodeId v = 0; v < static_cast<NodeId>(cur.nodes.size()); ++v) {
          if (inside.count(v)) continue;
          for (NodeId r : [&] {
                 std::vector<NodeId> ids;
                 std::vector<NodeRef> refs;
                 if (cur.nodes[v].family) refs = family_refs(*cur.nodes[v].family);
                 if (cur.nodes[v].expr) collect_refs(*cur.nodes[v].expr, refs);
                 for (auto& rr : refs) {
                   if (rr.node != kNoNode) ids.push_back(rr.node);
                   for (NodeId s : rr.subs) ids.push_back(s);
                   for (NodeId c : rr.copies) ids.push_back(c);
                 }
                 return ids;
               }())
            if (inside.count(r)) referenced = true;
        }
        if (referenced) continue;
        for (NodeId v : comp) drop[v] = 1;
        any = true;
      }
    }
    if (!any) return cur;
    cur = remove_nodes(cur, drop);
  }
}

// ---------------------------------------------------------------------------
// deterministic elimination

namespace {

ExprPtr substitute_dets(const ChainGraph& g, const Expr& e,
                        const std::vector<ExprPtr>& resolved);

ExprPtr det_expr_of(const NodeRef& r, const std::vector<ExprPtr>& resolved) {
  if (r.dynamic() || !r.subs.empty())
    throw ModelError("cannot compose a selected deterministic reference");
  if (!resolved[r.node]) throw ModelError("deterministic cycle detected");
  return resolved[r.node];
}

ExprPtr substitute_dets(const ChainGraph& g, const Expr& e,
                        const std::vector<ExprPtr>& resolved) {
  if (e.op == Expr::Op::Ref) {
    bool det = !e.ref.dynamic() && g.nodes[e.ref.node].deterministic;
    if (e.ref.dynamic())
      for (NodeId c : e.ref.copies)
        if (g.nodes[c].deterministic) det = true;
    if (!det) return std::make_shared<Expr>(e);
    return det_expr_of(e.ref, resolved);
  }
  auto out = std::make_shared<Expr>(e);
  if (e.a) out->a = substitute_dets(g, *e.a, resolved);
  if (e.b) out->b = substitute_dets(g, *e.b, resolved);
  return out;
}

Arg substitute_arg(const ChainGraph& g, const Arg& a, const std::vector<ExprPtr>& resolved) {
  switch (a.kind) {
    case Arg::Kind::Number: return a;
    case Arg::Kind::Ref: {
      bool det = !a.ref.dynamic() && g.nodes[a.ref.node].deterministic;
      if (a.ref.dynamic())
        for (NodeId c : a.ref.copies)
          if (g.nodes[c].deterministic) det = true;
      if (!det) return a;
      return Arg::of_expr(det_expr_of(a.ref, resolved));
    }
    case Arg::Kind::List: {
      Arg out = a;
      for (Arg& it : out.items) it = substitute_arg(g, it, resolved);
      return out;
    }
    case Arg::Kind::Expr: {
      Arg out = a;
      out.expr = substitute_dets(g, *a.expr, resolved);
      return out;
    }
  }
  return a;
}

}  // namespace

ChainGraph eliminate_deterministic(const ChainGraph& g) {
  std::vector<NodeId> dets;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (g.nodes[v].deterministic) dets.push_back(v);
  if (dets.empty()) return g;

  // resolve each deterministic expression into non-deterministic references,
  // in dependency order; a cycle leaves some expression unresolved
  std::vector<ExprPtr> resolved(g.nodes.size());
  bool progress = true;
  size_t done = 0;
  while (progress && done < dets.size()) {
    progress = false;
    for (NodeId d : dets) {
      if (resolved[d]) continue;
      std::vector<NodeRef> refs;
      collect_refs(*g.nodes[d].expr, refs);
      bool ready = true;
      for (const NodeRef& r : refs) {
        std::vector<NodeId> cands = r.dynamic() ? r.copies : std::vector<NodeId>{r.node};
        for (NodeId c : cands)
          if (g.nodes[c].deterministic && !resolved[c]) ready = false;
      }
      if (!ready) continue;
      resolved[d] = substitute_dets(g, *g.nodes[d].expr, resolved);
      ++done;
      progress = true;
    }
  }
  if (done < dets.size()) throw ModelError("deterministic cycle detected");

  ChainGraph out = g;
  Adjacency adj(g);
  // arcs from every node to its non-deterministic children reached through a
  // deterministic path
  std::set<std::pair<NodeId, NodeId>> have;
  for (const Arc& a : g.arcs)
    if (a.directed) have.insert({a.from, a.to});
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v) {
    if (g.nodes[v].deterministic) continue;
    for (NodeId c : nd_children(g, adj, v))
      if (!have.count({v, c})) {
        out.add_arc({v, c, true, false, {}});
        have.insert({v, c});
      }
  }
  for (NodeId v = 0; v < static_cast<NodeId>(out.nodes.size()); ++v) {
    VariableNode& n = out.nodes[v];
    if (n.deterministic || !n.family) continue;
    FamilySpec fs;
    fs.tag = n.family->tag;
    for (const Arg& a : n.family->args) fs.args.push_back(substitute_arg(g, a, resolved));
    n.family = std::move(fs);
  }
  std::vector<char> drop(out.nodes.size(), 0);
  for (NodeId d : dets) drop[d] = 1;
  return remove_nodes(out, drop);
}

// ---------------------------------------------------------------------------
// conditioning simplifications

ChainGraph prune_given(const ChainGraph& g) {
  Adjacency adj(g);
  ChainComponentPartition comps = chain_components(g);
  std::vector<char> comp_observed(comps.components.size(), 1);
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (!g.nodes[v].observed) comp_observed[comps.component_of[v]] = 0;

  std::vector<char> drop_arc(g.arcs.size(), 0);
  for (ArcId i = 0; i < static_cast<ArcId>(g.arcs.size()); ++i) {
    const Arc& a = g.arcs[i];
    if (a.directed) {
      // the factor of a fully observed component with fully observed parents
      // is a constant of the conditional model
      int c = comps.component_of[a.to];
      if (!comp_observed[c]) continue;
      bool parents_obs = true;
      for (NodeId m : comps.components[c])
        for (NodeId p : adj.parents[m])
          if (!g.nodes[p].observed) parents_obs = false;
      if (parents_obs) drop_arc[i] = 1;
    } else {
      if (!g.nodes[a.from].observed || !g.nodes[a.to].observed) continue;
      bool commons_obs = true;
      std::set<NodeId> nf(adj.neighbors[a.from].begin(), adj.neighbors[a.from].end());
      for (NodeId w : adj.neighbors[a.to])
        if (nf.count(w) && !g.nodes[w].observed) commons_obs = false;
      if (commons_obs) drop_arc[i] = 1;
    }
  }

  ChainGraph out = g;
  std::vector<Arc> arcs;
  for (ArcId i = 0; i < static_cast<ArcId>(g.arcs.size()); ++i)
    if (!drop_arc[i]) arcs.push_back(g.arcs[i]);
  out.arcs = std::move(arcs);
  return out;
}

// ---------------------------------------------------------------------------
// clique merge

ChainGraph merge_clique_component(const ChainGraph& g, const std::vector<NodeId>& members_in) {
  if (members_in.empty()) throw ModelError("cannot merge an empty node set");
  std::vector<NodeId> members = members_in;
  std::sort(members.begin(), members.end());
  if (members.size() == 1) return g;

  Adjacency adj(g);
  std::set<NodeId> inside(members.begin(), members.end());
  for (NodeId v : members) {
    if (!g.discrete(v) || g.nodes[v].deterministic)
      throw ModelError("merge requires discrete stochastic nodes; offending node '" +
                       g.nodes[v].name + "'");
    std::set<NodeId> nb(adj.neighbors[v].begin(), adj.neighbors[v].end());
    for (NodeId w : members)
      if (w != v && !nb.count(w))
        throw ModelError("nodes are not a clique; offending node '" + g.nodes[v].name + "'");
  }
  // identical external parents and children
  auto externals = [&](const std::vector<NodeId>& vs) {
    std::set<NodeId> s;
    for (NodeId v : vs)
      if (!inside.count(v)) s.insert(v);
    return s;
  };
  std::set<NodeId> parents0 = externals(adj.parents[members[0]]);
  std::set<NodeId> children0 = externals(adj.children[members[0]]);
  for (NodeId v : members) {
    if (externals(adj.parents[v]) != parents0)
      throw ModelError("merge requires identical parents; offending node '" + g.nodes[v].name +
                       "'");
    if (externals(adj.children[v]) != children0)
      throw ModelError("merge requires identical children; offending node '" + g.nodes[v].name +
                       "'");
    if (g.nodes[v].observed != g.nodes[members[0]].observed)
      throw ModelError("merge requires uniform shading; offending node '" + g.nodes[v].name +
                       "'");
  }

  std::vector<DiscreteTable> tables;
  for (NodeId v : members) {
    auto t = as_table(g, v);
    if (!t) throw ModelError("merge requires table-backed nodes; offending node '" +
                             g.nodes[v].name + "'");
    tables.push_back(std::move(*t));
  }
  std::vector<NodeId> shared(parents0.begin(), parents0.end());

  // merged arity and value decoding, members in ascending id order, row-major
  int merged_arity = 1;
  for (NodeId v : members) merged_arity *= g.arity(v);

  // member pair potentials inside the clique
  std::vector<const Arc*> inner_links;
  for (const Arc& a : g.arcs)
    if (!a.directed && inside.count(a.from) && inside.count(a.to) && a.link_table.size() > 0)
      inner_links.push_back(&a);

  int rows = config_count(g, shared);
  MatrixXd probs(rows, merged_arity);
  for (int r = 0; r < rows; ++r) {
    std::map<NodeId, int> vals = decode_config(g, shared, r);
    double total = 0;
    for (int m = 0; m < merged_arity; ++m) {
      int f = m;
      for (size_t i = members.size(); i-- > 0;) {
        vals[members[i]] = f % g.arity(members[i]);
        f /= g.arity(members[i]);
      }
      double w = 1.0;
      for (size_t i = 0; i < members.size(); ++i)
        w *= tables[i].probs(config_index(g, tables[i].parents, vals), vals[members[i]]);
      for (const Arc* l : inner_links)
        w *= std::exp(l->link_table[vals[l->from] * g.arity(l->to) + vals[l->to]]);
      probs(r, m) = w;
      total += w;
    }
    if (total <= 0.0) throw NumericError("merged component has zero total mass");
    probs.row(r) /= total;
  }

  ChainGraph out = g;
  VariableNode merged;
  {
    std::string name;
    for (size_t i = 0; i < members.size(); ++i) {
      if (i) name += "*";
      name += g.nodes[members[i]].name;
    }
    merged.name = name;
  }
  merged.domain = discrete_domain(merged_arity);
  merged.observed = g.nodes[members[0]].observed;
  merged.plates = g.nodes[members[0]].plates;
  DiscreteTable mt{shared, merged_arity, probs};
  merged.family = table_family(mt);
  NodeId mid = out.add_node(merged);

  // children re-indexed over the merged value
  for (NodeId c : children0) {
    auto ct = as_table(g, c);
    if (!ct) throw ModelError("merge requires table-backed children; offending node '" +
                              g.nodes[c].name + "'");
    std::vector<NodeId> np;
    np.push_back(mid);
    for (NodeId p : ct->parents)
      if (!inside.count(p)) np.push_back(p);
    int nrows = merged_arity;
    for (size_t i = 1; i < np.size(); ++i) nrows *= g.arity(np[i]);
    MatrixXd nprobs(nrows, ct->arity);
    std::vector<NodeId> rest(np.begin() + 1, np.end());
    for (int m = 0; m < merged_arity; ++m) {
      std::map<NodeId, int> vals;
      int f = m;
      for (size_t i = members.size(); i-- > 0;) {
        vals[members[i]] = f % g.arity(members[i]);
        f /= g.arity(members[i]);
      }
      for (int rr = 0; rr < config_count(g, rest); ++rr) {
        auto rv = decode_config(g, rest, rr);
        vals.insert(rv.begin(), rv.end());
        int old_row = config_index(g, ct->parents, vals);
        nprobs.row(m * config_count(g, rest) + rr) = ct->probs.row(old_row);
        for (auto& [k, _] : rv) vals.erase(k);
      }
    }
    DiscreteTable nt{np, ct->arity, nprobs};
    out.nodes[c].family = table_family(nt);
  }

  // arcs: external parents -> merged, merged -> children
  std::vector<Arc> arcs;
  for (const Arc& a : out.arcs) {
    bool touches = inside.count(a.from) || inside.count(a.to);
    if (!touches) arcs.push_back(a);
  }
  for (NodeId p : shared) arcs.push_back({p, mid, true, false, {}});
  for (NodeId c : children0) arcs.push_back({mid, c, true, false, {}});
  out.arcs = std::move(arcs);

  std::vector<char> drop(out.nodes.size(), 0);
  for (NodeId v : members) drop[v] = 1;
  return remove_nodes(out, drop);
}

}  // namespace gm
