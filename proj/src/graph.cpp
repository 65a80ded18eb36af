#include "gm/graph.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace gm {

const char* family_name(FamilyTag t) {
  switch (t) {
    case FamilyTag::Bernoulli: return "Bernoulli";
    case FamilyTag::Beta: return "Beta";
    case FamilyTag::Multinomial: return "Multinomial";
    case FamilyTag::Dirichlet: return "Dirichlet";
    case FamilyTag::Gaussian: return "Gaussian";
    case FamilyTag::GaussianLinear: return "GaussianLinear";
    case FamilyTag::Gamma: return "Gamma";
    case FamilyTag::MvGaussian: return "MvGaussian";
    case FamilyTag::Wishart: return "Wishart";
  }
  return "?";
}

NodeId ChainGraph::find(const std::string& name) const {
  for (NodeId i = 0; i < static_cast<NodeId>(nodes.size()); ++i)
    if (nodes[i].name == name) return i;
  return kNoNode;
}

Adjacency::Adjacency(const ChainGraph& g) {
  size_t n = g.nodes.size();
  parents.resize(n);
  children.resize(n);
  neighbors.resize(n);
  link_arcs.resize(n);
  for (ArcId a = 0; a < static_cast<ArcId>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.directed) {
      parents[arc.to].push_back(arc.from);
      children[arc.from].push_back(arc.to);
    } else {
      neighbors[arc.from].push_back(arc.to);
      neighbors[arc.to].push_back(arc.from);
      link_arcs[arc.from].push_back(a);
      link_arcs[arc.to].push_back(a);
    }
  }
}

static void collect_arg_refs(const Arg& a, std::vector<NodeRef>& out) {
  switch (a.kind) {
    case Arg::Kind::Number: break;
    case Arg::Kind::Ref: out.push_back(a.ref); break;
    case Arg::Kind::List:
      for (const Arg& it : a.items) collect_arg_refs(it, out);
      break;
    case Arg::Kind::Expr:
      if (a.expr) collect_refs(*a.expr, out);
      break;
  }
}

std::vector<NodeRef> family_refs(const FamilySpec& f) {
  std::vector<NodeRef> out;
  for (const Arg& a : f.args) collect_arg_refs(a, out);
  return out;
}

// ---------------------------------------------------------------------------
// validate_graph

static bool same_plate_set(const VariableNode& a, const VariableNode& b) {
  std::set<PlateId> pa(a.plates.begin(), a.plates.end());
  std::set<PlateId> pb(b.plates.begin(), b.plates.end());
  return pa == pb;
}

std::vector<Diagnostic> validate_graph(const ChainGraph& g) {
  std::vector<Diagnostic> out;
  auto emit = [&](std::string code, std::string msg, std::vector<NodeId> nodes = {},
                  ArcId arc = -1) {
    out.push_back({std::move(code), std::move(msg), std::move(nodes), arc});
  };

  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v) {
    const VariableNode& n = g.nodes[v];
    if (n.deterministic) {
      if (n.family) emit("det-family", "deterministic node '" + n.name + "' carries a family", {v});
      if (!n.expr) emit("det-expr", "deterministic node '" + n.name + "' has no expression", {v});
    } else {
      if (n.expr) emit("stoch-expr", "stochastic node '" + n.name + "' carries an expression", {v});
      if (!n.family) emit("stoch-family", "stochastic node '" + n.name + "' has no family", {v});
    }
    if (n.domain.kind == Domain::Kind::Discrete && n.domain.size < 2)
      emit("arity", "discrete node '" + n.name + "' needs arity >= 2", {v});
    if (n.domain.kind != Domain::Kind::Discrete && n.domain.size < 1)
      emit("dim", "node '" + n.name + "' needs dimension >= 1", {v});

    // references must resolve and carry one selector per unshared plate
    std::vector<NodeRef> refs;
    if (n.family) refs = family_refs(*n.family);
    if (n.expr) collect_refs(*n.expr, refs);
    std::set<PlateId> own(n.plates.begin(), n.plates.end());
    for (const NodeRef& r : refs) {
      if (r.dynamic()) continue;  // already expansion-resolved
      if (r.node < 0 || r.node >= static_cast<NodeId>(g.nodes.size())) {
        emit("ref", "node '" + n.name + "' references an unknown node", {v});
        continue;
      }
      int unshared = 0;
      for (PlateId p : g.nodes[r.node].plates)
        if (!own.count(p)) ++unshared;
      if (static_cast<int>(r.subs.size()) != unshared)
        emit("ref-selectors",
             "reference to '" + g.nodes[r.node].name + "' from '" + n.name + "' needs " +
                 std::to_string(unshared) + " selector(s)",
             {v, r.node});
    }
  }

  for (PlateId p = 0; p < static_cast<PlateId>(g.plates.size()); ++p) {
    if (g.plates[p].cardinality == 0 || g.plates[p].cardinality < -1)
      emit("plate-card", "plate '" + g.plates[p].name + "' needs positive cardinality", {});
  }

  std::set<std::pair<NodeId, NodeId>> seen_pairs;
  for (ArcId a = 0; a < static_cast<ArcId>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.from == arc.to) {
      emit("self-arc", "self arc on '" + g.nodes[arc.from].name + "'", {arc.from}, a);
      continue;
    }
    auto key = std::minmax(arc.from, arc.to);
    if (!seen_pairs.insert({key.first, key.second}).second)
      emit("dup-arc",
           "more than one arc between '" + g.nodes[arc.from].name + "' and '" +
               g.nodes[arc.to].name + "'",
           {arc.from, arc.to}, a);
    if (arc.optional_arc && !arc.directed)
      emit("optional-undirected", "optional arcs must be directed", {arc.from, arc.to}, a);
    if (!arc.directed && !same_plate_set(g.nodes[arc.from], g.nodes[arc.to]))
      emit("plate-boundary",
           "undirected arc between '" + g.nodes[arc.from].name + "' and '" +
               g.nodes[arc.to].name + "' crosses a plate boundary",
           {arc.from, arc.to}, a);
  }

  // acyclicity at the chain-component level: contract undirected components,
  // then the directed arcs must form a DAG, and no directed arc may join two
  // nodes of the same undirected component
  size_t nn = g.nodes.size();
  std::vector<int> comp(nn, -1);
  {
    // union-find over undirected arcs
    std::vector<int> uf(nn);
    for (size_t i = 0; i < nn; ++i) uf[i] = static_cast<int>(i);
    std::function<int(int)> root = [&](int x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    for (const Arc& arc : g.arcs)
      if (!arc.directed) uf[root(arc.from)] = root(arc.to);
    for (size_t i = 0; i < nn; ++i) comp[i] = root(static_cast<int>(i));
  }
  std::map<int, std::vector<int>> comp_children;
  std::map<int, int> indeg;
  std::set<int> comps(comp.begin(), comp.end());
  for (int c : comps) indeg[c] = 0;
  for (ArcId a = 0; a < static_cast<ArcId>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (!arc.directed || arc.from == arc.to) continue;
    if (comp[arc.from] == comp[arc.to]) {
      emit("cycle",
           "directed arc inside the undirected component of '" + g.nodes[arc.from].name + "'",
           {arc.from, arc.to}, a);
      continue;
    }
    comp_children[comp[arc.from]].push_back(comp[arc.to]);
    indeg[comp[arc.to]]++;
  }
  std::vector<int> queue;
  for (auto& [c, d] : indeg)
    if (d == 0) queue.push_back(c);
  size_t done = 0;
  while (done < queue.size()) {
    int c = queue[done++];
    for (int ch : comp_children[c])
      if (--indeg[ch] == 0) queue.push_back(ch);
  }
  if (done != comps.size()) {
    std::vector<NodeId> involved;
    for (NodeId v = 0; v < static_cast<NodeId>(nn); ++v)
      if (indeg[comp[v]] > 0) involved.push_back(v);
    emit("cycle", "directed arcs form a cycle at the chain-component level", involved);
  }

  return out;
}

// ---------------------------------------------------------------------------
// chain_components

ChainComponentPartition chain_components(const ChainGraph& g) {
  size_t nn = g.nodes.size();
  std::vector<int> uf(nn);
  for (size_t i = 0; i < nn; ++i) uf[i] = static_cast<int>(i);
  std::function<int(int)> root = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (const Arc& arc : g.arcs)
    if (!arc.directed) uf[root(arc.from)] = root(arc.to);

  std::map<int, std::vector<NodeId>> groups;
  for (NodeId v = 0; v < static_cast<NodeId>(nn); ++v) groups[root(v)].push_back(v);

  // topological order of the component DAG; ties broken by smallest member id
  std::map<int, std::set<int>> succ;
  std::map<int, int> indeg;
  for (auto& [r, _] : groups) indeg[r] = 0;
  for (const Arc& arc : g.arcs) {
    if (!arc.directed) continue;
    int a = root(arc.from), b = root(arc.to);
    if (a == b) throw ModelError("directed arc inside an undirected component");
    if (succ[a].insert(b).second) indeg[b]++;
  }
  std::set<int> ready;
  for (auto& [r, d] : indeg)
    if (d == 0) ready.insert(r);
  ChainComponentPartition part;
  part.component_of.assign(nn, -1);
  while (!ready.empty()) {
    int r = *ready.begin();
    ready.erase(ready.begin());
    for (NodeId v : groups[r]) part.component_of[v] = static_cast<int>(part.components.size());
    part.components.push_back(groups[r]);
    for (int s : succ[r])
      if (--indeg[s] == 0) ready.insert(s);
  }
  if (part.components.size() != groups.size())
    throw ModelError("chain components do not admit a topological order");
  return part;
}

// ---------------------------------------------------------------------------
// expand_plates

namespace {

struct PlateCtx {
  std::map<PlateId, int> index;  // plate -> current index
};

std::vector<int> plate_dims(const ChainGraph& g, const std::vector<PlateId>& plates) {
  std::vector<int> dims;
  for (PlateId p : plates) {
    int c = g.plates[p].cardinality;
    if (c < 1) throw ModelError("plate '" + g.plates[p].name + "' has unbound cardinality");
    dims.push_back(c);
  }
  return dims;
}

int flatten(const std::vector<int>& dims, const std::vector<int>& idx) {
  int f = 0;
  for (size_t i = 0; i < dims.size(); ++i) f = f * dims[i] + idx[i];
  return f;
}

std::vector<int> unflatten(const std::vector<int>& dims, int f) {
  std::vector<int> idx(dims.size());
  for (size_t i = dims.size(); i-- > 0;) {
    idx[i] = f % dims[i];
    f /= dims[i];
  }
  return idx;
}

int count_of(const std::vector<int>& dims) {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

std::string index_suffix(const std::vector<int>& idx) {
  if (idx.empty()) return "";
  std::string s = "[";
  for (size_t i = 0; i < idx.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(idx[i]);
  }
  return s + "]";
}

struct Expander {
  const ChainGraph& g;
  ChainGraph out;

  explicit Expander(const ChainGraph& src) : g(src) {}

  // Resolve a selector node to a concrete copy: every plate of the selector
  // must be bound by the context.
  NodeId resolve_concrete(NodeId node, const PlateCtx& ctx) const {
    const VariableNode& n = g.nodes[node];
    std::vector<int> idx;
    for (PlateId p : n.plates) {
      auto it = ctx.index.find(p);
      if (it == ctx.index.end())
        throw ModelError("selector '" + n.name + "' is not determined by its context");
      idx.push_back(it->second);
    }
    return out.copies[node][flatten(plate_dims(g, n.plates), idx)];
  }

  NodeRef resolve_ref(const NodeRef& r, const PlateCtx& ctx) const {
    const VariableNode& t = g.nodes[r.node];
    std::vector<PlateId> unshared;
    std::vector<int> fixed(t.plates.size(), -1);
    for (size_t i = 0; i < t.plates.size(); ++i) {
      auto it = ctx.index.find(t.plates[i]);
      if (it != ctx.index.end())
        fixed[i] = it->second;
      else
        unshared.push_back(t.plates[i]);
    }
    if (r.subs.size() != unshared.size())
      throw ModelError("reference to '" + t.name + "' needs " +
                       std::to_string(unshared.size()) + " selector(s)");

    std::vector<int> tdims = plate_dims(g, t.plates);
    std::vector<int> udims = plate_dims(g, unshared);
    int ucount = count_of(udims);
    std::vector<NodeId> candidates(ucount);
    for (int uf = 0; uf < ucount; ++uf) {
      std::vector<int> uidx = unflatten(udims, uf);
      std::vector<int> full(t.plates.size());
      size_t uk = 0;
      for (size_t i = 0; i < t.plates.size(); ++i)
        full[i] = fixed[i] >= 0 ? fixed[i] : uidx[uk++];
      candidates[uf] = out.copies[r.node][flatten(tdims, full)];
    }

    NodeRef res;
    if (unshared.empty()) {
      res.node = candidates[0];
      return res;
    }
    res.node = kNoNode;
    res.copies = std::move(candidates);
    res.sub_arity = udims;
    for (NodeId s : r.subs) res.subs.push_back(resolve_concrete(s, ctx));
    return res;
  }

  Arg resolve_arg(const Arg& a, const PlateCtx& ctx) const {
    Arg r = a;
    switch (a.kind) {
      case Arg::Kind::Number: break;
      case Arg::Kind::Ref: r.ref = resolve_ref(a.ref, ctx); break;
      case Arg::Kind::List:
        for (Arg& it : r.items) it = resolve_arg(it, ctx);
        break;
      case Arg::Kind::Expr: r.expr = resolve_expr(*a.expr, ctx); break;
    }
    return r;
  }

  ExprPtr resolve_expr(const Expr& e, const PlateCtx& ctx) const {
    using Op = Expr::Op;
    switch (e.op) {
      case Op::Const: return expr_const(e.value);
      case Op::Ref: return expr_ref(resolve_ref(e.ref, ctx));
      case Op::Sum: {
        int card = g.plates[e.sum_plate].cardinality;
        if (card < 1) throw ModelError("sum over unbound plate");
        ExprPtr acc;
        for (int i = 0; i < card; ++i) {
          PlateCtx inner = ctx;
          inner.index[e.sum_plate] = i;
          ExprPtr term = resolve_expr(*e.a, inner);
          acc = acc ? expr_binary(Op::Add, acc, term) : term;
        }
        return acc;
      }
      case Op::Cmp:
        return expr_cmp(e.cmp, resolve_expr(*e.a, ctx), resolve_expr(*e.b, ctx));
      default: {
        ExprPtr a = e.a ? resolve_expr(*e.a, ctx) : nullptr;
        ExprPtr b = e.b ? resolve_expr(*e.b, ctx) : nullptr;
        if (b) return expr_binary(e.op, a, b);
        auto r = expr_unary(e.op, a);
        return r;
      }
    }
  }
};

}  // namespace

ChainGraph expand_plates(const ChainGraph& g) {
  Expander ex(g);
  ChainGraph& out = ex.out;
  out.expanded = true;
  out.copies.resize(g.nodes.size());

  // pass 1: allocate copies
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v) {
    const VariableNode& n = g.nodes[v];
    std::vector<int> dims = plate_dims(g, n.plates);
    int cnt = count_of(dims);
    for (int f = 0; f < cnt; ++f) {
      VariableNode c = n;
      c.plates.clear();
      c.base = v;
      c.index = unflatten(dims, f);
      c.name = n.name + index_suffix(c.index);
      c.family.reset();
      c.expr = nullptr;
      out.copies[v].push_back(out.add_node(std::move(c)));
    }
  }

  // pass 2: rewrite definitions per copy
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v) {
    const VariableNode& n = g.nodes[v];
    std::vector<int> dims = plate_dims(g, n.plates);
    for (int f = 0; f < count_of(dims); ++f) {
      PlateCtx ctx;
      std::vector<int> idx = unflatten(dims, f);
      for (size_t i = 0; i < n.plates.size(); ++i) ctx.index[n.plates[i]] = idx[i];
      VariableNode& c = out.nodes[out.copies[v][f]];
      if (n.family) {
        FamilySpec fs;
        fs.tag = n.family->tag;
        for (const Arg& a : n.family->args) fs.args.push_back(ex.resolve_arg(a, ctx));
        c.family = std::move(fs);
      }
      if (n.expr) c.expr = ex.resolve_expr(*n.expr, ctx);
    }
  }

  // pass 3: arcs
  for (const Arc& arc : g.arcs) {
    const VariableNode& u = g.nodes[arc.from];
    const VariableNode& v = g.nodes[arc.to];
    std::vector<int> udims = plate_dims(g, u.plates), vdims = plate_dims(g, v.plates);
    if (!arc.directed) {
      // identical plate membership was validated; copy index-wise
      for (int f = 0; f < count_of(vdims); ++f) {
        std::vector<int> vidx = unflatten(vdims, f);
        std::vector<int> uidx(u.plates.size());
        for (size_t i = 0; i < u.plates.size(); ++i) {
          auto it = std::find(v.plates.begin(), v.plates.end(), u.plates[i]);
          uidx[i] = vidx[it - v.plates.begin()];
        }
        Arc a = arc;
        a.from = out.copies[arc.from][flatten(udims, uidx)];
        a.to = out.copies[arc.to][f];
        out.add_arc(a);
      }
    } else {
      // duplicate for every pair of indices agreeing on shared plates
      for (int fv = 0; fv < count_of(vdims); ++fv) {
        std::vector<int> vidx = unflatten(vdims, fv);
        std::map<PlateId, int> bound;
        for (size_t i = 0; i < v.plates.size(); ++i) bound[v.plates[i]] = vidx[i];
        std::vector<size_t> free_pos;
        std::vector<int> free_dims;
        std::vector<int> uidx(u.plates.size(), -1);
        for (size_t i = 0; i < u.plates.size(); ++i) {
          auto it = bound.find(u.plates[i]);
          if (it != bound.end())
            uidx[i] = it->second;
          else {
            free_pos.push_back(i);
            free_dims.push_back(udims[i]);
          }
        }
        for (int ff = 0; ff < count_of(free_dims); ++ff) {
          std::vector<int> fidx = unflatten(free_dims, ff);
          for (size_t k = 0; k < free_pos.size(); ++k) uidx[free_pos[k]] = fidx[k];
          Arc a = arc;
          a.from = out.copies[arc.from][flatten(udims, uidx)];
          a.to = out.copies[arc.to][fv];
          out.add_arc(a);
        }
      }
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// maximal cliques (Bron-Kerbosch with pivoting)

namespace {

void bron_kerbosch(const std::vector<std::set<NodeId>>& nb, std::set<NodeId>& R,
                   std::set<NodeId> P, std::set<NodeId> X,
                   std::vector<std::vector<NodeId>>& out) {
  if (P.empty() && X.empty()) {
    out.emplace_back(R.begin(), R.end());
    return;
  }
  NodeId pivot = kNoNode;
  size_t best = 0;
  for (NodeId v : P)
    if (pivot == kNoNode || nb[v].size() >= best) pivot = v, best = nb[v].size();
  for (NodeId v : X)
    if (pivot == kNoNode || nb[v].size() > best) pivot = v, best = nb[v].size();
  std::vector<NodeId> cand;
  for (NodeId v : P)
    if (!nb[pivot].count(v)) cand.push_back(v);
  for (NodeId v : cand) {
    std::set<NodeId> P2, X2;
    for (NodeId w : P)
      if (nb[v].count(w)) P2.insert(w);
    for (NodeId w : X)
      if (nb[v].count(w)) X2.insert(w);
    R.insert(v);
    bron_kerbosch(nb, R, std::move(P2), std::move(X2), out);
    R.erase(v);
    P.erase(v);
    X.insert(v);
  }
}

}  // namespace

std::vector<std::vector<NodeId>> maximal_cliques(const ChainGraph& g) {
  size_t nn = g.nodes.size();
  std::vector<std::set<NodeId>> nb(nn);
  for (const Arc& a : g.arcs)
    if (!a.directed) {
      nb[a.from].insert(a.to);
      nb[a.to].insert(a.from);
    }
  std::vector<std::vector<NodeId>> out;
  std::set<NodeId> P, X, R;
  for (NodeId v = 0; v < static_cast<NodeId>(nn); ++v)
    if (!nb[v].empty()) P.insert(v);
  bron_kerbosch(nb, R, P, X, out);
  for (NodeId v = 0; v < static_cast<NodeId>(nn); ++v)
    if (nb[v].empty()) out.push_back({v});
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// blankets

std::vector<NodeId> nd_children(const ChainGraph& g, const Adjacency& adj, NodeId v) {
  std::set<NodeId> seen, result;
  std::vector<NodeId> stack(adj.children[v].begin(), adj.children[v].end());
  while (!stack.empty()) {
    NodeId c = stack.back();
    stack.pop_back();
    if (!seen.insert(c).second) continue;
    if (g.nodes[c].deterministic)
      for (NodeId cc : adj.children[c]) stack.push_back(cc);
    else
      result.insert(c);
  }
  return {result.begin(), result.end()};
}

std::vector<NodeId> nd_parents(const ChainGraph& g, const Adjacency& adj, NodeId v) {
  std::set<NodeId> seen, result;
  std::vector<NodeId> stack(adj.parents[v].begin(), adj.parents[v].end());
  while (!stack.empty()) {
    NodeId p = stack.back();
    stack.pop_back();
    if (!seen.insert(p).second) continue;
    if (g.nodes[p].deterministic)
      for (NodeId pp : adj.parents[p]) stack.push_back(pp);
    else
      result.insert(p);
  }
  return {result.begin(), result.end()};
}

std::vector<NodeId> det_parents(const ChainGraph& g, const Adjacency& adj, NodeId v) {
  std::vector<NodeId> out;
  for (NodeId p : adj.parents[v])
    if (g.nodes[p].deterministic) out.push_back(p);
  return out;
}

std::vector<NodeId> markov_blanket(const ChainGraph& g, NodeId u) {
  if (g.nodes[u].deterministic)
    throw ModelError("Markov blanket of deterministic node '" + g.nodes[u].name + "'");
  Adjacency adj(g);
  ChainComponentPartition comps = chain_components(g);
  std::set<NodeId> blanket;
  for (NodeId v : adj.neighbors[u]) blanket.insert(v);
  for (NodeId v : nd_parents(g, adj, u)) blanket.insert(v);
  std::vector<NodeId> ndch = nd_children(g, adj, u);
  for (NodeId v : ndch) blanket.insert(v);
  std::set<int> child_comps;
  for (NodeId v : ndch) child_comps.insert(comps.component_of[v]);
  for (int c : child_comps)
    for (NodeId m : comps.components[c])
      for (NodeId p : nd_parents(g, adj, m)) blanket.insert(p);
  blanket.erase(u);
  return {blanket.begin(), blanket.end()};
}

}  // namespace gm
