#include "gm/eval.hpp"

#include <algorithm>
#include <cmath>

namespace gm {

State make_state(const ChainGraph& g) {
  State s;
  s.vals.reserve(g.nodes.size());
  for (const VariableNode& n : g.nodes) {
    switch (n.domain.kind) {
      case Domain::Kind::Discrete: s.vals.emplace_back(0); break;
      case Domain::Kind::Real: s.vals.emplace_back(0.0); break;
      case Domain::Kind::PositiveReal: s.vals.emplace_back(1.0); break;
      case Domain::Kind::UnitInterval: s.vals.emplace_back(0.5); break;
      case Domain::Kind::RealVector: s.vals.emplace_back(VectorXd::Zero(n.domain.size).eval()); break;
      case Domain::Kind::Simplex:
        s.vals.emplace_back(VectorXd::Constant(n.domain.size, 1.0 / n.domain.size).eval());
        break;
      case Domain::Kind::PsdMatrix:
        s.vals.emplace_back(MatrixXd::Identity(n.domain.size, n.domain.size).eval());
        break;
    }
  }
  return s;
}

NodeId ref_target(const State& s, const NodeRef& r) {
  if (!r.dynamic()) return r.node;
  int f = 0;
  for (size_t i = 0; i < r.subs.size(); ++i) {
    int v = as_index(s.vals[r.subs[i]]);
    if (v < 0 || v >= r.sub_arity[i]) throw ModelError("selector value out of range");
    f = f * r.sub_arity[i] + v;
  }
  return r.copies[f];
}

double ref_value(const State& s, const NodeRef& r) {
  const Value& v = s.vals[ref_target(s, r)];
  if (std::holds_alternative<int>(v)) return static_cast<double>(std::get<int>(v));
  return as_scalar(v);
}

const Value& ref_full_value(const State& s, const NodeRef& r) { return s.vals[ref_target(s, r)]; }

double arg_scalar(const ChainGraph&, const State& s, const Arg& a) {
  switch (a.kind) {
    case Arg::Kind::Number: return a.number;
    case Arg::Kind::Ref: return ref_value(s, a.ref);
    case Arg::Kind::Expr:
      return eval_expr(*a.expr, [&](const NodeRef& r) { return ref_value(s, r); });
    case Arg::Kind::List: throw ModelError("expected a scalar argument, found a list");
  }
  return 0.0;
}

VectorXd arg_vector(const ChainGraph& g, const State& s, const Arg& a) {
  if (a.kind == Arg::Kind::List) {
    VectorXd v(a.items.size());
    for (size_t i = 0; i < a.items.size(); ++i) v[i] = arg_scalar(g, s, a.items[i]);
    return v;
  }
  if (a.kind == Arg::Kind::Ref) {
    const Value& v = ref_full_value(s, a.ref);
    if (std::holds_alternative<VectorXd>(v)) return std::get<VectorXd>(v);
    VectorXd one(1);
    one[0] = as_scalar(v);
    return one;
  }
  if (a.kind == Arg::Kind::Number) {
    VectorXd one(1);
    one[0] = a.number;
    return one;
  }
  throw ModelError("expected a vector argument");
}

MatrixXd arg_matrix(const ChainGraph& g, const State& s, const Arg& a, int dim) {
  if (a.kind == Arg::Kind::List) {
    if (static_cast<int>(a.items.size()) != dim * dim)
      throw ModelError("matrix literal has wrong element count");
    MatrixXd m(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = arg_scalar(g, s, a.items[r * dim + c]);
    return m;
  }
  if (a.kind == Arg::Kind::Ref) {
    const Value& v = ref_full_value(s, a.ref);
    if (std::holds_alternative<MatrixXd>(v)) return std::get<MatrixXd>(v);
    if (dim == 1) {
      MatrixXd m(1, 1);
      m(0, 0) = as_scalar(v);
      return m;
    }
  }
  if (a.kind == Arg::Kind::Number && dim == 1) {
    MatrixXd m(1, 1);
    m(0, 0) = a.number;
    return m;
  }
  throw ModelError("expected a matrix argument");
}

VectorXd categorical_params(const ChainGraph& g, const State& s, NodeId v) {
  const VariableNode& n = g.nodes[v];
  if (!n.family) throw ModelError("node '" + n.name + "' has no family");
  const FamilySpec& f = *n.family;
  int arity = n.domain.size;

  if (f.tag == FamilyTag::Bernoulli) {
    double p;
    if (f.args.size() >= 1 && f.args[0].kind == Arg::Kind::List) {
      // conditional table: P(true | parent config)
      int row = 0;
      for (size_t i = 1; i < f.args.size(); ++i) {
        NodeId pv = ref_target(s, f.args[i].ref);
        row = row * g.arity(pv) + as_index(s.vals[pv]);
      }
      p = arg_scalar(g, s, f.args[0].items.at(row));
    } else {
      p = arg_scalar(g, s, f.args.at(0));
    }
    VectorXd t(2);
    t << 1.0 - p, p;
    return t;
  }
  if (f.tag != FamilyTag::Multinomial)
    throw ModelError("node '" + n.name + "' is not categorical");

  if (!f.args.empty() && f.args[0].kind == Arg::Kind::List && f.args.size() > 1) {
    int row = 0;
    for (size_t i = 1; i < f.args.size(); ++i) {
      NodeId pv = ref_target(s, f.args[i].ref);
      row = row * g.arity(pv) + as_index(s.vals[pv]);
    }
    VectorXd t(arity);
    for (int c = 0; c < arity; ++c) t[c] = arg_scalar(g, s, f.args[0].items.at(row * arity + c));
    return t;
  }
  if (f.args.size() == 1 && f.args[0].kind == Arg::Kind::List) {
    VectorXd t(f.args[0].items.size());
    for (int c = 0; c < t.size(); ++c) t[c] = arg_scalar(g, s, f.args[0].items[c]);
    return t;
  }
  if (f.args.size() == 1 && f.args[0].kind == Arg::Kind::Ref) {
    const Value& val = ref_full_value(s, f.args[0].ref);
    if (std::holds_alternative<VectorXd>(val)) return std::get<VectorXd>(val);
    double p = as_scalar(val);
    VectorXd t(2);
    t << 1.0 - p, p;
    return t;
  }
  // literal probabilities
  VectorXd t(f.args.size());
  for (size_t c = 0; c < f.args.size(); ++c) t[c] = arg_scalar(g, s, f.args[c]);
  return t;
}

double log_node_factor(const ChainGraph& g, const State& s, NodeId v) {
  const VariableNode& n = g.nodes[v];
  if (n.deterministic) return 0.0;
  const FamilySpec& f = *n.family;
  switch (f.tag) {
    case FamilyTag::Bernoulli:
    case FamilyTag::Multinomial: {
      VectorXd t = categorical_params(g, s, v);
      return multinomial_logpdf(t, as_index(s.vals[v]));
    }
    case FamilyTag::Beta:
      return beta_logpdf(arg_scalar(g, s, f.args.at(0)), arg_scalar(g, s, f.args.at(1)),
                         as_scalar(s.vals[v]));
    case FamilyTag::Dirichlet: {
      VectorXd alpha;
      if (f.args.size() == 1 && f.args[0].kind == Arg::Kind::List) {
        alpha = arg_vector(g, s, f.args[0]);
      } else {
        alpha.resize(f.args.size());
        for (size_t i = 0; i < f.args.size(); ++i) alpha[i] = arg_scalar(g, s, f.args[i]);
      }
      return dirichlet_logpdf(alpha, as_vector(s.vals[v]));
    }
    case FamilyTag::Gaussian:
      return gaussian_logpdf(arg_scalar(g, s, f.args.at(0)), arg_scalar(g, s, f.args.at(1)),
                             as_scalar(s.vals[v]));
    case FamilyTag::GaussianLinear: {
      VectorXd theta = arg_vector(g, s, f.args.at(0));
      double lam = arg_scalar(g, s, f.args.at(1));
      VectorXd basis(f.args.size() - 2);
      for (size_t i = 2; i < f.args.size(); ++i) basis[i - 2] = arg_scalar(g, s, f.args[i]);
      return gaussian_linear_logpdf(theta, lam, basis, as_scalar(s.vals[v]));
    }
    case FamilyTag::Gamma:
      return gamma_logpdf(arg_scalar(g, s, f.args.at(0)), arg_scalar(g, s, f.args.at(1)),
                          as_scalar(s.vals[v]));
    case FamilyTag::MvGaussian: {
      int d = n.domain.size;
      VectorXd mean = arg_vector(g, s, f.args.at(0));
      MatrixXd prec;
      if (f.args.size() == 2) {
        prec = arg_matrix(g, s, f.args[1], d);
      } else if (f.args.size() == 3 && f.args[1].kind != Arg::Kind::Number) {
        // coefficient prior coupled to a scalar noise precision
        prec = arg_matrix(g, s, f.args[1], d) * arg_scalar(g, s, f.args[2]);
      } else if (f.args.size() == 3) {
        // mean prior coupled to a precision matrix: kappa * P
        prec = arg_scalar(g, s, f.args[1]) * arg_matrix(g, s, f.args[2], d);
      } else {
        throw ModelError("bad MvGaussian arguments on '" + n.name + "'");
      }
      return mv_gaussian_logpdf(mean, prec, as_vector(s.vals[v]));
    }
    case FamilyTag::Wishart: {
      int d = n.domain.size;
      return wishart_logpdf(arg_scalar(g, s, f.args.at(0)), arg_matrix(g, s, f.args.at(1), d),
                            as_matrix(s.vals[v]));
    }
  }
  return kNegInf;
}

double log_link_potential(const ChainGraph& g, const State& s, const Arc& a) {
  if (a.link_table.size() == 0) return 0.0;
  int i = as_index(s.vals[a.from]);
  int j = as_index(s.vals[a.to]);
  return a.link_table[i * g.arity(a.to) + j];
}

ComponentModel::ComponentModel(const ChainGraph& g)
    : comps(chain_components(g)), adj(g) {
  comp_links.resize(comps.components.size());
  needs_normalizer.assign(comps.components.size(), 0);
  for (ArcId a = 0; a < static_cast<ArcId>(g.arcs.size()); ++a)
    if (!g.arcs[a].directed) {
      int c = comps.component_of[g.arcs[a].from];
      comp_links[c].push_back(a);
      needs_normalizer[c] = 1;
    }

  // deterministic dependency order
  std::vector<NodeId> dets;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (g.nodes[v].deterministic) dets.push_back(v);
  std::vector<char> placed(g.nodes.size(), 0);
  while (det_order.size() < dets.size()) {
    bool progress = false;
    for (NodeId d : dets) {
      if (placed[d]) continue;
      std::vector<NodeRef> refs;
      collect_refs(*g.nodes[d].expr, refs);
      bool ready = true;
      for (const NodeRef& r : refs) {
        std::vector<NodeId> cands = r.dynamic() ? r.copies : std::vector<NodeId>{r.node};
        for (NodeId c : cands)
          if (g.nodes[c].deterministic && !placed[c]) ready = false;
      }
      if (!ready) continue;
      det_order.push_back(d);
      placed[d] = 1;
      progress = true;
    }
    if (!progress) throw ModelError("deterministic cycle detected");
  }
}

void refresh_deterministic(const ChainGraph& g, const ComponentModel& cm, State& s) {
  for (NodeId d : cm.det_order)
    s.vals[d] = eval_expr(*g.nodes[d].expr, [&](const NodeRef& r) { return ref_value(s, r); });
}

namespace {

double component_unnormalized(const ChainGraph& g, const ComponentModel& cm, const State& s,
                              int comp) {
  double lp = 0.0;
  for (NodeId v : cm.comps.components[comp]) lp += log_node_factor(g, s, v);
  for (ArcId a : cm.comp_links[comp]) lp += log_link_potential(g, s, g.arcs[a]);
  return lp;
}

}  // namespace

double log_component_conditional(const ChainGraph& g, const ComponentModel& cm, State& s,
                                 int comp) {
  double lp = component_unnormalized(g, cm, s, comp);
  if (!cm.needs_normalizer[comp]) return lp;
  const std::vector<NodeId>& members = cm.comps.components[comp];
  for (NodeId v : members)
    if (!g.discrete(v))
      throw ModelError("linked component with non-discrete member '" + g.nodes[v].name + "'");
  std::vector<double> terms;
  for_each_config(g, members, s,
                  [&] { terms.push_back(component_unnormalized(g, cm, s, comp)); });
  return lp - log_sum_exp(terms);
}

double log_joint(const ChainGraph& g, const ComponentModel& cm, State& s) {
  refresh_deterministic(g, cm, s);
  double lp = 0.0;
  for (int c = 0; c < static_cast<int>(cm.comps.components.size()); ++c) {
    bool all_det = true;
    for (NodeId v : cm.comps.components[c])
      if (!g.nodes[v].deterministic) all_det = false;
    if (all_det) continue;
    lp += log_component_conditional(g, cm, s, c);
  }
  return lp;
}

void for_each_config(const ChainGraph& g, const std::vector<NodeId>& targets, State& s,
                     const std::function<void()>& fn) {
  std::vector<Value> saved;
  saved.reserve(targets.size());
  for (NodeId v : targets) {
    if (!g.discrete(v)) throw ModelError("enumeration over non-discrete node");
    saved.push_back(s.vals[v]);
  }
  size_t k = targets.size();
  std::vector<int> idx(k, 0);
  for (;;) {
    for (size_t i = 0; i < k; ++i) s.vals[targets[i]] = idx[i];
    fn();
    size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < g.arity(targets[pos])) break;
      idx[pos] = 0;
      if (pos == 0) {
        for (size_t i = 0; i < k; ++i) s.vals[targets[i]] = saved[i];
        return;
      }
    }
    if (k == 0) {  // single empty configuration
      return;
    }
  }
}

double log_sum_exp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace gm
