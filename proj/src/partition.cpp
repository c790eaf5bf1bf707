#include "hypergibbs/partition.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hypergibbs/parallel.hpp"

namespace hypergibbs {

Instance::Instance(std::shared_ptr<const ModelSpec> model, Hypergraph graph, Potentials potentials)
    : model_(std::move(model)), graph_(std::move(graph)), pot_(std::move(potentials)) {
  if (!model_) throw std::invalid_argument("instance needs a model");
  if (graph_.arity() != model_->arity()) throw std::invalid_argument("graph arity differs from model arity");
  if (pot_.node.size() != graph_.n_nodes() || pot_.edge.size() != graph_.n_edges())
    throw std::invalid_argument("potential draws do not match the graph");
  for (std::size_t d : pot_.node)
    if (d >= model_->node_pot.law.size()) throw std::out_of_range("node draw out of range");
  for (std::size_t d : pot_.edge)
    if (d >= model_->edge_pot.law.size()) throw std::out_of_range("edge draw out of range");
}

Instance Instance::sample(std::shared_ptr<const ModelSpec> model, Hypergraph graph, Seed seed) {
  Potentials p = draw_potentials(*model, graph.n_nodes(), graph.n_edges(), seed);
  return Instance(std::move(model), std::move(graph), std::move(p));
}

Instance Instance::with_edge(std::span<const std::size_t> tuple, std::size_t draw) const {
  Hypergraph g = graph_;
  g.add_edge(tuple);
  Potentials p = pot_;
  p.edge.push_back(draw);
  return Instance(model_, std::move(g), std::move(p));
}

Instance Instance::with_node_potential(std::size_t u, std::size_t draw) const {
  Potentials p = pot_;
  p.node.at(u) = draw;
  return Instance(model_, graph_, std::move(p));
}

Instance Instance::with_node_table(std::size_t u, const Eigen::VectorXd& table) const {
  if (static_cast<std::size_t>(table.size()) != model_->domain.size())
    throw std::invalid_argument("node table size mismatch");
  auto m = std::make_shared<ModelSpec>(*model_);
  m->node_pot.law.push_back({0.0, table});
  Potentials p = pot_;
  p.node.at(u) = m->node_pot.law.size() - 1;
  return Instance(std::move(m), graph_, std::move(p));
}

std::string Instance::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = nlohmann::ordered_json::parse(model_config_to_json({model_->name, model_->params, 0}));
  j["graph"] = nlohmann::ordered_json::parse(graph_.to_json());
  j["node_draws"] = pot_.node;
  j["edge_draws"] = pot_.edge;
  auto nodes = nlohmann::ordered_json::array();
  for (std::size_t u = 0; u < graph_.n_nodes(); ++u) {
    const auto& h = node_table(u);
    nodes.push_back(std::vector<double>(h.data(), h.data() + h.size()));
  }
  j["node_tables"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < graph_.n_edges(); ++e) {
    const auto& t = edge_table(e).data();
    edges.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  }
  j["edge_tables"] = std::move(edges);
  return j.dump();
}

LogValue log_weight(const Instance& instance, std::span<const std::size_t> assignment) {
  const auto& g = instance.graph();
  const auto& dom = instance.model().domain;
  if (assignment.size() != g.n_nodes()) throw std::invalid_argument("assignment length mismatch");
  for (std::size_t s : assignment)
    if (s >= dom.size()) throw std::out_of_range("assignment value outside the spin domain");
  LogValue total = LogValue::from_log(0.0);
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    std::size_t s = assignment[u];
    total = total + LogValue::from_linear(dom.weight(s) * instance.node_table(u)[static_cast<Eigen::Index>(s)]);
    if (total.is_neg_inf()) return total;
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(g.arity()));
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    auto tuple = g.edge(e);
    for (std::size_t k = 0; k < tuple.size(); ++k) idx[k] = assignment[tuple[k]];
    total = total + LogValue::from_linear(instance.edge_table(e)(idx));
    if (total.is_neg_inf()) return total;
  }
  return total;
}

namespace {

// Log tables with explicit zero flags; no -inf arithmetic in the hot loop.
struct LogTable {
  std::vector<double> log;
  std::vector<unsigned char> zero;

  explicit LogTable(std::size_t n) : log(n, 0.0), zero(n, 0) {}
  void set(std::size_t i, double linear) {
    if (linear > 0.0) log[i] = std::log(linear);
    else zero[i] = 1;
  }
};

struct ClosingEdge {
  const LogTable* table;
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> strides;
};

struct Prepared {
  std::size_t n = 0;
  std::size_t states = 0;
  std::vector<LogTable> node_logs;
  std::vector<LogTable> edge_logs;                  // one per distinct edge draw
  std::vector<std::vector<ClosingEdge>> closing;  // edges whose largest node is d
};

Prepared prepare(const Instance& inst) {
  Prepared p;
  const auto& g = inst.graph();
  const auto& dom = inst.model().domain;
  p.n = g.n_nodes();
  p.states = dom.size();
  for (std::size_t u = 0; u < p.n; ++u) {
    LogTable t(p.states);
    const auto& h = inst.node_table(u);
    for (std::size_t s = 0; s < p.states; ++s) t.set(s, dom.weight(s) * h[static_cast<Eigen::Index>(s)]);
    p.node_logs.push_back(std::move(t));
  }
  const auto& law = inst.model().edge_pot.law;
  p.edge_logs.reserve(law.size());
  for (const auto& w : law) {
    LogTable t(w.value.size());
    for (std::size_t f = 0; f < w.value.size(); ++f) t.set(f, w.value[f]);
    p.edge_logs.push_back(std::move(t));
  }
  p.closing.resize(p.n);
  const auto k = static_cast<std::size_t>(g.arity());
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    auto tuple = g.edge(e);
    ClosingEdge c;
    c.table = &p.edge_logs[inst.potentials().edge[e]];
    c.nodes.assign(tuple.begin(), tuple.end());
    c.strides.assign(k, 1);
    for (std::size_t i = k - 1; i-- > 0;) c.strides[i] = c.strides[i + 1] * p.states;
    std::size_t last = *std::max_element(tuple.begin(), tuple.end());
    p.closing[last].push_back(std::move(c));
  }
  return p;
}

class Enumerator {
 public:
  explicit Enumerator(const Prepared& p) : p_(p), sigma_(p.n, 0) {}

  // Adds the log terms that become complete when node d takes state s.
  bool step(std::size_t d, std::size_t s, double& term) const {
    const auto& h = p_.node_logs[d];
    if (h.zero[s]) return false;
    term = h.log[s];
    for (const auto& c : p_.closing[d]) {
      std::size_t f = 0;
      for (std::size_t i = 0; i < c.nodes.size(); ++i) f += sigma_[c.nodes[i]] * c.strides[i];
      if (c.table->zero[f]) return false;
      term += c.table->log[f];
    }
    return true;
  }

  void descend(std::size_t d, double partial, LogSumExp& acc) {
    for (std::size_t s = 0; s < p_.states; ++s) {
      sigma_[d] = s;
      double term;
      if (!step(d, s, term)) continue;
      if (d + 1 == p_.n) acc.add(partial + term);
      else descend(d + 1, partial + term, acc);
    }
  }

  // Enumerates the subtree under a fixed assignment of nodes [0, depth).
  void run_chunk(std::size_t chunk, std::size_t depth, LogSumExp& acc) {
    double partial = 0.0;
    for (std::size_t d = depth; d-- > 0;) {
      sigma_[d] = chunk % p_.states;
      chunk /= p_.states;
    }
    for (std::size_t d = 0; d < depth; ++d) {
      double term;
      if (!step(d, sigma_[d], term)) return;
      partial += term;
    }
    if (depth == p_.n) acc.add(partial);
    else descend(depth, partial, acc);
  }

 private:
  const Prepared& p_;
  std::vector<std::size_t> sigma_;
};

}  // namespace

LogValue log_z_exact(const Instance& instance, const ExactOptions& options) {
  const std::size_t n = instance.graph().n_nodes();
  const std::size_t s = instance.model().domain.size();
  const double space = std::pow(static_cast<double>(s), static_cast<double>(n));
  if (space > options.state_cap)
    throw CapExceeded("state space " + std::to_string(s) + "^" + std::to_string(n) +
                      " exceeds the exact-enumeration cap; use Monte Carlo");
  Prepared p = prepare(instance);

  // Fixed prefix depth: chunking depends only on the instance, never on workers.
  std::size_t depth = 0;
  std::size_t chunks = 1;
  while (depth < n && chunks < 64) {
    chunks *= s;
    ++depth;
  }
  std::vector<LogSumExp> partial(chunks);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        Enumerator en(p);
        en.run_chunk(c, depth, partial[c]);
      },
      chunks < 256 && space < 65536.0 ? 1u : options.workers);
  LogSumExp total;
  for (const auto& part : partial) total.merge(part);
  return total.result();
}

namespace {

struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    if (count == 0.0) {
      *this = o;
      return;
    }
    double total = count + o.count;
    double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }
};

}  // namespace

McEstimate log_z_mc(const Instance& instance, std::size_t samples, Seed seed, unsigned workers) {
  if (samples == 0) throw std::invalid_argument("log_z_mc needs at least one sample");
  const auto& g = instance.graph();
  const auto& dom = instance.model().domain;
  const std::size_t n = g.n_nodes();
  const std::size_t states = dom.size();

  // Per-node proposal CDFs proportional to cell weight times h.
  double log_mass = 0.0;
  std::vector<std::vector<double>> cdf(n, std::vector<double>(states));
  for (std::size_t u = 0; u < n; ++u) {
    const auto& h = instance.node_table(u);
    double mass = 0.0;
    for (std::size_t s = 0; s < states; ++s) {
      mass += dom.weight(s) * h[static_cast<Eigen::Index>(s)];
      cdf[u][s] = mass;
    }
    if (!(mass > 0.0) || !std::isfinite(mass))
      throw std::invalid_argument("log_z_mc needs a finite positive node mass at every node");
    for (auto& c : cdf[u]) c /= mass;
    log_mass += std::log(mass);
  }
  // Each edge factor is divided by its table maximum so weights stay in [0, 1].
  std::vector<double> log_emax(g.n_edges(), 0.0);
  double scale_log = 0.0;
  bool dead_table = false;
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    const double mx = instance.edge_table(e).max_coeff();
    if (!(mx > 0.0)) dead_table = true;
    else log_emax[e] = std::log(mx);
    scale_log += log_emax[e];
  }

  constexpr std::size_t kShard = 4096;
  const std::size_t shards = (samples + kShard - 1) / kShard;
  std::vector<Moments> parts(shards);
  parallel_for(
      shards,
      [&](std::size_t sh) {
        Rng rng(derive_seed(seed, kTagShards, sh));
        const std::size_t begin = sh * kShard;
        const std::size_t end = std::min(samples, begin + kShard);
        Assignment sigma(n);
        std::vector<std::size_t> idx(static_cast<std::size_t>(g.arity()));
        for (std::size_t i = begin; i < end; ++i) {
          for (std::size_t u = 0; u < n; ++u) {
            double x = rng.uniform();
            auto it = std::upper_bound(cdf[u].begin(), cdf[u].end(), x);
            sigma[u] = std::min<std::size_t>(static_cast<std::size_t>(it - cdf[u].begin()), states - 1);
          }
          double logw = 0.0;
          bool zero = false;
          for (std::size_t e = 0; e < g.n_edges() && !zero; ++e) {
            auto tuple = g.edge(e);
            for (std::size_t k = 0; k < tuple.size(); ++k) idx[k] = sigma[tuple[k]];
            double j = instance.edge_table(e)(idx);
            if (j > 0.0) logw += std::log(j) - log_emax[e];
            else zero = true;
          }
          parts[sh].add(zero ? 0.0 : std::exp(logw));
        }
      },
      workers);
  Moments total;
  for (const auto& p : parts) total.merge(p);

  McEstimate out;
  out.samples = samples;
  out.seed = seed;
  if (dead_table || total.mean <= 0.0) {
    out.all_zero = true;
    out.upper_bound_95 = log_mass + scale_log + std::log(3.0 / static_cast<double>(samples));
    return out;
  }
  out.log_z = LogValue::from_log(log_mass + scale_log + std::log(total.mean));
  double var = samples > 1 ? std::max(0.0, total.m2 / (total.count - 1.0)) : 0.0;
  out.std_error = std::sqrt(var / static_cast<double>(samples)) / total.mean;
  return out;
}

LogZBounds logz_bounds(const Instance& instance) {
  const auto& soft = instance.model().soft;
  const double count = static_cast<double>(instance.graph().n_edges() + instance.graph().n_nodes());
  return {count * std::log(soft.rho_min), count * std::log(soft.rho_max)};
}

double node_change_bound(const Instance& instance, std::size_t node) {
  const auto& g = instance.graph();
  if (node >= g.n_nodes()) throw std::out_of_range("node out of range");
  std::size_t incident = 0;
  for (std::size_t e = 0; e < g.n_edges(); ++e) {
    auto t = g.edge(e);
    if (std::find(t.begin(), t.end(), node) != t.end()) ++incident;
  }
  const auto& soft = instance.model().soft;
  return 2.0 * (1.0 + static_cast<double>(incident)) * (std::log(soft.rho_max) - std::log(soft.rho_min));
}

double edge_change_bound(const Instance& instance, std::span<const std::size_t> tuple) {
  const auto& g = instance.graph();
  if (tuple.size() != static_cast<std::size_t>(g.arity())) throw std::invalid_argument("edge arity mismatch");
  for (std::size_t u : tuple)
    if (u >= g.n_nodes()) throw std::out_of_range("edge node out of range");
  const double neighborhood = static_cast<double>(neighborhood_after_addition(g, tuple));
  const auto& soft = instance.model().soft;
  return (2.0 * g.arity() + 2.0 * neighborhood + 1.0) * (std::log(soft.rho_max) - std::log(soft.rho_min));
}

}  // namespace hypergibbs

namespace hypergibbs {

std::string logz_row_json(const LogValue& log_z, std::optional<double> std_error, const std::string& method,
                          Seed seed) {
  nlohmann::ordered_json j;
  if (log_z.is_neg_inf()) j["logz"] = "-inf";
  else j["logz"] = log_z.value();
  if (std_error) j["se"] = *std_error;
  j["method"] = method;
  j["seed"] = seed;
  return j.dump();
}

}  // namespace hypergibbs
