#include "hypergibbs/hypergraph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace hypergibbs {

Density::Density(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) throw std::invalid_argument("density denominator must be positive");
  if (numerator <= 0) throw std::invalid_argument("density must be positive");
  std::int64_t g = std::gcd(numerator, denominator);
  num_ = numerator / g;
  den_ = denominator / g;
}

Density Density::parse(std::string_view text) {
  auto bad = [&] { return std::invalid_argument("malformed density '" + std::string(text) + "'"); };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t a = 0, b = 0;
    auto r1 = std::from_chars(text.data(), text.data() + slash, a);
    auto r2 = std::from_chars(text.data() + slash + 1, text.data() + text.size(), b);
    if (r1.ec != std::errc() || r1.ptr != text.data() + slash || r2.ec != std::errc() ||
        r2.ptr != text.data() + text.size() || b <= 0)
      throw bad();
    return Density(a, b);
  }
  std::size_t i = 0;
  if (i < text.size() && text[i] == '+') ++i;
  __int128 num = 0;
  __int128 den = 1;
  bool digits = false;
  const __int128 limit = static_cast<__int128>(1) << 100;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    num = num * 10 + (text[i] - '0');
    digits = true;
    if (num > limit) throw bad();
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
      num = num * 10 + (text[i] - '0');
      den *= 10;
      digits = true;
      if (num > limit || den > limit) throw bad();
    }
  }
  if (!digits) throw bad();
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    int exponent = 0;
    auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), exponent);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw bad();
    if (std::abs(exponent) > 30) throw bad();
    for (int e = 0; e < std::abs(exponent); ++e) {
      if (exponent > 0) num *= 10;
      else den *= 10;
      if (num > limit || den > limit) throw bad();
    }
    i = text.size();
  }
  if (i != text.size()) throw bad();
  if (num == 0) throw std::invalid_argument("density must be positive");
  __int128 a = num, b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  num /= a;
  den /= a;
  const __int128 max64 = std::numeric_limits<std::int64_t>::max();
  if (num > max64 || den > max64) throw bad();
  return Density(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

Density Density::from_double(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("density must be positive and finite");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::invalid_argument("density formatting failed");
  return parse(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::size_t Density::edges_for(std::size_t n) const {
  __int128 prod = static_cast<__int128>(num_) * static_cast<__int128>(n);
  return static_cast<std::size_t>(prod / den_);
}

std::string Density::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  // Decimal form when the denominator is 2^a 5^b, else a fraction.
  std::int64_t d = den_;
  int twos = 0, fives = 0;
  while (d % 2 == 0) { d /= 2; ++twos; }
  while (d % 5 == 0) { d /= 5; ++fives; }
  if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);
  int places = std::max(twos, fives);
  __int128 scaled = static_cast<__int128>(num_);
  for (int i = 0; i < places; ++i) scaled *= 10;
  scaled /= den_;
  std::string digits = std::to_string(static_cast<long long>(scaled));
  while (static_cast<int>(digits.size()) <= places) digits.insert(digits.begin(), '0');
  digits.insert(digits.end() - places, '.');
  return digits;
}

Hypergraph::Hypergraph(std::size_t n_nodes, int arity) : n_(n_nodes), k_(arity) {
  if (n_nodes < 1) throw std::invalid_argument("hypergraph needs at least one node");
  if (arity < 1) throw std::invalid_argument("hypergraph arity must be positive");
}

void Hypergraph::add_edge(std::span<const std::size_t> tuple) {
  if (tuple.size() != static_cast<std::size_t>(k_)) throw std::invalid_argument("edge arity mismatch");
  for (std::size_t u : tuple)
    if (u >= n_) throw std::out_of_range("edge node out of range");
  nodes_.insert(nodes_.end(), tuple.begin(), tuple.end());
}

std::string Hypergraph::to_json() const {
  nlohmann::ordered_json j;
  j["n"] = n_;
  j["k"] = k_;
  auto edges = nlohmann::ordered_json::array();
  for (std::size_t e = 0; e < n_edges(); ++e) {
    auto tuple = edge(e);
    edges.push_back(std::vector<std::size_t>(tuple.begin(), tuple.end()));
  }
  j["edges"] = std::move(edges);
  return j.dump();
}

Hypergraph Hypergraph::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  Hypergraph g(j.at("n").get<std::size_t>(), j.at("k").get<int>());
  for (const auto& e : j.at("edges")) {
    auto tuple = e.get<std::vector<std::size_t>>();
    g.add_edge(tuple);
  }
  return g;
}

InterpolationPoint InterpolationPoint::from_global_edges(std::size_t global, std::size_t total_edges,
                                                         std::size_t n1, std::size_t n2) {
  if (global > total_edges) throw std::invalid_argument("more global edges than edges");
  return {total_edges - global, n1, n2};
}

void InterpolationPoint::validate(std::size_t n_nodes, std::size_t total_edges) const {
  if (n1 < 1 || n1 + n2 != n_nodes) throw std::invalid_argument("interpolation blocks must partition the nodes");
  if (t > total_edges) throw std::invalid_argument("interpolation t exceeds floor(cN)");
  // n2 == 0 only when the single block is the whole vertex set.
}

namespace {

void draw_slot(Hypergraph& g, std::size_t n, int k, Seed seed, std::size_t slot, bool restricted,
               std::size_t n1, std::vector<std::size_t>& tuple) {
  Rng rng(derive_seed(seed, kTagGraph, slot));
  std::size_t pick = rng.below(n);
  std::size_t offset = 0;
  std::size_t span = n;
  if (restricted) {
    if (pick < n1) {
      span = n1;
    } else {
      offset = n1;
      span = n - n1;
    }
  }
  for (int i = 0; i < k; ++i) tuple[static_cast<std::size_t>(i)] = offset + rng.below(span);
  g.add_edge(tuple);
}

}  // namespace

Hypergraph sample_interpolated(std::size_t n, const Density& c, int k, const InterpolationPoint& point,
                               Seed seed) {
  if (k < 2) throw std::invalid_argument("arity must be >= 2");
  const std::size_t m = c.edges_for(n);
  point.validate(n, m);
  Hypergraph g(n, k);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
  const std::size_t first_restricted = m - point.t;
  for (std::size_t j = 0; j < m; ++j) draw_slot(g, n, k, seed, j, j >= first_restricted, point.n1, tuple);
  return g;
}

Hypergraph sample_er(std::size_t n, const Density& c, int k, Seed seed) {
  if (n < 1) throw std::invalid_argument("need at least one node");
  return sample_interpolated(n, c, k, InterpolationPoint{0, n, 0}, seed);
}

Hypergraph sample_block(std::size_t n, std::size_t edges, int k, Seed seed) {
  Hypergraph g(n, k);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
  for (std::size_t j = 0; j < edges; ++j) draw_slot(g, n, k, seed, j, false, n, tuple);
  return g;
}

DegreeStats degree_stats(const Hypergraph& graph) {
  DegreeStats s;
  const std::size_t n = graph.n_nodes();
  const std::size_t m = graph.n_edges();
  s.node_degrees.assign(n, 0);
  s.incident_edges.assign(n, 0);
  std::vector<std::vector<std::size_t>> edges_of(n);
  for (std::size_t e = 0; e < m; ++e) {
    auto tuple = graph.edge(e);
    for (std::size_t u : tuple) ++s.node_degrees[u];
    std::vector<std::size_t> distinct(tuple.begin(), tuple.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (std::size_t u : distinct) {
      ++s.incident_edges[u];
      edges_of[u].push_back(e);
    }
  }
  s.edge_neighborhoods.assign(m, 0);
  std::vector<std::size_t> mark(m, m);
  for (std::size_t e = 0; e < m; ++e) {
    std::size_t count = 0;
    for (std::size_t u : graph.edge(e))
      for (std::size_t f : edges_of[u])
        if (mark[f] != e) {
          mark[f] = e;
          ++count;
        }
    s.edge_neighborhoods[e] = count;
  }
  s.max_degree = s.node_degrees.empty() ? 0 : *std::max_element(s.node_degrees.begin(), s.node_degrees.end());
  return s;
}

std::size_t neighborhood_after_addition(const Hypergraph& graph, std::span<const std::size_t> tuple) {
  std::size_t count = 1;
  for (std::size_t e = 0; e < graph.n_edges(); ++e) {
    auto other = graph.edge(e);
    bool shares = std::any_of(other.begin(), other.end(), [&](std::size_t u) {
      return std::find(tuple.begin(), tuple.end(), u) != tuple.end();
    });
    if (shares) ++count;
  }
  return count;
}

double degree_tail_probability(std::size_t n, const Density& c, int k, std::size_t m) {
  const std::size_t trials = c.edges_for(n);
  if (m > trials) return 0.0;
  const double p = -std::expm1(static_cast<double>(k) * std::log1p(-1.0 / static_cast<double>(n)));
  if (p >= 1.0) return m == trials ? 1.0 : 0.0;
  const double tr = static_cast<double>(trials);
  const double mm = static_cast<double>(m);
  double log_choose = std::lgamma(tr + 1.0) - std::lgamma(mm + 1.0) - std::lgamma(tr - mm + 1.0);
  double log_p = mm * std::log(p) + (tr - mm) * std::log1p(-p);
  if (mm == 0.0) log_p = tr * std::log1p(-p);
  return std::exp(log_choose + log_p);
}

}  // namespace hypergibbs
