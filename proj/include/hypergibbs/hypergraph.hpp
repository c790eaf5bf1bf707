#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypergibbs/rng.hpp"

namespace hypergibbs {

/// Edge density c held as an exact decimal fraction so that floor(c N) has no
/// float rounding surprises.
class Density {
 public:
  Density() = default;
  Density(std::int64_t numerator, std::int64_t denominator);
  /// Parses "1", "0.75", "2.5e-1". Throws std::invalid_argument on malformed input.
  static Density parse(std::string_view text);
  /// Shortest round-trip decimal of x, parsed exactly.
  static Density from_double(double x);

  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }
  /// floor(c N).
  std::size_t edges_for(std::size_t n) const;
  std::string to_string() const;

 private:
  std::int64_t num_ = 1;
  std::int64_t den_ = 1;
};

/// K-uniform directed hypergraph on nodes [0, N); edges are ordered K-tuples and
/// may repeat nodes.
class Hypergraph {
 public:
  Hypergraph() = default;
  Hypergraph(std::size_t n_nodes, int arity);

  std::size_t n_nodes() const { return n_; }
  int arity() const { return k_; }
  std::size_t n_edges() const { return k_ == 0 ? 0 : nodes_.size() / static_cast<std::size_t>(k_); }

  std::span<const std::size_t> edge(std::size_t e) const {
    return {nodes_.data() + e * static_cast<std::size_t>(k_), static_cast<std::size_t>(k_)};
  }
  void add_edge(std::span<const std::size_t> tuple);
  const std::vector<std::size_t>& flat_nodes() const { return nodes_; }

  bool operator==(const Hypergraph&) const = default;

  /// {"n": N, "k": K, "edges": [[u1, ..., uK], ...]}
  std::string to_json() const;
  static Hypergraph from_json(std::string_view text);

 private:
  std::size_t n_ = 0;
  int k_ = 0;
  std::vector<std::size_t> nodes_;
};

/// A point of the interpolation path between G(N, c) and a disjoint union on
/// blocks [0, N1) and [N1, N). t counts block-restricted edges: t = 0 is G(N, c)
/// and t = floor(cN) is the disjoint union.
struct InterpolationPoint {
  std::size_t t = 0;
  std::size_t n1 = 1;
  std::size_t n2 = 1;

  static InterpolationPoint from_global_edges(std::size_t global, std::size_t total_edges, std::size_t n1,
                                              std::size_t n2);
  void validate(std::size_t n_nodes, std::size_t total_edges) const;
};

/// G(N, c): floor(cN) i.i.d. uniform ordered K-tuples.
Hypergraph sample_er(std::size_t n, const Density& c, int k, Seed seed);

/// G(N, c, t). Edge slot j uses substream j of the seed, so graphs at different t
/// sharing a seed differ only in which slots are block-restricted (slots
/// [floor(cN) - t, floor(cN))).
Hypergraph sample_interpolated(std::size_t n, const Density& c, int k, const InterpolationPoint& point,
                               Seed seed);

/// Uniform edges inside [offset, offset + size): used for block graphs.
Hypergraph sample_block(std::size_t n, std::size_t edges, int k, Seed seed);

struct DegreeStats {
  /// Node degree counting multiplicity inside a tuple; sums to K M.
  std::vector<std::size_t> node_degrees;
  /// |N(u, G)|: number of distinct edges containing u.
  std::vector<std::size_t> incident_edges;
  /// |N(e, G)|: edges sharing at least one node with e, e included.
  std::vector<std::size_t> edge_neighborhoods;
  std::size_t max_degree = 0;
};

DegreeStats degree_stats(const Hypergraph& graph);

/// Edges of `graph` sharing a node with `tuple`, plus one for the tuple itself.
std::size_t neighborhood_after_addition(const Hypergraph& graph, std::span<const std::size_t> tuple);

/// P(|N(u, G)| = m) for a fixed node of G(N, c): Binomial(floor(cN), 1 - (1 - 1/N)^K).
double degree_tail_probability(std::size_t n, const Density& c, int k, std::size_t m);

}  // namespace hypergibbs
