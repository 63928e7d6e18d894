#include <algorithm>
#include <numeric>
#include <random>

#include "comeback/errors.hpp"
#include "comeback/graph.hpp"

namespace comeback {

namespace {

constexpr double kMinSweepGain = 1e-7;

// Sum of within-community weights and degree totals for the current
// assignment of `g`, as modularity.
double level_quality(const UndirectedGraph& g, const std::vector<int>& comm,
                     const std::vector<double>& degree, double two_m,
                     double resolution) {
  if (two_m <= 0.0) return 0.0;
  std::vector<double> in(g.node_count(), 0.0), tot(g.node_count(), 0.0);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const int c = comm[i];
    tot[c] += degree[i];
    in[c] += 2.0 * g.self_loops[i];
    for (const auto& [j, w] : g.adjacency[i]) {
      if (comm[j] == c) in[c] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < g.node_count(); ++c) {
    if (tot[c] == 0.0 && in[c] == 0.0) continue;
    q += in[c] / two_m - resolution * (tot[c] / two_m) * (tot[c] / two_m);
  }
  return q;
}

// Local-moving phase. Returns true if any node changed community.
bool move_nodes(const UndirectedGraph& g, std::vector<int>& comm,
                const std::vector<double>& degree, double two_m,
                double resolution, std::mt19937_64& rng) {
  const std::size_t n = g.node_count();
  std::vector<double> tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) tot[comm[i]] += degree[i];

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> link(n, -1.0);  // weight from the visited node to c
  std::vector<int> touched;
  bool any_move = false;

  while (true) {
    double sweep_gain = 0.0;
    bool moved = false;
    for (int i : order) {
      const int current = comm[i];
      const double k = degree[i];
      touched.clear();
      link[current] = 0.0;
      touched.push_back(current);
      for (const auto& [j, w] : g.adjacency[i]) {
        const int c = comm[j];
        if (link[c] < 0.0) {
          link[c] = 0.0;
          touched.push_back(c);
        }
        link[c] += w;
      }
      tot[current] -= k;
      auto gain = [&](int c) { return link[c] - resolution * tot[c] * k / two_m; };
      int best = current;
      const double stay = gain(current);
      double best_gain = stay;
      for (int c : touched) {
        const double g_c = gain(c);
        if (g_c > best_gain) {
          best_gain = g_c;
          best = c;
        }
      }
      tot[best] += k;
      if (best != current) {
        comm[i] = best;
        moved = true;
        sweep_gain += 2.0 * (best_gain - stay) / two_m;
      }
      for (int c : touched) link[c] = -1.0;
    }
    any_move = any_move || moved;
    if (!moved || sweep_gain < kMinSweepGain) break;
  }
  return any_move;
}

// Renumbers communities by first appearance in node order.
int compact(std::vector<int>& comm) {
  std::vector<int> remap(comm.size(), -1);
  int next = 0;
  for (auto& c : comm) {
    if (remap[c] < 0) remap[c] = next++;
    c = remap[c];
  }
  return next;
}

UndirectedGraph aggregate(const UndirectedGraph& g, const std::vector<int>& comm,
                          int count) {
  UndirectedGraph out;
  out.adjacency.resize(count);
  out.self_loops.assign(count, 0.0);
  std::vector<double> acc(count, 0.0);
  std::vector<int> touched;
  std::vector<std::vector<int>> members(count);
  for (std::size_t i = 0; i < g.node_count(); ++i) members[comm[i]].push_back(static_cast<int>(i));
  for (int c = 0; c < count; ++c) {
    touched.clear();
    for (int i : members[c]) {
      out.self_loops[c] += g.self_loops[i];
      for (const auto& [j, w] : g.adjacency[i]) {
        const int d = comm[j];
        if (d == c) {
          out.self_loops[c] += w / 2.0;  // seen from both endpoints
          continue;
        }
        if (acc[d] == 0.0) touched.push_back(d);
        acc[d] += w;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (int d : touched) {
      out.adjacency[c].emplace_back(d, acc[d]);
      acc[d] = 0.0;
    }
  }
  return out;
}

}  // namespace

Partition louvain(const UndirectedGraph& graph, double resolution,
                  std::uint64_t seed) {
  if (!(resolution > 0.0)) throw ParameterError("resolution must be > 0");
  if (graph.node_count() == 0) throw ParameterError("louvain on an empty graph");

  Partition result;
  result.resolution = resolution;
  result.seed = seed;
  result.community.resize(graph.node_count());
  std::iota(result.community.begin(), result.community.end(), 0);

  std::mt19937_64 rng(seed);
  UndirectedGraph level = graph;
  const double two_m = 2.0 * graph.total_weight();

  while (true) {
    const std::size_t n = level.node_count();
    std::vector<double> degree(n);
    for (std::size_t i = 0; i < n; ++i) degree[i] = level.degree(static_cast<int>(i));
    std::vector<int> comm(n);
    std::iota(comm.begin(), comm.end(), 0);
    if (two_m <= 0.0 || !move_nodes(level, comm, degree, two_m, resolution, rng)) {
      break;
    }
    const int count = compact(comm);
    result.level_modularity.push_back(
        level_quality(level, comm, degree, two_m, resolution));
    for (auto& c : result.community) c = comm[c];
    if (static_cast<std::size_t>(count) == n) break;
    level = aggregate(level, comm, count);
  }

  result.community_count = compact(result.community);
  result.modularity = modularity(graph, result.community, resolution);
  return result;
}

Partition louvain_partition(const CitationGraph& graph, double resolution,
                            std::uint64_t seed) {
  if (graph.empty()) throw ParameterError("louvain on an empty graph");
  return louvain(symmetrize(graph), resolution, seed);
}

}  // namespace comeback
