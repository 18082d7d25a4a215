#include "poisnet/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include <Eigen/Dense>

#include "poisnet/parallel.hpp"

namespace poisnet {

std::vector<std::vector<std::size_t>> weakly_connected_components(const Adjacency& adj) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [i, j] : adj.edges()) {
    const auto a = find(i), b = find(j);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

std::vector<std::size_t> out_degree(const Adjacency& adj) {
  const std::size_t n = adj.size();
  std::vector<std::size_t> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += adj(i, j) ? 1 : 0;
  return deg;
}

namespace {

std::vector<std::vector<std::size_t>> successors(const Adjacency& adj) {
  const std::size_t n = adj.size();
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j)) out[i].push_back(j);
  return out;
}

// Dependencies of source s on every node (Brandes accumulation).
std::vector<double> source_dependency(const std::vector<std::vector<std::size_t>>& succ,
                                      std::size_t s) {
  const std::size_t n = succ.size();
  std::vector<double> sigma(n, 0.0), delta(n, 0.0);
  std::vector<long> dist(n, -1);
  std::vector<std::vector<std::size_t>> pred(n);
  std::vector<std::size_t> order;
  std::queue<std::size_t> q;
  sigma[s] = 1.0;
  dist[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    order.push_back(v);
    for (auto w : succ[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
      if (dist[w] == dist[v] + 1) {
        sigma[w] += sigma[v];
        pred[w].push_back(v);
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto w = *it;
    for (auto v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
  }
  delta[s] = 0.0;
  return delta;
}

}  // namespace

std::vector<double> betweenness(const Adjacency& adj, std::size_t workers) {
  const std::size_t n = adj.size();
  const auto succ = successors(adj);
  std::vector<std::vector<double>> parts(n);
  parallel_for(n, workers, [&](std::size_t s) { parts[s] = source_dependency(succ, s); });
  std::vector<double> out(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t v = 0; v < n; ++v) out[v] += parts[s][v];
  return out;
}

namespace {

std::vector<std::size_t> largest_nontrivial_component(const Adjacency& adj) {
  for (auto& c : weakly_connected_components(adj))
    if (c.size() >= 2) return c;
  throw std::invalid_argument("eigenvector centrality: graph has no edges");
}

// Kahn order of the nodes in `inside`; false if they contain a cycle.
bool topological_order(const std::vector<std::vector<std::size_t>>& succ,
                       const std::vector<bool>& inside, std::vector<std::size_t>& order) {
  const std::size_t n = succ.size();
  std::vector<std::size_t> indeg(n, 0);
  std::size_t members = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!inside[i]) continue;
    ++members;
    for (auto j : succ[i]) indeg[j] += 1;
  }
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < n; ++i)
    if (inside[i] && indeg[i] == 0) q.push(i);
  order.clear();
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    order.push_back(v);
    for (auto w : succ[v])
      if (--indeg[w] == 0) q.push(w);
  }
  return order.size() == members;
}

// Iterative Tarjan over `nodes`; components come out sinks first.
std::vector<std::vector<std::size_t>> strong_components(
    const std::vector<std::vector<std::size_t>>& succ, const std::vector<std::size_t>& nodes) {
  const std::size_t n = succ.size();
  std::vector<long> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  long counter = 0;
  for (auto root : nodes) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < succ[v].size()) {
        const auto w = succ[v][next++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const auto done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != done);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  }
  return out;
}

struct PerronBlock {
  double value = 0.0;
  std::vector<double> vector;  // aligned with the component's node list
  std::size_t iterations = 0;
};

// Power iteration on A_CC + I for one strong component. Irreducible, so the
// shifted spectrum has a simple dominant eigenvalue.
PerronBlock perron_block(const std::vector<std::vector<std::size_t>>& succ,
                         const std::vector<std::size_t>& comp,
                         const std::vector<std::size_t>& scc_of, std::size_t c) {
  const std::size_t m = comp.size();
  std::vector<std::size_t> local(succ.size(), 0);
  for (std::size_t k = 0; k < m; ++k) local[comp[k]] = k;
  std::vector<std::vector<std::size_t>> inner(m);
  for (std::size_t k = 0; k < m; ++k)
    for (auto j : succ[comp[k]])
      if (scc_of[j] == c) inner[k].push_back(local[j]);
  std::vector<double> x(m, 1.0), next(m, 0.0);
  for (std::size_t it = 1; it <= kEigenMaxIterations; ++it) {
    double top = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      double acc = x[k];
      for (auto j : inner[k]) acc += x[j];
      next[k] = acc;
      top = std::max(top, acc);
    }
    double change = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      next[k] /= top;
      change = std::max(change, std::abs(next[k] - x[k]));
    }
    std::swap(x, next);
    if (change < kEigenTolerance) {
      // Rayleigh-style estimate from the converged vector is tighter than top - 1.
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        double acc = 0.0;
        for (auto j : inner[k]) acc += x[j];
        num += acc * x[k];
        den += x[k] * x[k];
      }
      return {num / den, x, it};
    }
  }
  throw std::runtime_error("eigenvector centrality did not converge within " +
                           std::to_string(kEigenMaxIterations) + " iterations");
}

}  // namespace

EigenvectorResult eigenvector_centrality(const Adjacency& adj) {
  const std::size_t n = adj.size();
  EigenvectorResult res;
  res.component = largest_nontrivial_component(adj);
  std::vector<bool> inside(n, false);
  for (auto i : res.component) inside[i] = true;
  const auto succ = successors(adj);
  res.scores.assign(n, 0.0);

  std::vector<std::size_t> order;
  if (topological_order(succ, inside, order)) {
    std::vector<std::size_t> height(n, 0);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      for (auto w : succ[*it]) height[*it] = std::max(height[*it], height[w] + 1);
    std::size_t longest = 0;
    for (auto i : res.component) longest = std::max(longest, height[i]);
    std::vector<double> x(n, 0.0), next(n, 0.0);
    for (auto i : res.component) x[i] = 1.0;
    for (std::size_t k = 0; k < longest; ++k) {
      for (auto i : res.component) {
        double acc = 0.0;
        for (auto j : succ[i]) acc += x[j];
        next[i] = acc;
      }
      // Rescale to keep counts bounded; only the direction matters.
      const double m = *std::max_element(next.begin(), next.end());
      for (auto i : res.component) x[i] = next[i] / m;
    }
    res.scores = x;
    res.eigenvalue = 0.0;
    res.iterations = 0;
    return res;
  }

  // Strong components in reverse topological order (sinks first).
  const auto sccs = strong_components(succ, res.component);
  std::vector<std::size_t> scc_of(n, 0);
  for (std::size_t c = 0; c < sccs.size(); ++c)
    for (auto i : sccs[c]) scc_of[i] = c;

  std::vector<PerronBlock> blocks(sccs.size());
  double rho = 0.0;
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    if (sccs[c].size() < 2) continue;
    blocks[c] = perron_block(succ, sccs[c], scc_of, c);
    rho = std::max(rho, blocks[c].value);
    res.iterations = std::max(res.iterations, blocks[c].iterations);
  }
  auto dominant = [&](std::size_t c) {
    return sccs[c].size() >= 2 && blocks[c].value >= rho * (1.0 - 1e-9);
  };

  // A dominant class downstream of another dominant class sits under a Jordan
  // block and gets no weight; the remaining dominant classes seed the vector.
  std::vector<bool> below_dominant(sccs.size(), false);
  for (std::size_t c = sccs.size(); c-- > 0;) {
    if (!(below_dominant[c] || dominant(c))) continue;
    for (auto i : sccs[c])
      for (auto j : succ[i])
        if (scc_of[j] != c) below_dominant[scc_of[j]] = true;
  }

  std::vector<double> x(n, 0.0);
  std::vector<bool> seeded(sccs.size(), false);
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    if (!dominant(c) || below_dominant[c]) continue;
    seeded[c] = true;
    for (std::size_t k = 0; k < sccs[c].size(); ++k) x[sccs[c][k]] = blocks[c].vector[k];
  }
  // Nodes upstream of a seed: (rho I - A_UU) x_U = A_U,rest x_rest.
  std::vector<bool> up(sccs.size(), false);
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    if (seeded[c]) continue;
    for (auto i : sccs[c])
      for (auto j : succ[i])
        if (seeded[scc_of[j]] || up[scc_of[j]]) up[c] = true;
  }
  std::vector<std::size_t> upstream;
  for (auto i : res.component)
    if (up[scc_of[i]]) upstream.push_back(i);
  if (!upstream.empty()) {
    std::vector<long> slot(n, -1);
    for (std::size_t k = 0; k < upstream.size(); ++k) slot[upstream[k]] = static_cast<long>(k);
    const auto m = static_cast<Eigen::Index>(upstream.size());
    Eigen::MatrixXd lhs = rho * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k)
      for (auto j : succ[upstream[k]]) {
        if (slot[j] >= 0)
          lhs(k, slot[j]) -= 1.0;
        else
          rhs(k) += x[j];
      }
    const Eigen::VectorXd sol = lhs.partialPivLu().solve(rhs);
    for (Eigen::Index k = 0; k < m; ++k) x[upstream[k]] = std::max(sol(k), 0.0);
  }
  const double top = *std::max_element(x.begin(), x.end());
  for (auto& v : x) v /= top;
  res.scores = std::move(x);
  res.eigenvalue = rho;
  return res;
}

double eigen_residual(const Adjacency& adj, const EigenvectorResult& result) {
  const std::size_t n = adj.size();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (adj(i, j)) acc += result.scores[j];
    worst = std::max(worst, std::abs(acc - result.eigenvalue * result.scores[i]));
  }
  return worst;
}

EdgeRates tpr_fpr(const Adjacency& truth, const Adjacency& estimate) {
  if (truth.size() != estimate.size())
    throw std::invalid_argument("tpr_fpr: adjacency sizes differ");
  const bool pairs = !truth.directed() || !estimate.directed();
  const Adjacency t = pairs ? truth.as_undirected() : truth;
  const Adjacency e = pairs ? estimate.as_undirected() : estimate;
  const std::size_t true_edges = t.edge_count();
  if (true_edges == 0) throw std::domain_error("tpr_fpr: true network has no edges");
  std::size_t hits = 0, spurious = 0;
  for (const auto& [i, j] : e.edges()) (t(i, j) ? hits : spurious) += 1;
  return {static_cast<double>(hits) / static_cast<double>(true_edges),
          static_cast<double>(spurious) / static_cast<double>(true_edges)};
}

template <class T>
std::vector<std::size_t> ranking(const std::vector<T>& scores) {
  std::vector<std::size_t> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return ids;
}

template std::vector<std::size_t> ranking(const std::vector<double>&);
template std::vector<std::size_t> ranking(const std::vector<std::size_t>&);

CentralityReport centrality_report(const Adjacency& adj, std::size_t workers) {
  CentralityReport r;
  r.out_degree = out_degree(adj);
  r.betweenness = betweenness(adj, workers);
  try {
    r.eigenvector = eigenvector_centrality(adj);
  } catch (const std::exception& e) {
    r.eigenvector_error = e.what();
  }
  r.rank_out_degree = ranking(r.out_degree);
  r.rank_betweenness = ranking(r.betweenness);
  if (r.eigenvector) r.rank_eigenvector = ranking(r.eigenvector->scores);
  return r;
}

}  // namespace poisnet
