#include "nodectrl/mincostflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nodectrl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroFlow = 1e-15;  // snap tolerance for real-valued residuals
}  // namespace

TransportSolver::TransportSolver(std::vector<double> supply,
                                 std::vector<double> demand,
                                 std::vector<std::vector<double>> cost)
    : supply_(std::move(supply)), demand_(std::move(demand)), cost_(std::move(cost)) {
  const std::size_t n = supply_.size(), m = demand_.size();
  if (cost_.size() != n) throw std::invalid_argument("transport: cost rows != |supply|");
  for (const auto& row : cost_)
    if (row.size() != m) throw std::invalid_argument("transport: cost cols != |demand|");
  double s = 0.0, d = 0.0;
  for (double v : supply_) {
    if (!(v >= 0.0)) throw std::invalid_argument("transport: negative supply");
    s += v;
  }
  for (double v : demand_) {
    if (!(v >= 0.0)) throw std::invalid_argument("transport: negative demand");
    d += v;
  }
  if (std::abs(s - d) > 1e-9)
    throw std::invalid_argument("transport: supply and demand must balance");
  // absorb the rounding gap so the problem balances exactly
  if (!demand_.empty() && s != d) {
    auto it = std::max_element(demand_.begin(), demand_.end());
    *it += s - d;
  }
  flow_.assign(n, std::vector<double>(m, 0.0));
}

double TransportSolver::solve() {
  const std::size_t n = supply_.size(), m = demand_.size();
  std::vector<double> rem_s = supply_, rem_d = demand_;
  // node ids: 0 = source, 1..n = supply atoms, n+1..n+m = demand atoms, last = sink
  const std::size_t V = n + m + 2, S = 0, T = n + m + 1;
  std::vector<double> pot(V, 0.0), dist(V);
  std::vector<int> prev(V);  // predecessor node (dense bipartite: arc implied)
  std::vector<char> done(V);

  double remaining = 0.0;
  for (double v : rem_s) remaining += v;

  std::size_t guard = 12 * (n + m) + 64;
  while (remaining > kZeroFlow) {
    if (guard-- == 0) throw std::runtime_error("transport: augmentation limit exceeded");
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(done.begin(), done.end(), 0);
    std::fill(prev.begin(), prev.end(), -1);
    dist[S] = 0.0;

    // dense Dijkstra: the arc set is Theta(nm), so a linear min scan is fine
    for (;;) {
      std::size_t u = V;
      double best = kInf;
      for (std::size_t v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u == V) break;
      done[u] = 1;
      if (u == T) break;

      if (u == S) {
        for (std::size_t i = 0; i < n; ++i)
          if (rem_s[i] > kZeroFlow) {
            const double nd = dist[S] + (0.0 + pot[S] - pot[1 + i]);
            if (nd < dist[1 + i]) {
              dist[1 + i] = nd;
              prev[1 + i] = static_cast<int>(S);
            }
          }
      } else if (u >= 1 && u <= n) {
        const std::size_t i = u - 1;
        for (std::size_t j = 0; j < m; ++j) {
          const double nd = dist[u] + (cost_[i][j] + pot[u] - pot[n + 1 + j]);
          if (nd < dist[n + 1 + j]) {
            dist[n + 1 + j] = nd;
            prev[n + 1 + j] = static_cast<int>(u);
          }
        }
      } else {
        const std::size_t j = u - n - 1;
        if (rem_d[j] > kZeroFlow) {
          const double nd = dist[u] + (0.0 + pot[u] - pot[T]);
          if (nd < dist[T]) {
            dist[T] = nd;
            prev[T] = static_cast<int>(u);
          }
        }
        for (std::size_t i = 0; i < n; ++i)
          if (flow_[i][j] > kZeroFlow) {
            const double nd = dist[u] + (-cost_[i][j] + pot[u] - pot[1 + i]);
            if (nd < dist[1 + i]) {
              dist[1 + i] = nd;
              prev[1 + i] = static_cast<int>(u);
            }
          }
      }
    }

    if (!std::isfinite(dist[T]))
      throw std::runtime_error("transport: no augmenting path (unbalanced problem)");
    for (std::size_t v = 0; v < V; ++v)
      if (std::isfinite(dist[v])) pot[v] += std::min(dist[v], dist[T]);

    // bottleneck along the path
    double delta = kInf;
    for (int v = static_cast<int>(T); prev[v] != -1; v = prev[v]) {
      const int u = prev[v];
      if (u == static_cast<int>(S))
        delta = std::min(delta, rem_s[v - 1]);
      else if (static_cast<std::size_t>(v) == T)
        delta = std::min(delta, rem_d[u - n - 1]);
      else if (static_cast<std::size_t>(v) >= n + 1)  // forward i -> j
        continue;
      else  // reverse j -> i
        delta = std::min(delta, flow_[v - 1][u - n - 1]);
    }
    for (int v = static_cast<int>(T); prev[v] != -1; v = prev[v]) {
      const int u = prev[v];
      if (u == static_cast<int>(S)) {
        rem_s[v - 1] -= delta;
      } else if (static_cast<std::size_t>(v) == T) {
        rem_d[u - n - 1] -= delta;
      } else if (static_cast<std::size_t>(v) >= n + 1) {
        flow_[u - 1][v - n - 1] += delta;
      } else {
        flow_[v - 1][u - n - 1] -= delta;
      }
    }
    remaining -= delta;
  }

  double total = 0.0;
  residual_ = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      total += flow_[i][j] * cost_[i][j];
      const double reduced = cost_[i][j] + pot[1 + i] - pot[n + 1 + j];
      residual_ = std::max(residual_, -reduced);  // dual feasibility
      if (flow_[i][j] > kZeroFlow)
        residual_ = std::max(residual_, std::abs(reduced));  // slackness
    }
  return total;
}

}  // namespace nodectrl
