#pragma once

#include <cstddef>
#include <vector>

namespace nodectrl {

/// Transportation problem on a dense bipartite graph with real-valued
/// supplies/demands, solved by successive shortest augmenting paths with
/// node potentials (Dijkstra on reduced costs). Supplies and demands must
/// balance. Optimality is certified afterwards through complementary
/// slackness on the reduced costs.
class TransportSolver {
 public:
  TransportSolver(std::vector<double> supply, std::vector<double> demand,
                  std::vector<std::vector<double>> cost);

  /// Optimal total cost; fills the flow matrix.
  double solve();

  const std::vector<std::vector<double>>& flow() const { return flow_; }
  /// max over arcs of the complementary-slackness violation; < 1e-9 after a
  /// successful solve.
  double slackness_residual() const { return residual_; }

 private:
  std::vector<double> supply_;
  std::vector<double> demand_;
  std::vector<std::vector<double>> cost_;
  std::vector<std::vector<double>> flow_;
  double residual_ = 0.0;
};

}  // namespace nodectrl
