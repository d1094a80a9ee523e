#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace adgnn::harness {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = false;
};

/// Checks every differentiable primitive and layer (BiLSTM, dynamic-graph
/// similarity, SAGE mean layer, GGNN layer, MLP, cross network, all losses)
/// against centered finite differences on small random instances, once per
/// seed. Pass threshold: max relative error < 1e-4.
std::vector<GradCheckResult> run_gradcheck_battery(std::size_t seeds);

/// Prints one line per check; returns true when everything passed.
bool print_gradcheck_battery(std::ostream& os, std::size_t seeds);

}  // namespace adgnn::harness
