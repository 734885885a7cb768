#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pc3d/harness/config.hpp"

namespace pc3d::harness {

struct ReportResult {
  json tables;  // contents of results.json
  std::vector<std::string> warnings;
  int runs = 0;  // seed directories found
};

// Scans the given roots for seed run directories and writes into out_dir:
//   results.json / results.md  split means +- std across seeds, best per column flagged,
//                              one main table and one ablation table per task
//   results.csv                the same rows flattened
//   curves.csv                 training returns binned by episode, grouped by curriculum stage,
//                              with normal-approximation 95% intervals across seeds
//   metrics.csv                per-update loss, distillation and gate traces
//   per_count.csv              per-rollout evaluation returns by roster count
//   alignment.csv              cosine / gate heatmap cells
//   warnings.txt
// Missing seeds and missing evaluations are reported as warnings, never filled in.
ReportResult emit_report(const std::vector<std::filesystem::path>& roots, const std::filesystem::path& out_dir);

}  // namespace pc3d::harness
