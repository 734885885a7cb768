#include "pc3d/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "pc3d/harness/diagnostics.hpp"
#include "pc3d/harness/evaluation.hpp"
#include "pc3d/harness/trainer.hpp"

namespace pc3d::harness {

namespace fs = std::filesystem;

namespace {

struct SeedRun {
  fs::path dir;
  std::uint64_t seed = 0;
  bool complete = false;
  std::optional<SeedEvaluation> eval;
  std::optional<AlignmentReport> alignment;
  std::vector<json> returns;
  std::vector<json> metrics;
};

struct Group {
  RunConfig config;
  std::vector<SeedRun> runs;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  return json::parse(in);
}

std::vector<json> read_lines(const fs::path& path) {
  std::vector<json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

std::string fmt(double v, int precision = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

const char* kSplitNames[] = {"train", "validation", "test"};

std::string ablation_row_label(const std::string& method, const std::string& ablation) {
  if (ablation == "gate_off") return "Always Off Gate";
  if (ablation == "gate_on") return "Always On Gate";
  if (ablation == "no_distill") return "A-MAPPO";
  if (method == "pc3d") return "PC3D";
  return method;
}

// Rows with split statistics across seeds; flags the best mean per split column.
json build_rows(const std::vector<const Group*>& groups, std::vector<std::string>& warnings) {
  json rows = json::array();
  for (const auto* g : groups) {
    std::vector<SeedEvaluation> evals;
    std::set<std::uint64_t> found;
    for (const auto& r : g->runs) {
      if (r.eval) {
        evals.push_back(*r.eval);
        found.insert(r.seed);
      }
    }
    const std::string label = g->config.name + "/" + cell_label(g->config);
    std::vector<std::string> missing;
    for (auto s : g->config.seeds) {
      if (!found.contains(s)) missing.push_back(std::to_string(s));
    }
    if (!missing.empty()) {
      std::string list;
      for (const auto& m : missing) list += (list.empty() ? "" : ",") + m;
      warnings.push_back(label + ": missing evaluated seeds {" + list + "}");
    }
    json row = {{"label", label},
                {"method", learner::to_string(g->config.method)},
                {"ablation", learner::to_string(g->config.ablation)},
                {"seeds", evals.size()},
                {"splits", json::object()}};
    if (!evals.empty()) {
      auto report = aggregate_seeds(evals, g->config);
      if (evals.size() == 1) warnings.push_back(label + ": single seed, std column left empty");
      for (const auto& [name, s] : report.splits) {
        row["splits"][name] = {{"mean", s.mean}, {"std", s.std ? json(*s.std) : json(nullptr)}, {"best", false}};
      }
    }
    rows.push_back(row);
  }
  for (const char* split : kSplitNames) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& row : rows) {
      if (row["splits"].contains(split)) best = std::max(best, row["splits"][split]["mean"].get<double>());
    }
    for (auto& row : rows) {
      if (row["splits"].contains(split)) row["splits"][split]["best"] = row["splits"][split]["mean"].get<double>() == best;
    }
  }
  return rows;
}

std::string markdown_table(const std::string& title, const json& rows, const std::string& label_key) {
  std::ostringstream md;
  md << "### " << title << "\n\n| Method | Seeds | Train | Validation | Test |\n|---|---|---|---|---|\n";
  for (const auto& row : rows) {
    md << "| " << row[label_key].get<std::string>() << " | " << row["seeds"].get<int>();
    for (const char* split : kSplitNames) {
      md << " | ";
      if (!row["splits"].contains(split)) {
        md << "n/a";
        continue;
      }
      const auto& s = row["splits"][split];
      std::string cell = fmt(s["mean"].get<double>());
      cell += s["std"].is_null() ? " ± (n/a)" : " ± " + fmt(s["std"].get<double>());
      md << (s["best"].get<bool>() ? "**" + cell + "**" : cell);
    }
    md << " |\n";
  }
  md << "\n";
  return md.str();
}

}  // namespace

ReportResult emit_report(const std::vector<fs::path>& roots, const fs::path& out_dir) {
  ReportResult result;
  std::map<std::string, Group> groups;
  for (const auto& root : roots) {
    if (!fs::exists(root)) {
      result.warnings.push_back("run root not found: " + root.string());
      continue;
    }
    std::vector<fs::path> dirs;
    if (fs::exists(root / "run.json")) dirs.push_back(root);
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      if (entry.is_regular_file() && entry.path().filename() == "run.json" && entry.path().parent_path() != root) {
        dirs.push_back(entry.path().parent_path());
      }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      auto config = config_from_json(read_json(dir / "config.json"));
      const auto status = read_json(dir / "run.json");
      SeedRun run;
      run.dir = dir;
      run.seed = status.at("seed").get<std::uint64_t>();
      run.complete = status.at("complete").get<bool>();
      if (!run.complete) result.warnings.push_back(dir.string() + ": training incomplete");
      if (fs::exists(dir / "eval" / "eval.json")) {
        run.eval = seed_evaluation_from_json(read_json(dir / "eval" / "eval.json"));
      } else {
        result.warnings.push_back(dir.string() + ": no evaluation");
      }
      if (fs::exists(dir / "diagnostics" / "alignment.json")) {
        run.alignment = alignment_from_json(read_json(dir / "diagnostics" / "alignment.json"));
      }
      run.returns = read_lines(dir / "train_returns.jsonl");
      run.metrics = read_lines(dir / "metrics.jsonl");
      const std::string key = config.name + "/" + cell_label(config);
      auto& g = groups[key];
      g.config = config;
      g.runs.push_back(std::move(run));
      ++result.runs;
    }
  }

  std::map<std::string, std::vector<const Group*>> by_task;
  for (const auto& [key, g] : groups) by_task[g.config.task].push_back(&g);

  json tasks = json::object();
  std::ostringstream md;
  md << "# Results\n\nEvaluation: greedy decentralized policy, final checkpoints. Split value = mean over counts "
        "of the per-count mean return; ± is the sample standard deviation across seeds. Bold marks the best "
        "mean per column.\n\n";
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "results.csv");
  csv << "task,table,label,method,ablation,seeds,split,mean,std,best\n";
  for (const auto& [task, list] : by_task) {
    std::vector<const Group*> main, ablation;
    for (const auto* g : list) {
      if (g->config.ablation == learner::Ablation::kNone) main.push_back(g);
      if (g->config.method == learner::Method::kPc3d) ablation.push_back(g);
    }
    json main_rows = build_rows(main, result.warnings);
    json ablation_rows = build_rows(ablation, result.warnings);
    for (auto& row : ablation_rows) {
      row["row"] = ablation_row_label(row["method"].get<std::string>(), row["ablation"].get<std::string>());
    }
    for (auto& row : main_rows) row["row"] = row["label"];
    if (!ablation.empty()) {
      std::set<std::string> present;
      for (const auto& row : ablation_rows) present.insert(row["ablation"].get<std::string>());
      for (const char* a : {"none", "gate_off", "gate_on", "no_distill"}) {
        if (!present.contains(a)) result.warnings.push_back(task + ": ablation row '" + a + "' missing");
      }
    }
    tasks[task] = {{"main", main_rows}, {"ablation", ablation_rows}};
    md << "## " << task << (task == "lbf" ? " (normalized return x 100)" : "") << "\n\n";
    md << markdown_table("Main comparison", main_rows, "row");
    if (!ablation_rows.empty()) md << markdown_table("Ablations", ablation_rows, "row");
    for (const auto& [table, rows] : {std::pair{"main", main_rows}, std::pair{"ablation", ablation_rows}}) {
      for (const auto& row : rows) {
        for (const char* split : kSplitNames) {
          if (!row["splits"].contains(split)) continue;
          const auto& s = row["splits"][split];
          csv << task << ',' << table << ',' << row["row"].get<std::string>() << ',' << row["method"].get<std::string>()
              << ',' << row["ablation"].get<std::string>() << ',' << row["seeds"].get<int>() << ',' << split << ','
              << s["mean"].get<double>() << ',' << (s["std"].is_null() ? "" : std::to_string(s["std"].get<double>()))
              << ',' << (s["best"].get<bool>() ? 1 : 0) << '\n';
        }
      }
    }
  }

  // Training curves: per-seed bin means, then mean and normal-approximation 95% CI across seeds.
  std::ofstream curves(out_dir / "curves.csv");
  curves << "group,stage,episode_start,episode_end,mean,ci_low,ci_high,seeds\n";
  std::ofstream metrics(out_dir / "metrics.csv");
  metrics << "group,seed,update,episode,stage,loss,ppo,value,entropy,distill,grad_norm,gate_mean,gate_std\n";
  std::ofstream per_count(out_dir / "per_count.csv");
  per_count << "group,seed,split,count,rollout,return\n";
  std::ofstream alignment(out_dir / "alignment.csv");
  alignment << "group,seed,count,cosine_mean,gate_mean,gate_std,samples\n";
  auto num = [](const json& v) { return v.is_null() ? std::string("") : std::to_string(v.get<double>()); };
  for (const auto& [key, g] : groups) {
    const long total = g.config.total_episodes;
    const long width = std::max(1L, total / 50);
    std::map<std::pair<int, long>, std::vector<double>> bins;  // (stage, bin) -> per-seed bin mean
    for (const auto& r : g.runs) {
      std::map<std::pair<int, long>, std::pair<double, int>> acc;
      for (const auto& rec : r.returns) {
        const long e = rec.at("episode").get<long>();
        auto& a = acc[{rec.at("stage").get<int>(), e / width}];
        a.first += rec.at("return").get<double>();
        ++a.second;
      }
      for (const auto& [k, a] : acc) bins[k].push_back(a.first / a.second);
      for (const auto& m : r.metrics) {
        metrics << key << ',' << r.seed << ',' << m.at("update").get<long>() << ',' << m.at("episode").get<long>() << ','
                << m.at("stage").get<int>() << ',' << num(m["loss"]) << ',' << num(m["ppo"]) << ',' << num(m["value"])
                << ',' << num(m["entropy"]) << ',' << num(m["distill"]) << ',' << num(m["grad_norm"]) << ','
                << num(m["gate_mean"]) << ',' << num(m["gate_std"]) << '\n';
      }
      if (r.eval) {
        for (const auto& c : r.eval->counts) {
          for (std::size_t i = 0; i < c.returns.size(); ++i) {
            per_count << key << ',' << r.seed << ',' << c.split << ',' << c.count << ',' << i << ',' << c.returns[i] << '\n';
          }
        }
      }
      if (r.alignment) {
        for (const auto& c : r.alignment->cells) {
          alignment << key << ',' << r.seed << ',' << c.count << ',' << c.cosine_mean << ',' << c.gate_mean << ','
                    << c.gate_std << ',' << c.samples << '\n';
        }
      }
    }
    for (const auto& [k, values] : bins) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double half = 0.0;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        half = 1.96 * std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
      }
      curves << key << ',' << k.first << ',' << k.second * width << ',' << std::min(total, (k.second + 1) * width) << ','
             << mean << ',' << mean - half << ',' << mean + half << ',' << values.size() << '\n';
    }
  }

  result.tables = {{"policy", "greedy"},
                   {"aggregation", "count mean -> split mean -> seed mean and sample std"},
                   {"ci_method", "normal approximation: mean +- 1.96 sd / sqrt(seeds)"},
                   {"tasks", tasks},
                   {"warnings", result.warnings}};
  std::ofstream(out_dir / "results.json") << result.tables.dump(2) << '\n';
  if (!result.warnings.empty()) {
    md << "## Warnings\n\n";
    for (const auto& w : result.warnings) md << "- " << w << "\n";
  }
  std::ofstream(out_dir / "results.md") << md.str();
  std::ofstream warn(out_dir / "warnings.txt");
  for (const auto& w : result.warnings) warn << w << '\n';
  return result;
}

}  // namespace pc3d::harness
