// pc3d: train, evaluate, diagnose, report and sweep variable-roster MARL experiments.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pc3d/harness/config.hpp"
#include "pc3d/harness/report.hpp"
#include "pc3d/harness/sweep.hpp"
#include "pc3d/nn/common.hpp"

namespace fs = std::filesystem;
using pc3d::harness::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct ConfigArgs {
  std::string config_path;
  std::string preset = "smoke";
  std::string method;
  std::string ablation;
  std::vector<std::uint64_t> seeds;
  long episodes = -1;

  void attach(CLI::App* cmd, bool with_method) {
    cmd->add_option("-c,--config", config_path, "JSON run config (may use \"inherits\")");
    cmd->add_option("-p,--preset", preset, "built-in preset when no config file is given")->capture_default_str();
    if (with_method) {
      cmd->add_option("-m,--method", method, "ippo | mappo | pic | pc3d | hyper-pc3d");
      cmd->add_option("-a,--ablation", ablation, "none | gate_off | gate_on | no_distill");
    }
    cmd->add_option("-s,--seeds", seeds, "seed list (overrides the config)");
    cmd->add_option("-e,--episodes", episodes, "total training episodes (overrides the config)");
  }

  json document() const {
    json doc;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw pc3d::ConfigError("cannot open config '" + config_path + "'");
      try {
        doc = json::parse(in, nullptr, true, true);
      } catch (const json::parse_error& e) {
        throw pc3d::ConfigError(config_path + ": " + e.what());
      }
    } else {
      doc = {{"inherits", preset}};
    }
    if (!method.empty()) doc["method"] = method;
    if (!ablation.empty()) doc["ablation"] = ablation;
    if (!seeds.empty()) doc["seeds"] = seeds;
    if (episodes > 0) doc["total_episodes"] = episodes;
    return pc3d::harness::resolve_inheritance(doc);
  }
};

// Seed directories (those holding a final checkpoint) at or below root.
std::vector<fs::path> find_seed_dirs(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::exists(root / "checkpoints" / "final.ckpt")) out.push_back(root);
  if (fs::is_directory(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() == "final.ckpt") {
        auto dir = e.path().parent_path().parent_path();
        if (dir != root) out.push_back(dir);
      }
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw pc3d::ConfigError("no trained runs (checkpoints/final.ckpt) under " + root.string());
  return out;
}

void print_split_summary(const pc3d::harness::EvalReport& report, const std::string& label) {
  std::cout << label;
  for (const auto& [name, s] : report.splits) {
    std::cout << "  " << name << " " << s.mean;
    if (s.std) std::cout << " +- " << *s.std;
  }
  std::cout << "\n";
  for (const auto& w : report.warnings) std::cerr << "warning: " << label << ": " << w << "\n";
}

void log_line(const std::string& line) { std::cerr << line << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pc3d: variable-roster cooperative MARL training harness"};
  app.require_subcommand(1);
  std::string out_root;
  app.add_option("-o,--out", out_root, "output root (default $PC3D_OUTPUT_ROOT or ./runs)");
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress lines");

  ConfigArgs train_args;
  bool no_resume = false, train_eval = false;
  auto* train = app.add_subcommand("train", "curriculum training, one run directory per seed");
  train_args.attach(train, true);
  train->add_flag("--no-resume", no_resume, "start over even if a checkpoint exists");
  train->add_flag("--evaluate", train_eval, "evaluate and diagnose after training");

  std::string eval_dir;
  std::optional<int> eval_rollouts;
  bool bypass = false;
  auto* eval = app.add_subcommand("eval", "greedy split evaluation of final checkpoints");
  eval->add_option("run", eval_dir, "seed, cell or sweep directory")->required();
  eval->add_option("-r,--rollouts", eval_rollouts, "rollouts per roster count");
  eval->add_flag("--bypass-conditioning", bypass, "policy head reads h directly (modulation path removed)");

  std::string diag_dir;
  std::vector<int> diag_counts;
  std::optional<int> diag_rollouts;
  auto* diagnose = app.add_subcommand("diagnose", "teacher-student context alignment and gate statistics");
  diagnose->add_option("run", diag_dir, "seed, cell or sweep directory")->required();
  diagnose->add_option("--counts", diag_counts, "roster counts (default: every split count)");
  diagnose->add_option("-r,--rollouts", diag_rollouts, "rollouts per count");

  std::vector<std::string> report_roots;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "tables, curves and heatmap data from run directories");
  report->add_option("runs", report_roots, "run roots")->required();
  report->add_option("--report-dir", report_out, "destination directory")->capture_default_str();

  ConfigArgs sweep_args;
  std::vector<std::string> sweep_methods = {"ippo", "mappo", "pic", "pc3d"};
  std::vector<std::string> sweep_ablations = {"gate_off", "gate_on", "no_distill"};
  bool sweep_no_resume = false;
  auto* sweep = app.add_subcommand("sweep", "methods x ablations x seeds: train, evaluate, diagnose, report");
  sweep_args.attach(sweep, false);
  sweep->add_option("--methods", sweep_methods, "methods")->capture_default_str();
  sweep->add_option("--ablations", sweep_ablations, "pc3d ablations")->capture_default_str();
  sweep->add_flag("--no-resume", sweep_no_resume, "start every run over");

  ConfigArgs show_args;
  auto* show = app.add_subcommand("config", "print the fully resolved config");
  show_args.attach(show, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  const fs::path root = out_root.empty() ? pc3d::harness::output_root() : fs::path(out_root);
  std::function<void(const std::string&)> log;
  if (!quiet) log = log_line;

  try {
    pc3d::nn::configure_torch();
    if (*show) {
      std::cout << pc3d::harness::to_json(pc3d::harness::config_from_json(show_args.document())).dump(2) << "\n";
    } else if (*train) {
      auto config = pc3d::harness::config_from_json(train_args.document());
      pc3d::harness::PipelineOptions options;
      options.resume = !no_resume;
      options.evaluate = train_eval;
      options.diagnose = train_eval;
      options.log = log;
      for (const auto& dir : pc3d::harness::run_cell(config, root, options)) std::cout << dir.string() << "\n";
    } else if (*eval) {
      pc3d::harness::EvalOptions options;
      options.bypass_conditioning = bypass;
      std::set<fs::path> cells;
      for (const auto& dir : find_seed_dirs(eval_dir)) {
        auto e = pc3d::harness::evaluate_run(dir, eval_rollouts, options);
        std::cout << dir.string();
        for (const auto& [name, mean] : e.split_means) std::cout << "  " << name << " " << mean;
        std::cout << "\n";
        cells.insert(dir.parent_path());
      }
      if (!bypass) {
        for (const auto& cell : cells) print_split_summary(pc3d::harness::summarize_cell(cell), cell.string());
      }
    } else if (*diagnose) {
      for (const auto& dir : find_seed_dirs(diag_dir)) {
        auto r = pc3d::harness::diagnose_run(dir, diag_counts, diag_rollouts);
        std::cout << dir.string() << "\n";
        for (const auto& c : r.cells) {
          std::cout << "  n=" << c.count << " cos " << c.cosine_mean << " gate " << c.gate_mean << " +- " << c.gate_std
                    << "\n";
        }
      }
    } else if (*report) {
      std::vector<fs::path> roots(report_roots.begin(), report_roots.end());
      auto r = pc3d::harness::emit_report(roots, report_out);
      std::cout << "report: " << r.runs << " runs -> " << report_out << "\n";
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    } else if (*sweep) {
      const json base = sweep_args.document();
      auto cells = pc3d::harness::plan_sweep(base, sweep_methods, sweep_ablations, sweep_args.seeds);
      pc3d::harness::PipelineOptions options;
      options.resume = !sweep_no_resume;
      options.log = log;
      for (const auto& cell : cells) pc3d::harness::run_cell(cell, root, options);
      const fs::path sweep_root = root / cells.front().name;
      auto r = pc3d::harness::emit_report({sweep_root}, sweep_root / "report");
      std::cout << "sweep: " << cells.size() << " cells, report in " << (sweep_root / "report").string() << "\n";
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    }
  } catch (const pc3d::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
