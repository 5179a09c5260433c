/*
 * Copyright 2026 The survbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "survbench/dataio.h"
#include "survbench/error.h"
#include "survbench/plots.h"
#include "survbench/runner.h"

namespace fs = std::filesystem;

namespace {

void log_line(const std::string& msg) { std::cerr << "[survbench] " << msg << "\n"; }

int run_simulate(const std::string& plan_path, const std::string& out, int workers, bool smoke,
                 bool no_timing, const std::string& data_dir) {
  const fs::path data = data_dir.empty() ? survbench::default_data_dir() : fs::path(data_dir);
  survbench::ExperimentPlan plan =
      plan_path.empty() ? survbench::default_plan(data) : survbench::load_plan(plan_path, data);
  if (!data_dir.empty()) plan.data_dir = data;
  if (auto seed = survbench::seed_from_environment()) survbench::set_plan_seed(plan, *seed);
  if (smoke) survbench::apply_smoke_profile(plan);
  if (workers > 0) plan.workers = workers;
  plan.record_timing = !no_timing;
  const auto start = std::chrono::steady_clock::now();
  const survbench::RunSummary s = survbench::run_scenarios(plan, out, log_line);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "tasks " << s.tasks_total << " (run " << s.tasks_run << ", skipped " << s.tasks_skipped << "), rows "
            << s.rows << ", dropped " << s.dropped_rows << ", " << secs << " s\n";
  std::cout << "results: " << (fs::path(out) / "results.csv").string() << "\n";
  return 0;
}

struct BootstrapArgs {
  std::string data;
  std::string schema;
  std::string out;
  std::string name;
  int B = 1000;
  double alpha = 0.05;
  std::vector<std::string> methods;
  std::vector<std::string> metrics{"c_index", "ibs"};
  int threads = 1;
  int n_trees = 500;
  bool tune = false;
  bool smoke = false;
  std::string selection = "aic";
  std::optional<std::uint64_t> seed;
};

int run_bootstrap_cmd(const BootstrapArgs& a) {
  const survbench::Schema schema = survbench::load_schema(a.schema);
  const survbench::SurvivalDataset raw = survbench::load_csv(a.data, schema);
  survbench::RealDataOptions opt;
  opt.B = a.smoke ? std::min(a.B, 50) : a.B;
  opt.alpha = a.alpha;
  opt.seed = a.seed.value_or(1);
  if (auto env = survbench::seed_from_environment()) opt.seed = *env;
  opt.methods = a.methods.empty() ? survbench::all_methods() : a.methods;
  opt.metrics.clear();
  for (const auto& m : a.metrics) opt.metrics.push_back(survbench::parse_metric(m));
  opt.n_threads = a.threads;
  opt.forest.n_trees = a.n_trees;
  opt.tune = a.tune;
  if (a.selection == "aic") {
    opt.cox_selection = survbench::Criterion::kAic;
  } else if (a.selection == "bic") {
    opt.cox_selection = survbench::Criterion::kBic;
  } else {
    opt.cox_selection.reset();
  }
  const std::string name = a.name.empty() ? fs::path(a.data).stem().string() : a.name;
  const auto rows = survbench::run_real_data_bootstrap(raw, schema, name, opt, log_line);
  fs::create_directories(a.out);
  const fs::path table = fs::path(a.out) / ("bootstrap_" + name + ".csv");
  survbench::write_bootstrap_table(table, rows);
  std::cout << "method,metric,theta,ci_low,ci_high,dropped\n";
  for (const auto& r : rows) {
    std::cout << r.method << "," << survbench::to_string(r.result.metric) << "," << r.result.theta << ","
              << r.result.ci_low << "," << r.result.ci_high << "," << r.result.dropped << "\n";
  }
  std::cout << "table: " << table.string() << "\n";
  return 0;
}

int run_plots(const std::string& results, const std::string& out, bool svg) {
  const fs::path dir(results);
  const fs::path csv = fs::is_directory(dir) ? dir / "results.csv" : dir;
  if (!fs::exists(csv)) throw survbench::InvalidInput("no results file at " + csv.string());
  const auto rows = survbench::read_results(csv);
  if (rows.empty()) throw survbench::InvalidInput("results file " + csv.string() + " has no rows");
  const auto curves = survbench::read_curves(csv.parent_path() / "calibration_curves.csv");
  survbench::PlotOptions opt;
  opt.svg = svg;
  for (const auto& p : survbench::emit_plot_data(rows, curves, out, opt)) std::cout << p.string() << "\n";
  return 0;
}

int run_describe(const std::string& data, const std::string& schema_path) {
  const survbench::Schema schema = survbench::load_schema(schema_path);
  const survbench::SurvivalDataset ds = survbench::load_csv(data, schema);
  const survbench::SummaryTable t = survbench::summarize(ds);
  std::cout << "variable,median,mean,sd,min,max,missing\n";
  auto print = [](const survbench::ColumnSummary& c) {
    std::cout << c.name << "," << c.median << "," << c.mean << "," << c.sd << "," << c.min << "," << c.max << ","
              << c.missing << "\n";
  };
  print(t.time);
  print(t.status);
  for (const auto& c : t.columns) print(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation benchmark of Cox regression and random survival forests"};
  app.require_subcommand(1);

  std::string plan_path, sim_out, data_dir;
  int workers = 0;
  bool smoke = false, no_timing = false;
  auto* sim = app.add_subcommand("simulate", "Run a simulation plan");
  sim->add_option("--plan", plan_path, "Plan JSON (default: the full scenario grid)")->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_flag("--smoke", smoke, "Cap every scenario at 20 replicates");
  sim->add_flag("--no-timing", no_timing, "Write zero timings for byte-stable output");
  sim->add_option("--data-dir", data_dir, "Directory with the reference datasets");

  BootstrapArgs ba;
  std::uint64_t seed = 0;
  auto* boot = app.add_subcommand("bootstrap", "Run the .632+ bootstrap on a real dataset");
  boot->add_option("--data", ba.data, "CSV file")->required()->check(CLI::ExistingFile);
  boot->add_option("--schema", ba.schema, "Schema JSON")->required()->check(CLI::ExistingFile);
  boot->add_option("--B", ba.B, "Bootstrap replicates")->check(CLI::Range(2, 1000000));
  boot->add_option("--out", ba.out, "Output directory")->required();
  boot->add_option("--name", ba.name, "Dataset label (default: file stem)");
  boot->add_option("--alpha", ba.alpha, "Interval level")->check(CLI::Range(0.0, 1.0));
  boot->add_option("--methods", ba.methods, "cox and/or rsf:<rule>");
  boot->add_option("--metrics", ba.metrics, "c_index and/or ibs");
  boot->add_option("--threads", ba.threads, "Worker threads")->check(CLI::PositiveNumber);
  boot->add_option("--n-trees", ba.n_trees, "Trees per forest")->check(CLI::PositiveNumber);
  boot->add_option("--selection", ba.selection, "Cox variable selection")->check(CLI::IsMember({"aic", "bic", "none"}));
  auto* seed_opt = boot->add_option("--seed", seed, "Master seed");
  boot->add_flag("--tune", ba.tune, "Grid-search forest hyperparameters once on the full data");
  boot->add_flag("--smoke", ba.smoke, "Cap B at 50");

  std::string results, plots_out;
  bool svg = false;
  auto* plots = app.add_subcommand("plots", "Summarize a results directory into plot data");
  plots->add_option("--results", results, "Results directory or results.csv")->required();
  plots->add_option("--out", plots_out, "Output directory")->required();
  plots->add_flag("--svg", svg, "Also write SVG boxplots");

  std::string desc_data, desc_schema;
  auto* describe = app.add_subcommand("describe", "Summary statistics of a dataset");
  describe->add_option("--data", desc_data, "CSV file")->required()->check(CLI::ExistingFile);
  describe->add_option("--schema", desc_schema, "Schema JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return run_simulate(plan_path, sim_out, workers, smoke, no_timing, data_dir);
    if (*boot) {
      if (*seed_opt) ba.seed = seed;
      return run_bootstrap_cmd(ba);
    }
    if (*plots) return run_plots(results, plots_out, svg);
    if (*describe) return run_describe(desc_data, desc_schema);
  } catch (const survbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
