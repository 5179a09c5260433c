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

#include "survbench/runner.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "survbench/csv.h"
#include "survbench/error.h"
#include "survbench/rng.h"
#include "survbench/stats.h"

namespace survbench {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

#ifndef SURVBENCH_DEFAULT_DATA_DIR
#define SURVBENCH_DEFAULT_DATA_DIR "data"
#endif

std::string_view to_string(TuningMode mode) {
  switch (mode) {
    case TuningMode::kPerReplicate: return "per_replicate";
    case TuningMode::kPerScenario: return "per_scenario";
    case TuningMode::kNone: return "none";
  }
  return "none";
}

TuningMode parse_tuning_mode(std::string_view text) {
  for (TuningMode m : {TuningMode::kPerReplicate, TuningMode::kPerScenario, TuningMode::kNone}) {
    if (to_string(m) == text) return m;
  }
  throw InvalidInput("unknown tuning mode '" + std::string(text) + "'");
}

std::string MethodId::label() const { return cox ? "cox" : "rsf:" + std::string(to_string(rule)); }

MethodId MethodId::parse(std::string_view text) {
  if (text == "cox") return MethodId{};
  if (text.substr(0, 4) == "rsf:") return MethodId{false, parse_split_rule(text.substr(4))};
  throw InvalidInput("unknown method '" + std::string(text) + "'");
}

std::vector<std::string> all_methods() {
  std::vector<std::string> out{"cox"};
  for (SplitRule r : all_split_rules()) out.push_back(MethodId{false, r}.label());
  return out;
}

void ExperimentPlan::validate() const {
  if (scenarios.empty()) throw InvalidInput("plan has no scenarios");
  if (methods.empty()) throw InvalidInput("plan has no methods");
  if (metrics.empty()) throw InvalidInput("plan has no metrics");
  if (workers < 1) throw InvalidInput("worker count must be at least 1");
  if (calibration_grid < 2) throw InvalidInput("calibration grid needs at least 2 points");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    MethodId::parse(m);
    if (!seen.insert(m).second) throw InvalidInput("duplicate method '" + m + "'");
  }
  std::set<Metric> seen_metrics;
  for (Metric m : metrics) {
    if (!seen_metrics.insert(m).second) throw InvalidInput("duplicate metric");
  }
  std::set<std::string> ids;
  for (const auto& s : scenarios) {
    s.validate();
    if (!ids.insert(ScenarioLabel::of(s).id()).second) {
      throw InvalidInput("duplicate scenario " + ScenarioLabel::of(s).id());
    }
  }
  ForestParams probe = forest;
  probe.mtry = 0;
  probe.validate(1);
}

std::uint64_t scenario_seed(std::uint64_t plan_seed, const ScenarioConfig& scenario) {
  const std::string identity = scenario.mechanism_key() + "#" + std::to_string(scenario.n_train) + "#" +
                               std::to_string(scenario.n_test);
  return derive_seed(plan_seed, fnv1a(identity), "scenario");
}

void set_plan_seed(ExperimentPlan& plan, std::uint64_t seed) {
  plan.seed = seed;
  for (auto& s : plan.scenarios) s.seed = scenario_seed(seed, s);
}

void apply_smoke_profile(ExperimentPlan& plan) {
  for (auto& s : plan.scenarios) s.n_sim = std::min(s.n_sim, 20);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* text = std::getenv("SURVBENCH_SEED");
  if (text == nullptr || *text == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const std::string_view s(text);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidInput("SURVBENCH_SEED must be an unsigned integer, got '" + std::string(s) + "'");
  }
  return value;
}

std::filesystem::path default_data_dir() {
  const char* env = std::getenv("SURVBENCH_DATA_DIR");
  if (env != nullptr && *env != '\0') return env;
  return SURVBENCH_DEFAULT_DATA_DIR;
}

namespace {

std::pair<double, double> parse_gamma(const json& g) {
  if (g.is_number()) return {g.get<double>(), g.get<double>()};
  if (g.is_array() && g.size() == 1) return {g[0].get<double>(), g[0].get<double>()};
  if (g.is_array() && g.size() == 2) return {g[0].get<double>(), g[1].get<double>()};
  throw InvalidInput("gamma must be a number or a [control, treated] pair");
}

ScenarioConfig scenario_from(const json& j, int default_n_sim, int default_n_test) {
  const Reference ref = parse_reference(j.at("reference").get<std::string>());
  const double censoring = j.contains("censoring") ? j["censoring"].get<double>()
                                                   : j.value("censoring_target", 0.3);
  const auto [g0, g1] = parse_gamma(j.contains("gamma") ? j["gamma"] : json(1.0));
  ScenarioConfig s = make_scenario(ref, j.at("n_train").get<int>(), censoring,
                                   j.value("beta_treatment", 0.0), g0, g1, 0);
  if (j.contains("lambda")) s.hazard.lambda = j["lambda"].get<double>();
  if (j.contains("beta")) s.beta = j["beta"].get<std::vector<double>>();
  s.n_sim = j.value("n_sim", default_n_sim);
  s.n_test = j.value("n_test", default_n_test);
  return s;
}

template <typename T>
std::vector<T> list_or(const json& j, const char* name, std::vector<T> fallback) {
  if (!j.contains(name)) return fallback;
  return j[name].get<std::vector<T>>();
}

std::vector<ScenarioConfig> expand_grid(const json& g, int n_sim, int n_test) {
  const auto refs = list_or<std::string>(g, "reference", {"pbc", "prostate"});
  const auto sizes = list_or<int>(g, "n_train", {100, 200, 400});
  const auto cens = list_or<double>(g, "censoring", {0.3, 0.6});
  const auto betas = list_or<double>(g, "beta_treatment", {0.0, 0.8, -0.4});
  std::vector<json> gammas;
  if (g.contains("gamma")) {
    for (const auto& v : g["gamma"]) gammas.push_back(v);
  } else {
    gammas = {json(0.8), json(1.0), json(2.0), json::array({2.0, 5.0})};
  }
  std::vector<ScenarioConfig> out;
  for (const auto& r : refs) {
    for (double c : cens) {
      for (double b : betas) {
        for (const auto& gm : gammas) {
          for (int n : sizes) {
            json j{{"reference", r}, {"n_train", n}, {"censoring", c}, {"beta_treatment", b}, {"gamma", gm}};
            out.push_back(scenario_from(j, n_sim, n_test));
          }
        }
      }
    }
  }
  return out;
}

ForestParams forest_from(const json& j, ForestParams p) {
  p.n_trees = j.value("n_trees", p.n_trees);
  p.mtry = j.value("mtry", p.mtry);
  p.min_leaf_size = j.value("min_leaf_size", p.min_leaf_size);
  p.min_node_events = j.value("min_node_events", p.min_node_events);
  p.maxstat_correction = j.value("maxstat_correction", p.maxstat_correction);
  p.max_cuts = j.value("max_cuts", p.max_cuts);
  return p;
}

std::optional<Criterion> parse_selection(const std::string& text) {
  if (text == "aic") return Criterion::kAic;
  if (text == "bic") return Criterion::kBic;
  if (text == "none") return std::nullopt;
  throw InvalidInput("cox_selection must be aic, bic or none");
}

}  // namespace

ExperimentPlan parse_plan(std::string_view json_text, const std::filesystem::path& default_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("plan is not valid JSON: ") + e.what());
  }
  ExperimentPlan plan;
  try {
    plan.seed = j.value("seed", plan.seed);
    const int n_sim = j.value("n_sim", 500);
    const int n_test = j.value("n_test", 500);
    if (j.contains("scenarios")) {
      for (const auto& s : j["scenarios"]) plan.scenarios.push_back(scenario_from(s, n_sim, n_test));
    }
    if (j.contains("grid")) {
      for (auto& s : expand_grid(j["grid"], n_sim, n_test)) plan.scenarios.push_back(std::move(s));
    }
    plan.methods = j.contains("methods") ? j["methods"].get<std::vector<std::string>>() : all_methods();
    if (j.contains("metrics")) {
      plan.metrics.clear();
      for (const auto& m : j["metrics"]) plan.metrics.push_back(parse_metric(m.get<std::string>()));
    }
    plan.tuning = parse_tuning_mode(j.value("tuning", std::string("per_replicate")));
    if (j.contains("forest")) plan.forest = forest_from(j["forest"], plan.forest);
    if (j.contains("cox_selection")) plan.cox_selection = parse_selection(j["cox_selection"].get<std::string>());
    plan.data_dir = j.contains("data_dir") ? std::filesystem::path(j["data_dir"].get<std::string>()) : default_dir;
    plan.censoring.pilot_size = j.value("pilot_size", plan.censoring.pilot_size);
    plan.calibration_grid = j.value("calibration_grid", plan.calibration_grid);
    plan.workers = j.value("workers", plan.workers);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed plan: ") + e.what());
  }
  set_plan_seed(plan, plan.seed);
  plan.validate();
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path, const std::filesystem::path& default_dir) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open plan " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str(), default_dir);
}

ExperimentPlan default_plan(const std::filesystem::path& data_dir, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.scenarios = expand_grid(json::object(), 500, 500);
  plan.methods = all_methods();
  plan.data_dir = data_dir;
  set_plan_seed(plan, seed);
  return plan;
}

ScenarioLabel ScenarioLabel::of(const ScenarioConfig& s) {
  return ScenarioLabel{std::string(to_string(s.reference)), s.n_train, s.censoring_target, s.beta_treatment,
                       s.gamma_spec()};
}

std::string ScenarioLabel::id() const {
  return reference + "," + std::to_string(n_train) + "," + format_double(censoring) + "," +
         format_double(beta_treatment) + "," + gamma_spec;
}

std::string ResultRow::key() const {
  return scenario.id() + "," + method + "," + std::to_string(replicate) + "," + metric;
}

std::string CurveRecord::key() const { return scenario.id() + "," + method + "," + std::to_string(replicate); }

namespace {

std::string format_ms(double ms) { return format_double(std::round(ms * 1000.0) / 1000.0); }

std::optional<ScenarioLabel> parse_label(const std::vector<std::string>& f) {
  ScenarioLabel l;
  l.reference = f[0];
  const auto n = parse_double(f[1]);
  const auto c = parse_double(f[2]);
  const auto b = parse_double(f[3]);
  if (!n || !c || !b) return std::nullopt;
  l.n_train = static_cast<int>(*n);
  l.censoring = *c;
  l.beta_treatment = *b;
  l.gamma_spec = f[4];
  return l;
}

std::optional<double> parse_value(const std::string& s) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  return parse_double(s);
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << content;
    if (!out) throw InvalidInput("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string format_result_row(const ResultRow& r) {
  std::string line = csv_escape(r.scenario.reference) + "," + std::to_string(r.scenario.n_train) + "," +
                     format_double(r.scenario.censoring) + "," + format_double(r.scenario.beta_treatment) + "," +
                     csv_escape(r.scenario.gamma_spec) + "," + csv_escape(r.method) + "," +
                     std::to_string(r.replicate) + "," + csv_escape(r.metric) + "," + format_double(r.value) + "," +
                     format_ms(r.fit_ms) + "," + format_ms(r.predict_ms) + "," + (r.dropped ? "1" : "0") + "," +
                     csv_escape(r.drop_reason);
  return line;
}

void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::string out(kResultHeader);
  out += "\n";
  for (const auto& r : rows) out += format_result_row(r) + "\n";
  write_atomically(path, out);
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line == kResultHeader) continue;
    }
    std::vector<std::string> f;
    try {
      f = split_csv_line(line);
    } catch (const InvalidInput&) {
      continue;
    }
    if (f.size() != 13) continue;
    const auto label = parse_label(f);
    const auto rep = parse_double(f[6]);
    const auto value = parse_value(f[8]);
    const auto fit = parse_double(f[9]);
    const auto pred = parse_double(f[10]);
    if (!label || !rep || !value || !fit || !pred || (f[11] != "0" && f[11] != "1")) continue;
    rows.push_back(ResultRow{*label, f[5], static_cast<int>(*rep), f[7], *value, *fit, *pred, f[11] == "1", f[12]});
  }
  return rows;
}

void write_curves(const std::filesystem::path& path, const std::vector<CurveRecord>& curves) {
  std::string out(kCurveHeader);
  out += "\n";
  for (const auto& c : curves) {
    const std::string prefix = csv_escape(c.scenario.reference) + "," + std::to_string(c.scenario.n_train) + "," +
                               format_double(c.scenario.censoring) + "," + format_double(c.scenario.beta_treatment) +
                               "," + csv_escape(c.scenario.gamma_spec) + "," + csv_escape(c.method) + "," +
                               std::to_string(c.replicate) + "," + format_double(c.t_star) + ",";
    for (std::size_t k = 0; k < c.predicted.size(); ++k) {
      out += prefix + std::to_string(k) + "," + format_double(c.predicted[k]) + "," + format_double(c.observed[k]) + "\n";
    }
  }
  write_atomically(path, out);
}

std::vector<CurveRecord> read_curves(const std::filesystem::path& path) {
  std::vector<CurveRecord> curves;
  std::ifstream in(path);
  if (!in) return curves;
  std::string line;
  bool header = true;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      if (line == kCurveHeader) continue;
    }
    std::vector<std::string> f;
    try {
      f = split_csv_line(line);
    } catch (const InvalidInput&) {
      continue;
    }
    if (f.size() != 11) continue;
    const auto label = parse_label(f);
    const auto rep = parse_double(f[6]);
    const auto t = parse_double(f[7]);
    const auto point = parse_double(f[8]);
    const auto p = parse_double(f[9]);
    const auto o = parse_double(f[10]);
    if (!label || !rep || !t || !point || !p || !o) continue;
    CurveRecord probe{*label, f[5], static_cast<int>(*rep), *t, {}, {}};
    const std::string key = probe.key();
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, curves.size()).first;
      curves.push_back(std::move(probe));
    }
    CurveRecord& c = curves[it->second];
    if (static_cast<std::size_t>(*point) != c.predicted.size()) continue;
    c.predicted.push_back(*p);
    c.observed.push_back(*o);
  }
  return curves;
}

namespace {

struct Task {
  std::size_t scenario = 0;
  int replicate = 0;
};

struct TaskOutput {
  std::vector<ResultRow> rows;
  std::vector<CurveRecord> curves;
};

bool is_main_effect(const ColumnSpec& c) { return c.name.find(':') == std::string::npos; }

std::vector<Index> main_effects(const std::vector<ColumnSpec>& columns) {
  std::vector<Index> out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (is_main_effect(columns[j])) out.push_back(static_cast<Index>(j));
  }
  return out;
}

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Simulated datasets share one column layout per reference, with the
// treatment in column 0.
ModelSpec method_spec(const ExperimentPlan& plan, const MethodId& method, const std::vector<ColumnSpec>& columns,
                      const ForestParams& forest, bool tune) {
  const std::vector<Index> cols = main_effects(columns);
  if (method.cox) {
    CoxSpec c;
    c.columns = cols;
    c.selection = plan.cox_selection;
    c.forced = {0};
    return ModelSpec::make_cox(c);
  }
  ForestSpec f;
  f.params = forest;
  f.params.rule = method.rule;
  f.params.n_threads = 1;
  f.columns = cols;
  f.tune = tune;
  return ModelSpec::make_forest(f);
}

std::string sort_metric_name(Metric m) { return std::string(to_string(m)); }

}  // namespace

RunSummary run_scenarios(const ExperimentPlan& plan, const std::filesystem::path& out_dir, const LogFn& log) {
  plan.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw InvalidInput("cannot create output directory " + out_dir.string());
  }
  const auto results_path = out_dir / "results.csv";
  const auto curves_path = out_dir / "calibration_curves.csv";
  const bool want_curves =
      std::find(plan.metrics.begin(), plan.metrics.end(), Metric::kCalibration) != plan.metrics.end();

  std::vector<ResultRow> existing = read_results(results_path);
  std::vector<CurveRecord> existing_curves = want_curves ? read_curves(curves_path) : std::vector<CurveRecord>{};
  {
    std::set<std::string> seen;
    std::vector<ResultRow> unique;
    for (auto& r : existing) {
      if (seen.insert(r.key()).second) unique.push_back(std::move(r));
    }
    existing = std::move(unique);
  }
  std::unordered_map<std::string, bool> have;  // key -> dropped
  for (const auto& r : existing) have.emplace(r.key(), r.dropped);
  std::unordered_set<std::string> have_curves;
  for (const auto& c : existing_curves) have_curves.insert(c.key());

  std::vector<MethodId> methods;
  for (const auto& m : plan.methods) methods.push_back(MethodId::parse(m));

  RunSummary summary;
  std::vector<Task> tasks;
  std::set<std::size_t> pending_scenarios;
  for (std::size_t s = 0; s < plan.scenarios.size(); ++s) {
    const ScenarioLabel label = ScenarioLabel::of(plan.scenarios[s]);
    for (int r = 0; r < plan.scenarios[s].n_sim; ++r) {
      ++summary.tasks_total;
      bool complete = true;
      for (const auto& m : methods) {
        for (Metric metric : plan.metrics) {
          ResultRow probe{label, m.label(), r, sort_metric_name(metric), 0, 0, 0, false, {}};
          const auto it = have.find(probe.key());
          if (it == have.end()) {
            complete = false;
          } else if (metric == Metric::kCalibration && !it->second &&
                     !have_curves.count(CurveRecord{label, m.label(), r, 0, {}, {}}.key())) {
            complete = false;
          }
        }
      }
      if (complete) {
        ++summary.tasks_skipped;
      } else {
        tasks.push_back(Task{s, r});
        pending_scenarios.insert(s);
      }
    }
  }

  std::map<Reference, ReferenceModel> references;
  std::map<std::size_t, double> bounds;
  std::map<std::pair<std::size_t, std::size_t>, ForestParams> tuned;
  if (!tasks.empty()) {
    for (std::size_t s : pending_scenarios) {
      const Reference ref = plan.scenarios[s].reference;
      if (!references.count(ref)) {
        if (log) log("building reference model for " + std::string(to_string(ref)));
        references.emplace(ref, build_reference_model(ref, plan.data_dir));
      }
    }
    CensoringCache cache(out_dir / "censoring_cache.json");
    const std::uint64_t pilot_seed = derive_seed(plan.seed, 0, "censoring");
    for (std::size_t s : pending_scenarios) {
      const ScenarioConfig& sc = plan.scenarios[s];
      if (auto b = cache.lookup(sc, pilot_seed)) {
        bounds[s] = *b;
        continue;
      }
      Engine rng = make_stream(pilot_seed, fnv1a(sc.mechanism_key()), "pilot");
      const double b = calibrate_censoring_bound(sc, references.at(sc.reference), rng, plan.censoring);
      cache.store(sc, pilot_seed, b);
      bounds[s] = b;
      if (log) log("censoring bound for " + ScenarioLabel::of(sc).id() + ": " + format_double(b));
    }
    cache.save();

    if (plan.tuning == TuningMode::kPerScenario) {
      std::string table = "reference,n_train,censoring,beta_treatment,gamma_spec,method,mtry,min_leaf_size,oob_c,selected\n";
      for (std::size_t s : pending_scenarios) {
        const ScenarioConfig& sc = plan.scenarios[s];
        const TrainTest data = generate_dataset(sc, references.at(sc.reference), bounds.at(s), 0);
        for (std::size_t m = 0; m < methods.size(); ++m) {
          if (methods[m].cox) continue;
          ForestParams base = plan.forest;
          base.rule = methods[m].rule;
          base.n_threads = plan.workers;
          const std::vector<Index> cols = main_effects(data.train.columns);
          const SurvivalDataset sub = data.train.select_columns(cols);
          const TuneResult t = tune_grid(sub, default_tuning_grid(sub.cols(), base),
                                         derive_seed(sc.seed, 0, "tune:" + methods[m].label()));
          tuned[{s, m}] = t.best;
          for (std::size_t k = 0; k < t.table.size(); ++k) {
            const auto& e = t.table[k];
            table += ScenarioLabel::of(sc).id() + "," + methods[m].label() + "," +
                     std::to_string(e.params.resolved_mtry(sub.cols())) + "," + std::to_string(e.params.min_leaf_size) +
                     "," + format_double(e.oob_c ? *e.oob_c : std::numeric_limits<double>::quiet_NaN()) + "," +
                     (k == t.best_index ? "1" : "0") + "\n";
          }
          if (log) {
            log("tuned " + methods[m].label() + " for " + ScenarioLabel::of(sc).id() + ": mtry " +
                std::to_string(t.best.resolved_mtry(sub.cols())) + ", min_leaf_size " +
                std::to_string(t.best.min_leaf_size));
          }
        }
      }
      write_atomically(out_dir / "tuning.csv", table);
    }
  }

  // Rewrite the existing rows cleanly so appended rows start on a fresh line.
  write_results(results_path, existing);
  if (want_curves) write_curves(curves_path, existing_curves);

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::exception_ptr failure;
  std::vector<ResultRow> fresh;
  std::vector<CurveRecord> fresh_curves;

  auto run_task = [&](const Task& task) {
    const ScenarioConfig& sc = plan.scenarios[task.scenario];
    const ScenarioLabel label = ScenarioLabel::of(sc);
    const TrainTest data = generate_dataset(sc, references.at(sc.reference), bounds.at(task.scenario), task.replicate);
    EvaluationContext ctx;
    ctx.ibs_horizon = default_ibs_horizon(data.test.time);
    {
      std::vector<double> t(data.test.time.data(), data.test.time.data() + data.test.time.size());
      ctx.calibration_time = median(t);
    }
    ctx.calibration_grid = plan.calibration_grid;
    TaskOutput out;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const MethodId& method = methods[m];
      ForestParams forest = plan.forest;
      if (auto it = tuned.find({task.scenario, m}); it != tuned.end()) forest = it->second;
      forest.seed = derive_seed(sc.seed, static_cast<std::uint64_t>(task.replicate), "forest:" + method.label());
      const ModelSpec spec =
          method_spec(plan, method, data.train.columns, forest, plan.tuning == TuningMode::kPerReplicate);
      const auto fit_start = Clock::now();
      std::optional<FittedModel> model;
      std::string fit_error;
      try {
        model = FittedModel::fit(spec, data.train);
      } catch (const Error& e) {
        fit_error = e.what();
      }
      const double fit_ms = plan.record_timing ? ms_since(fit_start) : 0.0;
      for (Metric metric : plan.metrics) {
        ResultRow row{label, method.label(), task.replicate, sort_metric_name(metric),
                      std::numeric_limits<double>::quiet_NaN(), fit_ms, 0.0, false, {}};
        if (!model) {
          row.dropped = true;
          row.drop_reason = "fit: " + fit_error;
          out.rows.push_back(std::move(row));
          continue;
        }
        const auto pred_start = Clock::now();
        try {
          if (metric == Metric::kCalibration) {
            const CalibrationCurve curve = evaluate_calibration(*model, data.test, ctx);
            row.value = curve.mean_abs_deviation();
            out.curves.push_back(CurveRecord{label, method.label(), task.replicate, curve.t_star, curve.predicted,
                                             curve.observed});
          } else {
            row.value = evaluate_metric(*model, data.test, metric, ctx);
          }
          if (!std::isfinite(row.value)) {
            row.dropped = true;
            row.drop_reason = "evaluate: non-finite value";
            row.value = std::numeric_limits<double>::quiet_NaN();
          }
        } catch (const Error& e) {
          row.dropped = true;
          row.drop_reason = std::string("evaluate: ") + e.what();
          row.value = std::numeric_limits<double>::quiet_NaN();
        }
        row.predict_ms = plan.record_timing ? ms_since(pred_start) : 0.0;
        out.rows.push_back(std::move(row));
      }
    }
    std::lock_guard<std::mutex> lock(io_mutex);
    {
      std::ofstream app(results_path, std::ios::app | std::ios::binary);
      for (const auto& r : out.rows) app << format_result_row(r) << "\n";
    }
    for (auto& r : out.rows) fresh.push_back(std::move(r));
    for (auto& c : out.curves) fresh_curves.push_back(std::move(c));
    const std::size_t n_done = ++done;
    if (log && (n_done % 10 == 0 || n_done == tasks.size())) {
      log("completed " + std::to_string(n_done) + "/" + std::to_string(tasks.size()) + " tasks");
    }
  };

  auto work = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        run_task(tasks[k]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(plan.workers);
  if (workers <= 1 || tasks.size() <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, tasks.size()); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  summary.tasks_run = tasks.size();

  // Final ordering: plan order of scenarios, methods and metrics, then
  // replicate; rows outside the plan keep their relative order at the end.
  std::unordered_map<std::string, std::size_t> scenario_rank;
  for (std::size_t s = 0; s < plan.scenarios.size(); ++s) scenario_rank[ScenarioLabel::of(plan.scenarios[s]).id()] = s;
  std::unordered_map<std::string, std::size_t> method_rank;
  for (std::size_t m = 0; m < plan.methods.size(); ++m) method_rank[plan.methods[m]] = m;
  std::unordered_map<std::string, std::size_t> metric_rank;
  for (std::size_t m = 0; m < plan.metrics.size(); ++m) metric_rank[sort_metric_name(plan.metrics[m])] = m;
  auto rank_of = [](const std::unordered_map<std::string, std::size_t>& ranks, const std::string& key) {
    auto it = ranks.find(key);
    return it == ranks.end() ? std::numeric_limits<std::size_t>::max() : it->second;
  };
  auto order = [&](const std::string& scenario, const std::string& method, int replicate, const std::string& metric) {
    return std::make_tuple(rank_of(scenario_rank, scenario), rank_of(method_rank, method), replicate,
                           rank_of(metric_rank, metric));
  };

  std::vector<ResultRow> all = std::move(existing);
  for (auto& r : fresh) {
    if (have.emplace(r.key(), r.dropped).second) all.push_back(std::move(r));
  }
  std::stable_sort(all.begin(), all.end(), [&](const ResultRow& a, const ResultRow& b) {
    return order(a.scenario.id(), a.method, a.replicate, a.metric) <
           order(b.scenario.id(), b.method, b.replicate, b.metric);
  });
  write_results(results_path, all);
  summary.rows = all.size();
  for (const auto& r : all) summary.dropped_rows += r.dropped ? 1 : 0;

  if (want_curves) {
    std::vector<CurveRecord> curves = std::move(existing_curves);
    for (auto& c : fresh_curves) {
      if (have_curves.insert(c.key()).second) curves.push_back(std::move(c));
    }
    std::stable_sort(curves.begin(), curves.end(), [&](const CurveRecord& a, const CurveRecord& b) {
      return order(a.scenario.id(), a.method, a.replicate, "") < order(b.scenario.id(), b.method, b.replicate, "");
    });
    write_curves(curves_path, curves);
  }
  return summary;
}

std::vector<RealDataRow> run_real_data_bootstrap(const SurvivalDataset& raw, const Schema& schema,
                                                 const std::string& dataset_name, const RealDataOptions& options,
                                                 const LogFn& log) {
  if (options.methods.empty()) throw InvalidInput("no methods requested");
  const SurvivalDataset ds = impute_column_means(raw);
  std::vector<Index> cols = main_effects(ds.columns);
  std::vector<Index> forced;
  if (schema.treatment_column) forced.push_back(ds.column_index(*schema.treatment_column));

  BootstrapOptions boot;
  boot.B = options.B;
  boot.alpha = options.alpha;
  boot.n_threads = options.n_threads;

  std::vector<RealDataRow> rows;
  for (const auto& name : options.methods) {
    const MethodId method = MethodId::parse(name);
    const auto start = Clock::now();
    ModelSpec spec;
    std::string terms;
    if (method.cox) {
      CoxSpec c;
      c.columns = cols;
      if (options.cox_selection) {
        const CoxModel selected = stepwise_select(ds, cols, *options.cox_selection, forced);
        c.columns = selected.columns;
        std::sort(c.columns.begin(), c.columns.end());
      }
      for (Index j : c.columns) terms += (terms.empty() ? "" : " ") + ds.columns[static_cast<std::size_t>(j)].name;
      spec = ModelSpec::make_cox(c);
    } else {
      ForestSpec f;
      f.params = options.forest;
      f.params.rule = method.rule;
      f.columns = cols;
      if (options.tune) {
        const SurvivalDataset sub = ds.select_columns(cols);
        const TuneResult t = tune_grid(sub, default_tuning_grid(sub.cols(), f.params),
                                       derive_seed(options.seed, 0, "tune:" + name));
        f.params = t.best;
        f.params.rule = method.rule;
      }
      terms = "mtry=" + std::to_string(f.params.resolved_mtry(static_cast<Index>(cols.size()))) +
              " min_leaf_size=" + std::to_string(f.params.min_leaf_size) + " n_trees=" + std::to_string(f.params.n_trees);
      spec = ModelSpec::make_forest(f);
    }
    boot.seed = derive_seed(options.seed, fnv1a(dataset_name + "/" + name), "bootstrap");
    const std::vector<BootstrapResult> results = run_bootstrap(ds, spec, options.metrics, boot);
    const double elapsed = ms_since(start);
    for (const auto& r : results) {
      rows.push_back(RealDataRow{dataset_name, name, r, terms, elapsed});
      if (log) {
        log(dataset_name + " " + name + " " + std::string(to_string(r.metric)) + ": " + format_double(r.theta) +
            " (" + format_double(r.ci_low) + ", " + format_double(r.ci_high) + "), dropped " +
            std::to_string(r.dropped));
      }
    }
  }
  return rows;
}

void write_bootstrap_table(const std::filesystem::path& path, const std::vector<RealDataRow>& rows) {
  std::string out =
      "dataset,method,metric,theta,ci_low,ci_high,ci_low_verbatim,ci_high_verbatim,verbatim_inverted,apparent,"
      "oob_mean,R,w,noinfo,B,dropped,alpha,ibs_horizon,terms,elapsed_ms\n";
  for (const auto& row : rows) {
    const BootstrapResult& r = row.result;
    out += csv_escape(row.dataset) + "," + csv_escape(row.method) + "," + std::string(to_string(r.metric)) + "," +
           format_double(r.theta) + "," + format_double(r.ci_low) + "," + format_double(r.ci_high) + "," +
           format_double(r.ci_low_verbatim) + "," + format_double(r.ci_high_verbatim) + "," +
           (r.verbatim_inverted ? "1" : "0") + "," + format_double(r.apparent) + "," + format_double(r.oob_mean) +
           "," + format_double(r.R) + "," + format_double(r.w) + "," + format_double(r.noinfo) + "," +
           std::to_string(r.B) + "," + std::to_string(r.dropped) + "," + format_double(r.alpha) + "," +
           format_double(r.metric == Metric::kIbs ? r.ibs_horizon : std::numeric_limits<double>::quiet_NaN()) + "," +
           csv_escape(row.terms) + "," + format_ms(row.elapsed_ms) + "\n";
  }
  write_atomically(path, out);
}

}  // namespace survbench
