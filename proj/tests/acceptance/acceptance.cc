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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "survbench/bootstrap.h"
#include "survbench/coxph.h"
#include "survbench/error.h"
#include "survbench/estimators.h"
#include "survbench/metrics.h"
#include "survbench/rsf.h"
#include "survbench/runner.h"
#include "survbench/simgen.h"
#include "survbench/stats.h"

namespace fs = std::filesystem;
using namespace survbench;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_data = SURVBENCH_TEST_DATA_DIR;
fs::path g_work = fs::temp_directory_path() / "survbench_acceptance";

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& msg) { std::cerr << "  .. " << msg << "\n"; }

const BootstrapResult& find(const std::vector<RealDataRow>& rows, const std::string& method, Metric m) {
  for (const auto& r : rows) {
    if (r.method == method && r.result.metric == m) return r.result;
  }
  throw InvalidInput("missing bootstrap row " + method);
}

std::vector<RealDataRow> real_data(const std::string& name, const std::vector<std::string>& methods) {
  const Schema schema = load_schema(g_data / (name + ".schema.json"));
  const SurvivalDataset raw = load_csv(g_data / (name + ".csv"), schema);
  RealDataOptions opt;
  opt.B = 200;
  opt.seed = 1;
  opt.methods = methods;
  auto rows = run_real_data_bootstrap(raw, schema, name, opt, progress);
  fs::create_directories(g_work);
  write_bootstrap_table(g_work / ("bootstrap_" + name + ".csv"), rows);
  return rows;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = real_data("pbc", {"cox"});
  const double secs = seconds_since(t0);
  const BootstrapResult& c = find(rows, "cox", Metric::kCIndex);
  const BootstrapResult& ibs = find(rows, "cox", Metric::kIbs);
  const bool ok = std::abs(c.theta - 0.776) <= 0.03 && std::abs(ibs.theta - 0.131) <= 0.02 && secs < 300;
  return {ok, "PBC Cox B=200: C " + fmt("%.4f", c.theta) + " (0.776 +/- 0.03), IBS " + fmt("%.4f", ibs.theta) +
                  " (0.131 +/- 0.02), apparent C " + fmt("%.4f", c.apparent) + ", " + fmt("%.0f", secs) +
                  " s (< 300)"};
}

Outcome criterion2() {
  const auto rows = real_data("prostate", {"cox", "rsf:logrank"});
  const BootstrapResult& c = find(rows, "cox", Metric::kCIndex);
  const BootstrapResult& cox_ibs = find(rows, "cox", Metric::kIbs);
  const BootstrapResult& rsf_ibs = find(rows, "rsf:logrank", Metric::kIbs);
  const bool ok = std::abs(c.theta - 0.521) <= 0.03 && rsf_ibs.theta < cox_ibs.theta;
  return {ok, "prostate B=200: Cox C " + fmt("%.4f", c.theta) + " (0.521 +/- 0.03), IBS rsf:logrank " +
                  fmt("%.4f", rsf_ibs.theta) + " < cox " + fmt("%.4f", cox_ibs.theta)};
}

double median_of(const std::vector<ResultRow>& rows, const std::string& method, const std::string& metric,
                 int* dropped) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.method != method || r.metric != metric) continue;
    if (r.dropped) {
      ++*dropped;
      continue;
    }
    v.push_back(r.value);
  }
  return v.empty() ? NAN : median(v);
}

struct SimOutcome {
  double a = NAN;
  double b = NAN;
  int dropped = 0;
  double secs = 0.0;
};

SimOutcome simulate(const std::string& name, const std::string& plan_json, const std::string& m1,
                    const std::string& m2) {
  const fs::path dir = g_work / name;
  fs::remove_all(dir);
  const ExperimentPlan plan = parse_plan(plan_json, g_data);
  const auto t0 = std::chrono::steady_clock::now();
  run_scenarios(plan, dir, progress);
  SimOutcome out;
  out.secs = seconds_since(t0);
  const auto rows = read_results(dir / "results.csv");
  out.a = median_of(rows, m1, "ibs", &out.dropped);
  out.b = median_of(rows, m2, "ibs", &out.dropped);
  return out;
}

Outcome criterion3() {
  const SimOutcome s = simulate("nonph_pbc", R"({
    "seed": 2021, "n_sim": 50, "n_test": 500, "workers": 4, "tuning": "per_replicate",
    "scenarios": [{"reference": "pbc", "n_train": 400, "censoring": 0.3, "beta_treatment": -0.4, "gamma": [2, 5]}],
    "methods": ["cox", "rsf:logrank"], "metrics": ["c_index", "ibs"]})",
                                "cox", "rsf:logrank");
  const bool ok = s.a < s.b && s.secs < 1800;
  return {ok, "PBC-like nonPH N=400: median IBS cox " + fmt("%.4f", s.a) + " < rsf:logrank " + fmt("%.4f", s.b) +
                  ", dropped " + std::to_string(s.dropped) + ", " + fmt("%.0f", s.secs) + " s (< 1800)"};
}

Outcome criterion4() {
  const SimOutcome s = simulate("interaction_prostate", R"({
    "seed": 2021, "n_sim": 50, "n_test": 500, "workers": 4, "tuning": "per_replicate",
    "scenarios": [{"reference": "prostate", "n_train": 400, "censoring": 0.6, "beta_treatment": -0.4, "gamma": [2, 5]}],
    "methods": ["cox", "rsf:extratrees"], "metrics": ["c_index", "ibs"]})",
                                "rsf:extratrees", "cox");
  const bool ok = s.a < s.b;
  return {ok, "prostate-like nonPH 60% censoring N=400: median IBS rsf:extratrees " + fmt("%.4f", s.a) +
                  " < cox " + fmt("%.4f", s.b) + ", dropped " + std::to_string(s.dropped) + ", " +
                  fmt("%.0f", s.secs) + " s"};
}

// ---- oracle suite -------------------------------------------------------

SurvivalDataset make_ds(const std::vector<double>& t, const std::vector<int>& s, const std::vector<double>& x) {
  SurvivalDataset ds;
  const Index n = static_cast<Index>(t.size());
  ds.time = Eigen::Map<const Eigen::VectorXd>(t.data(), n);
  ds.status = Eigen::Map<const Eigen::VectorXi>(s.data(), n);
  ds.x.resize(n, x.empty() ? 0 : 1);
  if (!x.empty()) ds.x.col(0) = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  if (!x.empty()) ds.columns.push_back({"x", ColumnKind::kContinuous, {}});
  ds.missing = BoolMatrix::Constant(n, ds.x.cols(), false);
  return ds;
}

double breslow_loglik(const std::vector<double>& t, const std::vector<int>& s, const std::vector<double>& x,
                      double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!s[i]) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j] >= t[i]) denom += std::exp(b * x[j]);
    }
    ll += b * x[i] - std::log(denom);
  }
  return ll;
}

double grid_argmax(const std::vector<double>& t, const std::vector<int>& s, const std::vector<double>& x) {
  double best = 0.0, best_ll = -INFINITY;
  for (int k = -3000; k <= 3000; ++k) {
    const double b = k / 200.0;
    const double ll = breslow_loglik(t, s, x, b);
    if (ll > best_ll) best_ll = ll, best = b;
  }
  // Refine the grid point by repeated local grids, each ten times finer.
  for (double h = 1.0 / 200.0; h > 1e-10; h /= 10.0) {
    double centre = best;
    for (int k = -10; k <= 10; ++k) {
      const double b = centre + k * h;
      const double ll = breslow_loglik(t, s, x, b);
      if (ll > best_ll) best_ll = ll, best = b;
    }
  }
  return best;
}

Outcome criterion5() {
  std::vector<std::string> fails;
  // Harrell's C against pair enumeration.
  Engine rng = make_stream(5, 0, "acceptance-c");
  int c_checked = 0, c_degenerate = 0, c_bad = 0;
  while (c_checked < 1000) {
    const Index n = 2 + static_cast<Index>(rng() % 7);
    Eigen::VectorXd t(n), r(n);
    Eigen::VectorXi s(n);
    for (Index i = 0; i < n; ++i) {
      t(i) = static_cast<double>(1 + rng() % 5);
      r(i) = static_cast<double>(rng() % 4);
      s(i) = static_cast<int>(rng() % 2);
    }
    double conc = 0.0, comp = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (t(i) < t(j) && s(i) == 1) {
          comp += 1.0;
          conc += r(i) > r(j) ? 1.0 : (r(i) == r(j) ? 0.5 : 0.0);
        }
      }
    }
    if (comp == 0.0) {
      bool threw = false;
      try {
        harrell_c(r, t, s);
      } catch (const DegenerateInput&) {
        threw = true;
      }
      if (!threw) ++c_bad;
      ++c_degenerate;
      continue;
    }
    ++c_checked;
    if (harrell_c(r, t, s) != conc / comp) ++c_bad;
  }
  if (c_bad) fails.push_back(std::to_string(c_bad) + " C mismatches");

  // IBS of the KM predictor on five uncensored subjects.
  const SurvivalDataset five = make_ds({3, 1, 5, 2, 4}, {1, 1, 1, 1, 1}, {});
  const StepFunction km = km_estimator(five.time, five.status);
  const double ibs = integrated_brier([&](double t) { return Eigen::VectorXd::Constant(5, km(t)); }, five.time,
                                      five.status, 4.5);
  const double grid[] = {0, 1, 2, 3, 4, 4.5};
  const double surv[] = {1.0, 0.8, 0.6, 0.4, 0.2, 0.2};
  double area = 0.0;
  for (int k = 1; k < 6; ++k) {
    area += 0.5 * (surv[k - 1] * (1 - surv[k - 1]) + surv[k] * (1 - surv[k])) * (grid[k] - grid[k - 1]);
  }
  const double ibs_err = std::abs(ibs - area / 4.5);
  if (ibs_err > 1e-10) fails.push_back("IBS off by " + fmt("%.3g", ibs_err));

  // Analytic Cox fixture.
  const CoxModel fixture = fit_cox(make_ds({1, 2, 3}, {1, 1, 1}, {1, 0, 1}));
  const double beta_err = std::abs(fixture.beta(0) + std::log(2.0) / 2.0);
  if (beta_err > 1e-6) fails.push_back("analytic beta off by " + fmt("%.3g", beta_err));

  // Grid-search maximization on n <= 6.
  Engine cox_rng = make_stream(5, 1, "acceptance-cox");
  int cox_checked = 0;
  double worst = 0.0;
  for (int rep = 0; rep < 400 && cox_checked < 100; ++rep) {
    const std::size_t n = 3 + cox_rng() % 4;
    std::vector<double> t(n), x(n);
    std::vector<int> s(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i + 1) + 0.5 * uniform_open(cox_rng);
      x[i] = std::round(uniform_open(cox_rng) * 40.0) / 10.0 - 2.0;
      s[i] = uniform_open(cox_rng) < 0.75 ? 1 : 0;
    }
    CoxOptions opt;
    opt.ties = Ties::kBreslow;
    double beta = 0.0;
    try {
      beta = fit_cox(make_ds(t, s, x), opt).beta(0);
    } catch (const Error&) {
      continue;
    }
    const double oracle = grid_argmax(t, s, x);
    if (std::abs(oracle) > 14.0) continue;
    worst = std::max(worst, std::abs(beta - oracle));
    ++cox_checked;
  }
  if (worst > 1e-6 || cox_checked < 50) {
    fails.push_back("grid search max diff " + fmt("%.3g", worst) + " on " + std::to_string(cox_checked));
  }
  std::string detail = "C exact on " + std::to_string(c_checked) + " instances (" + std::to_string(c_degenerate) +
                       " without comparable pairs rejected), IBS err " + fmt("%.1e", ibs_err) +
                       ", analytic beta err " + fmt("%.1e", beta_err) + ", grid-search max err " +
                       fmt("%.1e", worst) + " on " + std::to_string(cox_checked) + " fits";
  for (const auto& f : fails) detail += "; " + f;
  return {fails.empty(), detail};
}

Outcome criterion6() {
  const Dot632Plus r = dot632plus(0.8, 0.7, 0.5);
  const bool ok = std::abs(r.R - 0.3333) <= 1e-4 && std::abs(r.w - 0.7204) <= 1e-4 && std::abs(r.theta - 0.7280) <= 1e-4;
  return {ok, "dot632plus(0.8, 0.7, 0.5) = (" + fmt("%.6f", r.R) + ", " + fmt("%.6f", r.w) + ", " +
                  fmt("%.6f", r.theta) + ")"};
}

// ---- generator fidelity --------------------------------------------------

double ks_weibull(std::vector<double> t, double lambda, double gamma) {
  std::sort(t.begin(), t.end());
  const double n = static_cast<double>(t.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = 1.0 - std::exp(-std::pow(t[i] / lambda, gamma));
    ks = std::max({ks, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return ks;
}

Outcome criterion7() {
  bool ok = true;
  double worst_ks = 0.0, worst_cens = 0.0;
  int cells = 0;
  std::string worst_cell;
  const std::vector<std::pair<double, double>> shapes{{0.8, 0.8}, {1, 1}, {2, 2}, {2, 5}};
  for (Reference ref : {Reference::kPbc, Reference::kProstate}) {
    const ReferenceModel model = build_reference_model(ref, g_data);
    for (const auto& [g0, g1] : shapes) {
      for (double target : {0.3, 0.6}) {
        const ScenarioConfig sc = make_scenario(ref, 400, target, 0.0, g0, g1, 77);
        // Baseline draws: zero linear predictor in each treatment group.
        for (int group : {0, 1}) {
          const int n = 100000;
          Engine rng = make_stream(sc.seed, static_cast<std::uint64_t>(cells * 2 + group), "ks");
          const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(n, 1);
          const Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
          const Eigen::VectorXi treat = Eigen::VectorXi::Constant(n, group);
          const Eigen::VectorXd t = simulate_survival_times(zero, beta, sc.hazard, treat, rng);
          const double ks = ks_weibull({t.data(), t.data() + n}, sc.hazard.lambda, group ? g1 : g0);
          worst_ks = std::max(worst_ks, ks);
          if (ks >= 0.01) ok = false;
        }
        Engine pilot = make_stream(derive_seed(1, 0, "censoring"), fnv1a(sc.mechanism_key()), "pilot");
        const double bound = calibrate_censoring_bound(sc, model, pilot);
        Engine fresh = make_stream(sc.seed, static_cast<std::uint64_t>(cells), "fresh");
        const SurvivalDataset ds = generate_sample(sc, model, bound, 100000, fresh);
        const double achieved = 1.0 - ds.status.cast<double>().mean();
        const double err = std::abs(achieved - target);
        if (err > worst_cens) {
          worst_cens = err;
          worst_cell = std::string(to_string(ref)) + " gamma " + sc.gamma_spec() + " target " + fmt("%.1f", target);
        }
        if (err > 0.02) ok = false;
        ++cells;
      }
    }
  }
  return {ok, std::to_string(cells) + " cells: max KS " + fmt("%.4f", worst_ks) + " (< 0.01), max censoring error " +
                  fmt("%.4f", worst_cens) + " (<= 0.02, " + worst_cell + ")"};
}

// ---- statistical sanity --------------------------------------------------

Outcome criterion8() {
  const ReferenceModel pbc = build_reference_model(Reference::kPbc, g_data);
  const ScenarioConfig base = make_scenario(Reference::kPbc, 200, 0.3, 0.0, 1.0, 1.0, 88);

  // Null data: copula covariates, no covariate effect.
  ScenarioConfig null_sc = base;
  null_sc.beta = std::vector<double>(static_cast<std::size_t>(base.full_beta().size()), 0.0);
  Engine pilot = make_stream(88, 0, "pilot");
  const double null_bound = calibrate_censoring_bound(null_sc, pbc, pilot);
  double c_sum = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const TrainTest data = generate_dataset(null_sc, pbc, null_bound, rep);
    ForestParams p;
    p.seed = derive_seed(88, static_cast<std::uint64_t>(rep), "null-forest");
    const SurvivalForest f = grow_forest(data.train, p);
    c_sum += harrell_c(oob_mortality(f, data.train).mortality, data.train.time, data.train.status);
  }
  const double null_c = c_sum / 20.0;
  const bool c_ok = null_c >= 0.45 && null_c <= 0.55;

  // Grambsch-Therneau on correctly specified Cox models.
  auto rejection_rate = [&](double g0, double g1, int reps, std::uint64_t seed) {
    const ScenarioConfig sc = make_scenario(Reference::kPbc, 400, 0.3, 0.8, g0, g1, seed);
    Engine pr = make_stream(seed, 0, "pilot");
    const double bound = calibrate_censoring_bound(sc, pbc, pr);
    int rejected = 0, used = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const SurvivalDataset train = generate_dataset(sc, pbc, bound, rep).train;
      try {
        const PhTestResult r = ph_test(fit_cox(train), train);
        ++used;
        if (r.global_p < 0.05) ++rejected;
      } catch (const Error&) {
      }
    }
    return std::make_pair(used ? static_cast<double>(rejected) / used : NAN, used);
  };
  const auto [size, size_used] = rejection_rate(1.0, 1.0, 200, 881);
  const auto [power, power_used] = rejection_rate(2.0, 5.0, 100, 882);
  const bool gt_ok = std::abs(size - 0.05) <= 0.03 && power >= 0.8;
  return {c_ok && gt_ok, "null forest OOB C " + fmt("%.4f", null_c) + " (in [0.45, 0.55]); GT size " +
                             fmt("%.3f", size) + " on " + std::to_string(size_used) + " fits (0.05 +/- 0.03); power " +
                             fmt("%.3f", power) + " on " + std::to_string(power_used) + " fits (>= 0.8)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion9() {
  const char* plan_json = R"({
    "seed": 99, "n_sim": 4, "n_test": 200, "pilot_size": 50000, "tuning": "per_replicate",
    "forest": {"n_trees": 30},
    "scenarios": [
      {"reference": "pbc", "n_train": 100, "censoring": 0.6, "beta_treatment": 0.8, "gamma": 1},
      {"reference": "prostate", "n_train": 200, "censoring": 0.3, "beta_treatment": -0.4, "gamma": [2, 5]}],
    "methods": ["cox", "rsf:logrank", "rsf:extratrees", "rsf:maxstat"],
    "metrics": ["c_index", "ibs", "calibration"]})";
  ExperimentPlan plan = parse_plan(plan_json, g_data);
  plan.record_timing = false;
  const fs::path one = g_work / "determinism_w1";
  const fs::path eight = g_work / "determinism_w8";
  fs::remove_all(one);
  fs::remove_all(eight);
  plan.workers = 1;
  const RunSummary a = run_scenarios(plan, one, progress);
  plan.workers = 8;
  run_scenarios(plan, eight, progress);
  const std::string ra = slurp(one / "results.csv"), rb = slurp(eight / "results.csv");
  const std::string ca = slurp(one / "calibration_curves.csv"), cb = slurp(eight / "calibration_curves.csv");
  const bool ok = !ra.empty() && ra == rb && ca == cb && a.rows == 2u * 4u * 4u * 3u;
  return {ok, std::to_string(a.rows) + " rows (" + std::to_string(a.dropped_rows) +
                  " dropped); results.csv and calibration_curves.csv byte-identical at 1 and 8 workers: " +
                  (ra == rb && ca == cb ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--data-dir" && i + 1 < argc) {
      g_data = argv[++i];
    } else if (arg == "--work" && i + 1 < argc) {
      g_work = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: survbench_acceptance [--data-dir DIR] [--work DIR] [--only 1,2,...]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"real-data PBC Cox", criterion1},          {"real-data prostate", criterion2},
      {"nonPH direction", criterion3},            {"interaction direction", criterion4},
      {"oracle equivalence", criterion5},         {".632+ arithmetic", criterion6},
      {"generator fidelity", criterion7},         {"statistical sanity", criterion8},
      {"determinism and parallel safety", criterion9}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k + 1);
    if (!only.empty() && !only.count(id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    if (!out.pass) ++failed;
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << id << " " << criteria[k].first << ": " << out.detail << " ["
              << fmt("%.1f", seconds_since(t0)) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
