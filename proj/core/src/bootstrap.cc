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

#include "survbench/bootstrap.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "survbench/error.h"
#include "survbench/rng.h"
#include "survbench/stats.h"

namespace survbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> finite_sorted(std::span<const double> weights) {
  std::vector<double> w;
  for (double v : weights) {
    if (std::isfinite(v)) w.push_back(v);
  }
  if (w.empty()) throw InvalidInput("bootstrap interval needs at least one finite weight");
  std::sort(w.begin(), w.end());
  return w;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
}

ModelSpec reseeded(const ModelSpec& spec, std::uint64_t seed) {
  ModelSpec out = spec;
  out.forest.params.seed = seed;
  return out;
}

struct ReplicateOutcome {
  std::vector<double> oob;
  std::vector<double> in_sample;
  std::vector<std::string> reason;
};

}  // namespace

Dot632Plus dot632plus(double apparent, double oob_mean, double noinfo) {
  if (!std::isfinite(apparent) || !std::isfinite(oob_mean) || !std::isfinite(noinfo)) {
    throw InvalidInput(".632+ estimator needs finite inputs");
  }
  Dot632Plus out;
  const double denom = noinfo - apparent;
  out.R = denom != 0.0 ? std::clamp((oob_mean - apparent) / denom, 0.0, 1.0) : 0.0;
  out.w = 0.632 / (1.0 - 0.368 * out.R);
  out.theta = (1.0 - out.w) * apparent + out.w * oob_mean;
  return out;
}

double noinfo_value(Metric metric) {
  switch (metric) {
    case Metric::kCIndex: return 0.5;
    case Metric::kIbs: return 0.75;
    case Metric::kCalibration: break;
  }
  throw InvalidInput("no .632+ no-information value for metric '" + std::string(to_string(metric)) + "'");
}

Interval bootstrap_ci(double theta, std::span<const double> weights, double alpha) {
  check_alpha(alpha);
  const std::vector<double> w = finite_sorted(weights);
  return Interval{theta - quantile_sorted(w, 1.0 - alpha / 2.0), theta - quantile_sorted(w, alpha / 2.0)};
}

Interval bootstrap_ci_verbatim(double theta, std::span<const double> weights, double alpha) {
  check_alpha(alpha);
  const std::vector<double> w = finite_sorted(weights);
  return Interval{theta - quantile_sorted(w, 1.0 - alpha / 2.0), theta + quantile_sorted(w, alpha / 2.0)};
}

std::vector<BootstrapResult> run_bootstrap(const SurvivalDataset& ds, const ModelSpec& spec,
                                           const std::vector<Metric>& metrics,
                                           const BootstrapOptions& options) {
  if (options.B < 2) throw InvalidInput("bootstrap needs B >= 2");
  if (metrics.empty()) throw InvalidInput("bootstrap needs at least one metric");
  check_alpha(options.alpha);
  if (ds.has_missing()) throw InvalidInput("bootstrap needs complete covariates");
  for (Metric m : metrics) noinfo_value(m);
  const Index n = ds.rows();

  EvaluationContext ctx;
  ctx.ibs_horizon = options.ibs_horizon > 0.0 ? options.ibs_horizon : default_ibs_horizon(ds.time);

  const FittedModel full = FittedModel::fit(reseeded(spec, derive_seed(options.seed, 0, "apparent")), ds);
  std::vector<double> apparent;
  for (Metric m : metrics) apparent.push_back(evaluate_metric(full, ds, m, ctx));

  const auto B = static_cast<std::size_t>(options.B);
  std::vector<ReplicateOutcome> outcomes(B);
  auto replicate = [&](std::size_t b) {
    ReplicateOutcome& out = outcomes[b];
    out.oob.assign(metrics.size(), kNaN);
    out.in_sample.assign(metrics.size(), kNaN);
    out.reason.assign(metrics.size(), {});
    Engine rng = make_stream(options.seed, b, "bootstrap");
    std::vector<Index> sample(static_cast<std::size_t>(n));
    std::vector<char> drawn(static_cast<std::size_t>(n), 0);
    for (auto& r : sample) {
      r = std::min(static_cast<Index>(uniform_open(rng) * static_cast<double>(n)), n - 1);
      drawn[static_cast<std::size_t>(r)] = 1;
    }
    std::vector<Index> held_out;
    for (Index i = 0; i < n; ++i) {
      if (!drawn[static_cast<std::size_t>(i)]) held_out.push_back(i);
    }
    const SurvivalDataset train = ds.subset(sample);
    std::optional<FittedModel> model;
    try {
      if (held_out.empty()) throw DegenerateInput("empty out-of-bag set");
      model = FittedModel::fit(reseeded(spec, derive_seed(options.seed, b, "forest")), train);
    } catch (const DegenerateInput& e) {
      out.reason.assign(metrics.size(), std::string("fit: ") + e.what());
      return;
    } catch (const ConvergenceError& e) {
      out.reason.assign(metrics.size(), std::string("fit: ") + e.what());
      return;
    }
    const SurvivalDataset test = ds.subset(held_out);
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      try {
        out.oob[k] = evaluate_metric(*model, test, metrics[k], ctx);
        out.in_sample[k] = evaluate_metric(*model, train, metrics[k], ctx);
      } catch (const DegenerateInput& e) {
        out.oob[k] = kNaN;
        out.in_sample[k] = kNaN;
        out.reason[k] = std::string("evaluate: ") + e.what();
      }
    }
  };

  const unsigned workers = options.n_threads == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                                  : static_cast<unsigned>(std::max(1, options.n_threads));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t b = next++; b < B; b = next++) {
      try {
        replicate(b);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(workers, B); ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<BootstrapResult> results;
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    BootstrapResult r;
    r.metric = metrics[k];
    r.B = options.B;
    r.alpha = options.alpha;
    r.apparent = apparent[k];
    r.noinfo = noinfo_value(metrics[k]);
    r.ibs_horizon = ctx.ibs_horizon;
    std::vector<double> kept;
    for (std::size_t b = 0; b < B; ++b) {
      const ReplicateOutcome& o = outcomes[b];
      if (std::isfinite(o.oob[k]) && std::isfinite(o.in_sample[k])) {
        r.oob_values.push_back(o.oob[k]);
        r.weights.push_back(o.in_sample[k] - r.apparent);
        kept.push_back(o.oob[k]);
      } else {
        r.oob_values.push_back(kNaN);
        r.weights.push_back(kNaN);
        ++r.dropped;
        ++r.drop_reasons[o.reason[k].empty() ? "non-finite value" : o.reason[k]];
      }
    }
    if (static_cast<double>(r.dropped) > options.max_drop_fraction * static_cast<double>(options.B)) {
      throw DegenerateInput(std::to_string(r.dropped) + " of " + std::to_string(options.B) + " bootstrap replicates dropped for " +
                            std::string(to_string(metrics[k])) + "; first reason: " + r.drop_reasons.begin()->first);
    }
    r.oob_mean = mean(kept);
    const Dot632Plus d = dot632plus(r.apparent, r.oob_mean, r.noinfo);
    r.R = d.R;
    r.w = d.w;
    r.theta = d.theta;
    const Interval ci = bootstrap_ci(r.theta, r.weights, r.alpha);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    const Interval verbatim = bootstrap_ci_verbatim(r.theta, r.weights, r.alpha);
    r.ci_low_verbatim = verbatim.low;
    r.ci_high_verbatim = verbatim.high;
    r.verbatim_inverted = verbatim.low > verbatim.high;
    results.push_back(std::move(r));
  }
  return results;
}

BootstrapResult run_bootstrap(const SurvivalDataset& ds, const ModelSpec& spec, Metric metric,
                              const BootstrapOptions& options) {
  return run_bootstrap(ds, spec, std::vector<Metric>{metric}, options).front();
}

}  // namespace survbench
