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

#pragma once

#include <span>
#include <vector>

namespace survbench {

// Sample quantile with linear interpolation between order statistics
// (Hyndman-Fan type 7, the R default). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Copies, sorts, and evaluates the type-7 quantile.
double quantile(std::span<const double> values, double p);

double median(std::span<const double> values);

// Neumaier-compensated sum; result is independent of summation blocking.
double compensated_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Sample standard deviation (n - 1 denominator). Zero for n < 2.
double sample_sd(std::span<const double> values);

// Mid-ranks (ties receive the average of their positions), 1-based.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation; NaN when either input has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

double normal_cdf(double z);
double normal_quantile(double p);
double chi_squared_upper_tail(double statistic, double df);

}  // namespace survbench
