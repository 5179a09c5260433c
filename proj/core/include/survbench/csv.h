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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace survbench {

// Splits one CSV record; double quotes enclose fields and "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field when it holds a comma, quote, or line break.
std::string csv_escape(std::string_view field);

// Shortest decimal text that parses back to the same double; "NA" for NaN.
std::string format_double(double value);

// Parses a full-string decimal number; nullopt on any trailing text.
std::optional<double> parse_double(std::string_view text);

}  // namespace survbench
