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

#include <cstdint>
#include <random>
#include <string_view>

namespace survbench {

using Engine = std::mt19937_64;

// Derives an independent 64-bit seed from (master seed, index, purpose tag).
// Streams for distinct (index, tag) pairs do not overlap in practice and each
// can be regenerated on its own, which keeps replicates reproducible no matter
// how work is scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                          std::string_view tag);

Engine make_stream(std::uint64_t seed, std::uint64_t index,
                   std::string_view tag);

// Uniform draw on the open interval (0, 1).
double uniform_open(Engine& rng);

// Stable 64-bit FNV-1a hash, used for cache keys and tags.
std::uint64_t fnv1a(std::string_view text);

}  // namespace survbench
