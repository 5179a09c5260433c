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

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "survbench/error.h"
#include "survbench/rsf.h"

namespace survbench {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'F', '1'};
constexpr std::uint32_t kFormatVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u64(std::uint64_t v) {
    char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out_.write(buf, 8);
  }
  void u32(std::uint32_t v) {
    char buf[4];
    for (int k = 0; k < 4; ++k) buf[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out_.write(buf, 4);
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t u64() {
    unsigned char buf[8];
    read(buf, 8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
    return v;
  }
  std::uint32_t u32() {
    unsigned char buf[4];
    read(buf, 4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(buf[k]) << (8 * k);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint8_t u8() {
    unsigned char c;
    read(&c, 1);
    return c;
  }
  std::string str() {
    const std::uint32_t n = count();
    std::string s(n, '\0');
    read(reinterpret_cast<unsigned char*>(s.data()), n);
    return s;
  }
  // Length prefix, bounded so a corrupt header cannot request huge buffers.
  std::uint32_t count() {
    const std::uint32_t n = u32();
    if (n > (1U << 28)) throw InvalidInput("forest file: implausible length field");
    return n;
  }
  void read(unsigned char* p, std::size_t n) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw InvalidInput("forest file is truncated");
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_forest(std::ostream& out, const SurvivalForest& forest) {
  Writer w(out);
  out.write(kMagic, 4);
  w.u32(kFormatVersion);
  const ForestParams& p = forest.params;
  w.i32(p.n_trees);
  w.i32(p.mtry);
  w.i32(p.min_node_events);
  w.i32(p.min_leaf_size);
  w.str(std::string(to_string(p.rule)));
  w.u8(p.maxstat_correction ? 1 : 0);
  w.i32(p.max_cuts);
  w.i32(p.n_threads);
  w.u64(p.seed);
  w.u32(static_cast<std::uint32_t>(forest.names.size()));
  for (const auto& n : forest.names) w.str(n);
  w.u32(static_cast<std::uint32_t>(forest.grid.size()));
  for (double t : forest.grid) w.f64(t);
  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  for (const auto& tree : forest.trees) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      w.i32(node.var);
      w.f64(node.cut);
      w.i32(node.left);
      w.i32(node.right);
      w.i32(node.leaf);
    }
    w.u32(static_cast<std::uint32_t>(tree.leaves.size()));
    for (const auto& leaf : tree.leaves) {
      w.i32(leaf.size);
      w.u32(static_cast<std::uint32_t>(leaf.grid_index.size()));
      for (std::size_t k = 0; k < leaf.grid_index.size(); ++k) {
        w.u32(leaf.grid_index[k]);
        w.f64(leaf.increment[k]);
      }
    }
    w.u32(static_cast<std::uint32_t>(tree.in_bag.size()));
    for (std::size_t r = 0; r < tree.in_bag.size(); ++r) {
      w.u8(tree.in_bag[r]);
      w.i32(tree.train_leaf[r]);
    }
  }
  if (!out) throw InvalidInput("failed to write forest");
}

SurvivalForest read_forest(std::istream& in) {
  Reader r(in);
  unsigned char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw InvalidInput("not a forest file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw InvalidInput("unsupported forest format version " + std::to_string(version));
  }
  SurvivalForest f;
  ForestParams& p = f.params;
  p.n_trees = r.i32();
  p.mtry = r.i32();
  p.min_node_events = r.i32();
  p.min_leaf_size = r.i32();
  p.rule = parse_split_rule(r.str());
  p.maxstat_correction = r.u8() != 0;
  p.max_cuts = r.i32();
  p.n_threads = r.i32();
  p.seed = r.u64();
  f.names.resize(r.count());
  for (auto& n : f.names) n = r.str();
  f.grid.resize(r.count());
  for (auto& t : f.grid) t = r.f64();
  f.trees.resize(r.count());
  const auto grid_size = static_cast<std::uint32_t>(f.grid.size());
  for (auto& tree : f.trees) {
    tree.nodes.resize(r.count());
    for (auto& node : tree.nodes) {
      node.var = r.i32();
      node.cut = r.f64();
      node.left = r.i32();
      node.right = r.i32();
      node.leaf = r.i32();
    }
    tree.leaves.resize(r.count());
    for (auto& leaf : tree.leaves) {
      leaf.size = r.i32();
      const std::uint32_t m = r.count();
      leaf.grid_index.resize(m);
      leaf.increment.resize(m);
      for (std::uint32_t k = 0; k < m; ++k) {
        leaf.grid_index[k] = r.u32();
        if (leaf.grid_index[k] >= grid_size) throw InvalidInput("forest file: grid index out of range");
        leaf.increment[k] = r.f64();
      }
    }
    const std::uint32_t n = r.count();
    tree.in_bag.resize(n);
    tree.train_leaf.resize(n);
    for (std::uint32_t k = 0; k < n; ++k) {
      tree.in_bag[k] = r.u8();
      tree.train_leaf[k] = r.i32();
    }
    const auto n_nodes = static_cast<std::int32_t>(tree.nodes.size());
    const auto n_leaves = static_cast<std::int32_t>(tree.leaves.size());
    const auto n_vars = static_cast<std::int32_t>(f.names.size());
    for (const auto& node : tree.nodes) {
      const bool ok = node.var < 0 ? (node.leaf >= 0 && node.leaf < n_leaves)
                                   : (node.var < n_vars && node.left > 0 && node.left < n_nodes &&
                                      node.right > 0 && node.right < n_nodes);
      if (!ok) throw InvalidInput("forest file: inconsistent tree structure");
    }
    for (std::int32_t leaf : tree.train_leaf) {
      if (leaf < 0 || leaf >= n_leaves) throw InvalidInput("forest file: leaf index out of range");
    }
  }
  if (static_cast<int>(f.trees.size()) != p.n_trees) throw InvalidInput("forest file: tree count mismatch");
  return f;
}

void save_forest(const std::filesystem::path& path, const SurvivalForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  write_forest(out, forest);
}

SurvivalForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return read_forest(in);
}

}  // namespace survbench
