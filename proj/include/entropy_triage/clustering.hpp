#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "entropy_triage/error.hpp"

namespace entropy_triage {

/// Directed entailment judge: returns whether `premise` entails `hypothesis`.
/// May throw; build_matrix treats a throwing pair as non-entailing.
using EntailmentJudge = std::function<bool(std::string_view premise, std::string_view hypothesis)>;

class EntailmentMatrix {
 public:
  explicit EntailmentMatrix(std::size_t size = 0)
      : size_(size), directed_(size * size, false) {
    for (std::size_t i = 0; i < size_; ++i) directed_[i * size_ + i] = true;
  }

  std::size_t size() const { return size_; }
  bool directed(std::size_t i, std::size_t j) const { return directed_[i * size_ + j]; }
  void set_directed(std::size_t i, std::size_t j, bool v) { directed_[i * size_ + j] = v; }
  bool bidirectional(std::size_t i, std::size_t j) const {
    return directed(i, j) && directed(j, i);
  }

  /// Builds a matrix straight from a symmetric relation (tests, fixtures).
  static EntailmentMatrix from_bidirectional(const std::vector<std::vector<bool>>& rel) {
    EntailmentMatrix m(rel.size());
    for (std::size_t i = 0; i < rel.size(); ++i)
      for (std::size_t j = 0; j < rel.size(); ++j) m.set_directed(i, j, i == j || rel[i][j]);
    return m;
  }

  std::size_t judge_calls = 0;
  std::size_t short_circuits = 0;
  /// Directed pairs whose judge call failed and were defaulted to false.
  std::vector<std::pair<std::size_t, std::size_t>> failed_pairs;

 private:
  std::size_t size_;
  std::vector<bool> directed_;
};

/// Disjoint-set union with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

/// Queries both directions of every unordered pair. Identical strings are
/// mutually entailing without a judge call.
inline EntailmentMatrix build_matrix(std::span<const std::string> rationales,
                                     const EntailmentJudge& judge) {
  if (rationales.empty()) throw DomainError("cannot build an entailment matrix of size 0");
  EntailmentMatrix m(rationales.size());
  for (std::size_t i = 0; i < rationales.size(); ++i) {
    for (std::size_t j = 0; j < rationales.size(); ++j) {
      if (i == j) continue;
      if (rationales[i] == rationales[j]) {
        m.set_directed(i, j, true);
        ++m.short_circuits;
        continue;
      }
      ++m.judge_calls;
      try {
        m.set_directed(i, j, judge(rationales[i], rationales[j]));
      } catch (const std::exception&) {
        m.set_directed(i, j, false);
        m.failed_pairs.emplace_back(i, j);
      }
    }
  }
  return m;
}

struct Clustering {
  std::vector<std::size_t> assignments;   // rationale index -> cluster id
  std::vector<std::size_t> cluster_sizes;  // indexed by cluster id
  std::vector<double> probabilities;
  double entropy = 0.0;

  std::size_t k_effective() const { return assignments.size(); }
  std::size_t cluster_count() const { return cluster_sizes.size(); }
};

/// Semantic entropy -sum p ln p over cluster fractions.
inline double entropy(std::span<const std::size_t> cluster_sizes) {
  if (cluster_sizes.empty()) throw DomainError("entropy of an empty partition");
  double total = 0.0;
  for (auto s : cluster_sizes) {
    if (s == 0) throw DomainError("cluster sizes must be positive");
    total += static_cast<double>(s);
  }
  double h = 0.0;
  for (auto s : cluster_sizes) {
    const double p = static_cast<double>(s) / total;
    h -= p * std::log(p);
  }
  // A single cluster is exactly zero; avoid -0.0.
  return h <= 0.0 ? 0.0 : h;
}

/// Connected components of the bidirectional relation. Cluster ids are
/// numbered in order of each component's smallest member index.
inline Clustering cluster(const EntailmentMatrix& m) {
  const std::size_t k = m.size();
  if (k == 0) throw DomainError("cannot cluster an empty matrix");
  DisjointSet dsu(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      if (m.bidirectional(i, j)) dsu.unite(i, j);

  Clustering c;
  c.assignments.assign(k, 0);
  std::vector<std::size_t> root_to_id(k, SIZE_MAX);
  for (std::size_t i = 0; i < k; ++i) {
    const auto root = dsu.find(i);
    if (root_to_id[root] == SIZE_MAX) {
      root_to_id[root] = c.cluster_sizes.size();
      c.cluster_sizes.push_back(0);
    }
    c.assignments[i] = root_to_id[root];
    ++c.cluster_sizes[c.assignments[i]];
  }
  for (auto s : c.cluster_sizes) {
    c.probabilities.push_back(static_cast<double>(s) / static_cast<double>(k));
  }
  c.entropy = entropy(c.cluster_sizes);
  return c;
}

inline nlohmann::json clustering_to_json(std::int64_t response_id, const Clustering& c) {
  return {{"response_id", response_id},
          {"k_effective", c.k_effective()},
          {"cluster_sizes", c.cluster_sizes},
          {"entropy", c.entropy},
          {"assignments", c.assignments}};
}

}  // namespace entropy_triage
