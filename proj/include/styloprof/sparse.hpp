#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "styloprof/util.hpp"

namespace styloprof {

// Sorted (index, value) pairs; indices strictly increasing, values non-zero.
struct SparseVector {
  std::vector<std::pair<std::uint32_t, double>> entries;
  std::uint32_t dim = 0;

  void push(std::uint32_t index, double value) {
    if (value == 0.0) return;
    if (!entries.empty() && entries.back().first >= index)
      throw DataError("sparse indices must be strictly increasing");
    entries.emplace_back(index, value);
  }

  double norm2() const {
    double s = 0;
    for (auto& [i, v] : entries) s += v * v;
    return std::sqrt(s);
  }

  double dot(const SparseVector& o) const {
    double s = 0;
    std::size_t a = 0, b = 0;
    while (a < entries.size() && b < o.entries.size()) {
      if (entries[a].first < o.entries[b].first) ++a;
      else if (entries[a].first > o.entries[b].first) ++b;
      else s += entries[a++].second * o.entries[b++].second;
    }
    return s;
  }

  double dot_dense(const std::vector<double>& w) const {
    double s = 0;
    for (auto& [i, v] : entries) s += w[i] * v;
    return s;
  }

  void add_to_dense(std::vector<double>& w, double scale) const {
    for (auto& [i, v] : entries) w[i] += scale * v;
  }

  double value_at(std::uint32_t index) const {
    std::size_t lo = 0, hi = entries.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (entries[mid].first < index) lo = mid + 1;
      else hi = mid;
    }
    return (lo < entries.size() && entries[lo].first == index) ? entries[lo].second : 0.0;
  }

  bool operator==(const SparseVector& o) const {
    return dim == o.dim && entries == o.entries;
  }
};

}  // namespace styloprof
