#pragma once

// BK-tree over 64-bit perceptual hashes under the Hamming metric.

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "tgmon/phash.hpp"

namespace tgmon {

class HammingIndex {
 public:
  /// Returns false when the hash was already present.
  bool insert(PHash64 h) {
    if (nodes_.empty()) {
      nodes_.push_back(Node{h, {}});
      return true;
    }
    std::size_t cur = 0;
    for (;;) {
      int d = hamming(nodes_[cur].hash, h);
      if (d == 0) return false;
      auto& kids = nodes_[cur].children;
      auto it = std::find_if(kids.begin(), kids.end(), [d](const auto& c) { return c.first == d; });
      if (it == kids.end()) {
        kids.emplace_back(d, nodes_.size());
        nodes_.push_back(Node{h, {}});
        return true;
      }
      cur = it->second;
    }
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Stored hashes within distance `max_distance` of `h`, ordered by
  /// distance, then by value.
  std::vector<PHash64> query(PHash64 h, int max_distance) const {
    std::vector<std::pair<int, PHash64>> hits;
    if (!nodes_.empty()) {
      std::vector<std::size_t> stack{0};
      while (!stack.empty()) {
        const Node& n = nodes_[stack.back()];
        stack.pop_back();
        int d = hamming(n.hash, h);
        if (d <= max_distance) hits.emplace_back(d, n.hash);
        // Triangle inequality: only subtrees at edge distance within
        // [d - r, d + r] can hold a match.
        for (const auto& [edge, child] : n.children) {
          if (edge >= d - max_distance && edge <= d + max_distance) stack.push_back(child);
        }
      }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<PHash64> out;
    out.reserve(hits.size());
    for (const auto& [_, hash] : hits) out.push_back(hash);
    return out;
  }

 private:
  struct Node {
    PHash64 hash;
    std::vector<std::pair<int, std::size_t>> children;
  };
  std::vector<Node> nodes_;
};

inline std::vector<PHash64> query_near(const HammingIndex& index, PHash64 h, int d) {
  return index.query(h, d);
}

}  // namespace tgmon
