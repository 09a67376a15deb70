#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "opng/tags.hpp"

namespace opng {

// Keeps the k best (score desc, id asc) entries seen so far. The heap front
// is the current worst kept entry, so each push is O(log k).
template <typename Payload>
class TopK {
 public:
  struct Entry {
    double score;
    WordId id;
    Payload payload;
  };

  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  static bool better(const Entry& a, const Entry& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  }

  void push(double score, WordId id, Payload payload) {
    if (k_ == 0) return;
    Entry e{score, id, payload};
    if (heap_.size() < k_) {
      heap_.push_back(e);
      std::push_heap(heap_.begin(), heap_.end(), better);
    } else if (better(e, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), better);
      heap_.back() = e;
      std::push_heap(heap_.begin(), heap_.end(), better);
    }
  }

  std::size_t size() const noexcept { return heap_.size(); }

  // Best first. Leaves the container empty.
  std::vector<Entry> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end(), better);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Entry> heap_;
};

}  // namespace opng
