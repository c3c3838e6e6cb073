#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <queue>
#include <string>
#include <vector>

namespace ttr {

struct RetrievalHit {
  std::string doc_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const RetrievalHit&) const = default;
};

/// Result ordering: higher score first, ties by ascending doc id.
inline bool ranks_before(double score_a, const std::string& id_a, double score_b,
                         const std::string& id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

/// Bounded selection of the best `k` candidates, identified by ordinal.
/// `id_of(ordinal)` supplies the tie-break key.
template <typename IdOf>
class TopK {
 public:
  TopK(std::size_t k, IdOf id_of) : k_(k), id_of_(std::move(id_of)), heap_(Worse{this}) {}
  TopK(const TopK&) = delete;
  TopK& operator=(const TopK&) = delete;

  void offer(double score, std::size_t ordinal) {
    if (heap_.size() < k_) {
      heap_.push({score, ordinal});
      return;
    }
    const auto& worst = heap_.top();
    if (ranks_before(score, id_of_(ordinal), worst.score, id_of_(worst.ordinal))) {
      heap_.pop();
      heap_.push({score, ordinal});
    }
  }

  /// Drains the selection into rank order.
  std::vector<RetrievalHit> take() {
    std::vector<RetrievalHit> out(heap_.size());
    for (std::size_t i = out.size(); i-- > 0;) {
      const auto e = heap_.top();
      heap_.pop();
      out[i] = RetrievalHit{id_of_(e.ordinal), e.score, i + 1};
    }
    return out;
  }

 private:
  struct Entry {
    double score;
    std::size_t ordinal;
  };
  // Max-heap on "ranks after", so top() is the current worst entry.
  struct Worse {
    const TopK* self;
    bool operator()(const Entry& a, const Entry& b) const {
      return ranks_before(a.score, self->id_of_(a.ordinal), b.score, self->id_of_(b.ordinal));
    }
  };

  std::size_t k_;
  IdOf id_of_;
  std::priority_queue<Entry, std::vector<Entry>, Worse> heap_;
};

}  // namespace ttr
