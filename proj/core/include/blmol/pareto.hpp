#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "blmol/objective.hpp"

namespace blmol {

/// True iff a is no worse than b everywhere and strictly better somewhere.
bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Fast non-dominated sort. Front 0 is the non-dominated set; fronts
/// partition the input indices. Empty input gives an empty result.
std::vector<std::vector<std::size_t>> non_dominated_sort(
    const std::vector<ObjectiveVector>& points);

/// NSGA-II crowding distance over a mutually non-dominated front.
/// Boundary points per objective get +infinity; fronts of size <= 2 are all
/// +infinity. Points with identical objective vectors receive identical
/// distances.
std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front);

/// Exact hypervolume dominated by `front` relative to `ref`, minimization.
/// Supports 2 and 3 objectives; points not strictly better than ref in every
/// coordinate contribute nothing.
double hypervolume(const std::vector<ObjectiveVector>& front, const ObjectiveVector& ref);

/// Archive of mutually non-dominated (payload, objectives) pairs. Inserting
/// a dominated candidate is a no-op; inserting a dominating one evicts the
/// members it dominates. With a capacity, the most crowded member is dropped
/// first.
template <typename Payload>
class ParetoArchive {
 public:
  struct Member {
    Payload payload;
    ObjectiveVector objectives;
  };

  ParetoArchive() = default;
  explicit ParetoArchive(std::size_t capacity) : capacity_(capacity) {}

  bool insert(Payload payload, ObjectiveVector objectives) {
    for (const Member& m : members_) {
      if (dominates(m.objectives, objectives)) return false;
    }
    std::vector<Member> kept;
    kept.reserve(members_.size() + 1);
    for (Member& m : members_) {
      if (!dominates(objectives, m.objectives)) kept.push_back(std::move(m));
    }
    kept.push_back(Member{std::move(payload), std::move(objectives)});
    members_ = std::move(kept);
    if (capacity_ && members_.size() > *capacity_) prune();
    return true;
  }

  const std::vector<Member>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }

 private:
  void prune() {
    std::vector<ObjectiveVector> objs;
    objs.reserve(members_.size());
    for (const Member& m : members_) objs.push_back(m.objectives);
    const std::vector<double> crowd = crowding_distance(objs);
    std::size_t worst = 0;
    for (std::size_t i = 1; i < crowd.size(); ++i) {
      if (crowd[i] < crowd[worst]) worst = i;
    }
    members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(worst));
  }

  std::vector<Member> members_;
  std::optional<std::size_t> capacity_;
};

}  // namespace blmol
