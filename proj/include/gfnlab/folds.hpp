#pragma once

#include "gfnlab/graph.hpp"

#include <cstdint>
#include <vector>

namespace gfnlab {

struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> assignments;  // per graph, in [0, k)

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

/// Stratified k-fold assignment. Each class is shuffled with a seeded RNG and
/// dealt round-robin into folds, continuing the deal across classes, so both
/// per-fold class counts and fold sizes differ by at most one. Classes smaller
/// than k produce a warning and are dealt the same way.
FoldPlan stratified_kfold(std::span<const int> labels, int num_classes, int k, std::uint64_t seed);
FoldPlan stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed);

}  // namespace gfnlab
