#include "gfnlab/folds.hpp"

#include "gfnlab/errors.hpp"

#include <algorithm>
#include <random>

namespace gfnlab {

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) out.push_back(i);
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) out.push_back(i);
  return out;
}

FoldPlan stratified_kfold(std::span<const int> labels, int num_classes, int k, std::uint64_t seed) {
  require(k >= 2, "stratified_kfold: k must be >= 2");
  require(labels.size() >= static_cast<std::size_t>(k), "stratified_kfold: fewer graphs than folds");

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, "stratified_kfold: label out of range");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), -1);
  std::mt19937_64 rng(seed);
  std::size_t deal = 0;
  for (int c = 0; c < num_classes; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    if (!members.empty() && members.size() < static_cast<std::size_t>(k))
      warn("stratified_kfold: class " + std::to_string(c) + " has " + std::to_string(members.size()) +
           " members, fewer than k=" + std::to_string(k) + "; stratification is best-effort");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t idx : members) plan.assignments[idx] = static_cast<int>(deal++ % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan stratified_kfold(const Dataset& dataset, int k, std::uint64_t seed) {
  const auto labels = dataset.labels();
  return stratified_kfold(labels, dataset.num_classes, k, seed);
}

}  // namespace gfnlab
