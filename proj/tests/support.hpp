#pragma once

#include <map>
#include <utility>

#include "fixedk/weight_search.hpp"

namespace fixedk::testing {

// A quickly searched table on a coarse grid; good enough to exercise the
// machinery, not for coverage claims.
inline const WeightTable& small_table(std::size_t k = 5, double h = 1.0) {
  static std::map<std::pair<std::size_t, double>, WeightTable> cache;
  auto it = cache.find({k, h});
  if (it != cache.end()) return it->second;
  WeightSearchConfig cfg;
  cfg.xi_active = uniform_grid(kXiMin, kXiMax, 12);
  cfg.xi_proposal = uniform_grid(kXiMin, kXiMax, 6);
  cfg.draws = 3000;
  cfg.iterations = 100;
  cfg.verify_draws = 0;
  cfg.seed = 11;
  return cache.emplace(std::make_pair(k, h), compute_weights(k, h, 0.05, cfg).table).first->second;
}

}  // namespace fixedk::testing
