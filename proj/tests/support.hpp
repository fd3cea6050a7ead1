#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "wspd/config.hpp"

namespace wspd::test {

// Frozen output of tests/oracle/oracle.py.
inline const nlohmann::json& reference() {
  static const nlohmann::json doc = [] {
    std::ifstream in(WSPD_TEST_REFERENCE);
    return nlohmann::json::parse(in);
  }();
  return doc;
}

inline double ref(const std::string& group, const std::string& key) { return reference().at(group).at(key).get<double>(); }

inline std::string config_path(const std::string& name) { return std::string(WSPD_CONFIG_DIR) + "/" + name; }

inline ProjectConfig paper_config() { return load_config(config_path("paper.json")); }

// Minimal property-test driver: calls `body(rng, case_index)` for `cases`
// draws from a fixed-seed generator so failures are replayable.
template <class Body>
void for_all(int cases, std::uint64_t seed, Body&& body) {
  std::mt19937_64 rng(seed);
  for (int i = 0; i < cases; ++i) body(rng, i);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// A cheap, wire-free variant of the paper cross-section for solver tests.
inline ResolutionPolicy coarse_policy() {
  ResolutionPolicy p;
  p.base_m = 40e-9;
  p.band_m = 0.0;
  p.far_m = 120e-9;
  return p;
}

}  // namespace wspd::test
