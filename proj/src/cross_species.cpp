#include "crossrsa/cross_species.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "crossrsa/error.hpp"

namespace crossrsa {

void RsaResult::validate() const {
  if (!std::isfinite(rho) || rho < -1.0 || rho > 1.0) {
    throw DataError("RsaResult: rho must lie in [-1, 1] (" + condition + " " + region + ")");
  }
  if (condition.empty() || region.empty() || species.empty()) {
    throw DataError("RsaResult: condition, region and species are required");
  }
  if (ci && ci->lower > ci->upper) throw DataError("RsaResult: CI lower bound exceeds upper bound");
}

namespace {

RankingComparison compare(const RuleRhos& a, const RuleRhos& b, const std::string& region, const std::string& label_a,
                          const std::string& label_b) {
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(),
                                          [](const auto& x, const auto& y) { return x.first == y.first; })) {
    std::string names_a, names_b;
    for (const auto& [r, v] : a) names_a += std::string(names_a.empty() ? "" : ",") + std::string(to_string(r));
    for (const auto& [r, v] : b) names_b += std::string(names_b.empty() ? "" : ",") + std::string(to_string(r));
    throw ConfigError(region + ": rule labels differ between " + label_a + " (" + names_a + ") and " + label_b +
                      " (" + names_b + ")");
  }
  RankingComparison rc;
  rc.region = region;
  rc.label_a = label_a;
  rc.label_b = label_b;
  for (const auto& [rule, v] : a) {
    rc.rules.push_back(rule);
    rc.rho_a.push_back(v);
    rc.rho_b.push_back(b.at(rule));
  }
  const auto test = exact_permutation_test(rc.rho_a, rc.rho_b);
  rc.tau = test.tau;
  rc.p_one_sided = test.p_one_sided;
  rc.p_two_sided = test.p_two_sided;
  rc.n_permutations = test.n_permutations;
  return rc;
}

}  // namespace

RankingComparison ranking_comparison(const RuleRhos& a, const RuleRhos& b, const std::string& region,
                                     const std::string& label_a, const std::string& label_b) {
  return compare(a, b, region, label_a, label_b);
}

RankingComparison stimulus_control(const RuleRhos& set_a, const RuleRhos& set_b, const std::string& region,
                                   const std::string& label_a, const std::string& label_b) {
  return compare(set_a, set_b, region, label_a, label_b);
}

double v1_invariance(const RuleRhos& rhos) {
  if (rhos.empty()) throw ConfigError("v1_invariance: no rho values");
  const auto [lo, hi] = std::minmax_element(rhos.begin(), rhos.end(),
                                            [](const auto& x, const auto& y) { return x.second < y.second; });
  return hi->second - lo->second;
}

std::vector<InteractionCell> interaction_effects(const RegionRhos& human, const RegionRhos& macaque) {
  std::vector<std::string> regions;
  for (const auto& [region, rhos] : human) {
    if (macaque.count(region)) regions.push_back(region);
  }
  std::vector<InteractionCell> cells;
  for (const auto& region : ordered_regions(regions)) {
    const auto& h = human.at(region);
    const auto& m = macaque.at(region);
    const auto hr = h.find(LearningRule::random);
    const auto mr = m.find(LearningRule::random);
    if (hr == h.end() || mr == m.end()) {
      throw ConfigError(region + ": interaction effects need a Random baseline for both species");
    }
    for (const auto& [rule, rho_h] : h) {
      const auto it = m.find(rule);
      if (it == m.end()) continue;
      InteractionCell c;
      c.rule = rule;
      c.region = region;
      c.delta_human = rho_h - hr->second;
      c.delta_macaque = it->second - mr->second;
      c.interaction = c.delta_human - c.delta_macaque;
      cells.push_back(c);
    }
  }
  return cells;
}

namespace {

bool is_conv_layer(const std::string& layer) { return layer.rfind("Conv", 0) == 0; }

auto group_key(const RsaResult& r) {
  return std::tie(r.species, r.stimulus_set, r.condition, r.region, r.layer);
}

}  // namespace

SeedAggregate aggregate_seeds(const std::vector<RsaResult>& results) {
  if (results.empty()) throw DataError("aggregate_seeds: no results");
  const auto& first = results.front();
  SeedAggregate agg;
  agg.condition = first.condition;
  agg.species = first.species;
  agg.stimulus_set = first.stimulus_set;
  agg.region = first.region;
  agg.layer = first.layer;

  std::vector<const RsaResult*> used;
  for (const auto& r : results) {
    if (group_key(r) != group_key(first)) {
      throw ConfigError("aggregate_seeds: results mix conditions, regions, layers, species or stimulus sets");
    }
    if (!r.has_fc1 && !is_conv_layer(r.layer)) {
      agg.seeds_excluded.push_back(r.seed);
    } else {
      used.push_back(&r);
    }
  }
  if (used.empty()) {
    throw DataError("aggregate_seeds: no admissible seeds for " + agg.condition + " at " + agg.region);
  }
  std::sort(used.begin(), used.end(), [](const auto* x, const auto* y) { return x->seed < y->seed; });
  for (std::size_t i = 1; i < used.size(); ++i) {
    if (used[i]->seed == used[i - 1]->seed) {
      throw DataError("aggregate_seeds: seed " + std::to_string(used[i]->seed) + " appears twice for " +
                      agg.condition + " at " + agg.region);
    }
  }
  std::vector<double> rhos;
  agg.has_ci = true;
  for (const auto* r : used) {
    agg.seeds_used.push_back(r->seed);
    rhos.push_back(r->rho);
    if (!r->ci) agg.has_ci = false;
  }
  std::sort(agg.seeds_excluded.begin(), agg.seeds_excluded.end());
  agg.mean_rho = mean(rhos);
  agg.std_rho = population_std(rhos);
  if (agg.has_ci) {
    for (const auto* r : used) {
      agg.mean_ci_lower += r->ci->lower;
      agg.mean_ci_upper += r->ci->upper;
    }
    agg.mean_ci_lower /= static_cast<double>(used.size());
    agg.mean_ci_upper /= static_cast<double>(used.size());
  }
  return agg;
}

int region_rank(const std::string& region) {
  static const char* const order[] = {"V1", "V2", "V4", "LOC", "IT"};
  for (int i = 0; i < 5; ++i) {
    if (region == order[i]) return i;
  }
  return 5;
}

std::vector<std::string> ordered_regions(std::vector<std::string> regions) {
  std::sort(regions.begin(), regions.end(), [](const std::string& a, const std::string& b) {
    return std::make_pair(region_rank(a), a) < std::make_pair(region_rank(b), b);
  });
  regions.erase(std::unique(regions.begin(), regions.end()), regions.end());
  return regions;
}

namespace {

// Rules first in canonical order, then external model labels alphabetically.
std::pair<int, std::string> condition_rank(const std::string& condition) {
  try {
    return {static_cast<int>(parse_learning_rule(condition)), ""};
  } catch (const Error&) {
    return {100, condition};
  }
}

}  // namespace

std::vector<SeedAggregate> aggregate_all(const std::vector<RsaResult>& results) {
  std::map<std::tuple<std::string, std::string, std::string, std::string, std::string>, std::vector<RsaResult>> groups;
  for (const auto& r : results) {
    groups[{r.species, r.stimulus_set, r.condition, r.region, r.layer}].push_back(r);
  }
  std::vector<SeedAggregate> out;
  for (const auto& [key, group] : groups) out.push_back(aggregate_seeds(group));
  std::sort(out.begin(), out.end(), [](const SeedAggregate& a, const SeedAggregate& b) {
    return std::make_tuple(a.species, a.stimulus_set, region_rank(a.region), a.region, condition_rank(a.condition),
                           a.layer) < std::make_tuple(b.species, b.stimulus_set, region_rank(b.region), b.region,
                                                      condition_rank(b.condition), b.layer);
  });
  return out;
}

RegionRhos region_rhos(const std::vector<SeedAggregate>& aggregates, const std::string& species,
                       const std::string& stimulus_set) {
  RegionRhos out;
  for (const auto& a : aggregates) {
    if ((!species.empty() && a.species != species) || (!stimulus_set.empty() && a.stimulus_set != stimulus_set)) continue;
    LearningRule rule;
    try {
      rule = parse_learning_rule(a.condition);
    } catch (const Error&) {
      continue;
    }
    if (!out[a.region].emplace(rule, a.mean_rho).second) {
      throw DataError(a.species + " " + a.region + ": " + a.condition +
                      " is scored more than once (several layers or stimulus sets); filter the results first");
    }
  }
  return out;
}

}  // namespace crossrsa
