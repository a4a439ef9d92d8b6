#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crossrsa/network.hpp"
#include "crossrsa/resample.hpp"
#include "crossrsa/stats.hpp"

namespace crossrsa {

/// One model-vs-brain score. `provenance` is "computed" for scores produced
/// by the pipeline and anything else (e.g. "imported") for literal values.
struct RsaResult {
  double rho = 0.0;
  std::optional<BootstrapCI> ci;
  std::string condition;  // rule label or external model label
  long long seed = 0;
  std::string layer;
  std::string region;
  std::string species;
  std::string stimulus_set;
  std::string provenance = "computed";
  bool has_fc1 = true;

  void validate() const;
  bool operator==(const RsaResult&) const = default;
};

/// rho per learning rule, ordered BP, FA, PC, STDP, Random.
using RuleRhos = std::map<LearningRule, double>;
/// RuleRhos per region.
using RegionRhos = std::map<std::string, RuleRhos>;

struct RankingComparison {
  std::string region;
  std::string label_a;  // species or stimulus-set label of rho_a
  std::string label_b;
  std::vector<LearningRule> rules;
  std::vector<double> rho_a;
  std::vector<double> rho_b;
  double tau = 0.0;
  double p_one_sided = 1.0;
  double p_two_sided = 1.0;
  std::size_t n_permutations = 0;
};

/// Kendall tau-b and exact permutation p-values between two rule-aligned
/// rho vectors. Both sides must name the same rules.
RankingComparison ranking_comparison(const RuleRhos& a, const RuleRhos& b, const std::string& region,
                                     const std::string& label_a = "human", const std::string& label_b = "macaque");

/// Same test across stimulus sets within one region.
RankingComparison stimulus_control(const RuleRhos& set_a, const RuleRhos& set_b, const std::string& region,
                                   const std::string& label_a, const std::string& label_b);

/// max(rho) - min(rho) across rules.
double v1_invariance(const RuleRhos& rhos);

struct InteractionCell {
  LearningRule rule = LearningRule::bp;
  std::string region;
  double delta_human = 0.0;    // rho_rule - rho_Random, human
  double delta_macaque = 0.0;  // rho_rule - rho_Random, macaque
  double interaction = 0.0;    // delta_human - delta_macaque
};

/// Cells for every rule present on both sides (Random included, always 0) in
/// every region present on both sides. Regions follow region_rank order.
std::vector<InteractionCell> interaction_effects(const RegionRhos& human, const RegionRhos& macaque);

struct SeedAggregate {
  std::string condition;
  std::string species;
  std::string stimulus_set;
  std::string region;
  std::string layer;
  double mean_rho = 0.0;
  double std_rho = 0.0;  // population std
  double mean_ci_lower = 0.0;
  double mean_ci_upper = 0.0;
  bool has_ci = false;
  std::vector<long long> seeds_used;      // ascending
  std::vector<long long> seeds_excluded;  // no FC1 weights behind an FC-layer score
};

/// Mean and population std over admissible seeds. Results must share
/// condition, species, stimulus set, region and layer. A result whose
/// checkpoint has no FC1 weights is excluded when its layer is not a conv layer.
SeedAggregate aggregate_seeds(const std::vector<RsaResult>& results);

/// Groups by (species, stimulus set, condition, region, layer) and aggregates
/// each group. Output is sorted by species, stimulus set, region rank, rule.
std::vector<SeedAggregate> aggregate_all(const std::vector<RsaResult>& results);

/// Seed means per region and rule, filtered by species and stimulus set
/// (an empty filter matches everything). Non-rule conditions are ignored; a rule scored at two layers
/// of the same region is an error.
RegionRhos region_rhos(const std::vector<SeedAggregate>& aggregates, const std::string& species,
                       const std::string& stimulus_set = "");

/// Position in the ventral hierarchy: V1, V2, V4, LOC, IT, then unknown regions.
int region_rank(const std::string& region);
/// Regions sorted by region_rank then name.
std::vector<std::string> ordered_regions(std::vector<std::string> regions);

}  // namespace crossrsa
