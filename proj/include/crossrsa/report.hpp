#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "crossrsa/cross_species.hpp"
#include "crossrsa/results_io.hpp"

namespace crossrsa {

/// A small typed table written as CSV or JSON lines.
struct Table {
  using Cell = std::variant<std::string, double, long long>;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  std::string to_csv() const;
  std::string to_jsonl() const;  // one object per row, keys in header order
};

enum class TableFormat { csv, jsonl };
TableFormat parse_table_format(std::string_view text);
void write_table(const Table& table, const std::filesystem::path& path, TableFormat format = TableFormat::csv);

Table ranking_table(const std::vector<RankingComparison>& comparisons);
Table interaction_table(const std::vector<InteractionCell>& cells);
/// Delta rho (max - min across rules) per species label and region.
Table invariance_table(const std::vector<std::pair<std::string, RegionRhos>>& by_label);
Table aggregate_table(const std::vector<SeedAggregate>& aggregates);

/// Every region present on both sides, in hierarchy order.
std::vector<RankingComparison> compare_regions(const RegionRhos& a, const RegionRhos& b, const std::string& label_a,
                                               const std::string& label_b);

struct ReportOptions {
  std::string human_species = "human";
  std::string macaque_species = "macaque";
  std::string human_set;    // empty: any stimulus set
  std::string macaque_set;
  std::string control_set_a;  // stimulus-control sets; figure 6 is empty when unset
  std::string control_set_b;
};

/// Writes fig1_hierarchy, fig2_species_scatter, fig3_ranking, fig4_invariance,
/// fig5_interaction and fig6_stimulus_control as .csv and .svg into `out_dir`
/// and returns the file names written. Output depends only on the inputs.
std::vector<std::string> write_report(const std::vector<RsaResult>& results, const std::vector<CeilingRecord>& ceilings,
                                      const ReportOptions& options, const std::filesystem::path& out_dir);

}  // namespace crossrsa
