#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dspn/feature_matrix.hpp"
#include "dspn/features.hpp"
#include "dspn/metrics.hpp"

namespace dspn::sel {

// Dense symmetric matrix, row-major.
struct CorrelationMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// Pearson correlation between columns. Columns with zero variance correlate
// 0 with everything else; the diagonal is always 1.
CorrelationMatrix correlation_matrix(const FeatureMatrix& m);
CorrelationMatrix correlation_matrix_serial(const FeatureMatrix& m);

struct PrunedColumn {
  std::string name;
  std::string partner;  // the kept column it correlated with

  bool operator==(const PrunedColumn&) const = default;
};

struct PruneResult {
  FeatureMatrix kept;
  std::vector<PrunedColumn> pruned;
};

// Greedy scan over pairs (i < j) in column order: a kept column i prunes any
// later, still-kept column j with |r_ij| >= threshold.
PruneResult prune_correlated(const FeatureMatrix& m, double threshold = 0.9);

struct RankedFeatureList {
  std::vector<std::string> order;  // best first
  std::map<std::string, double> weights;
  std::vector<PrunedColumn> pruned;

  bool operator==(const RankedFeatureList&) const = default;
};

struct ReliefConfig {
  std::size_t k_neighbors = 10;
};

// Exhaustive multiclass ReliefF (every row is an instance). Manhattan
// distance on min-max scaled features; misses weighted by P(class) /
// (1 - P(class of the instance)). Neighbour ties go to the smaller row key.
RankedFeatureList relieff_rank(const FeatureMatrix& m, const ReliefConfig& cfg = {});
RankedFeatureList relieff_rank_serial(const FeatureMatrix& m, const ReliefConfig& cfg = {});

// CSV columns rank,name,weight,pruned_partner. Pruned columns follow the
// ranked ones with an empty rank and weight.
void write_ranking_csv(const RankedFeatureList& r, const std::filesystem::path& path);
RankedFeatureList read_ranking_csv(const std::filesystem::path& path);

struct StudyConfig {
  std::string scheme;
  feat::FeatureConfig features;
  feat::Aggregation aggregation = feat::Aggregation::Mean;
  double prune_threshold = 0.9;
  ReliefConfig relief;
};

struct ChannelStudy {
  std::vector<ChannelKind> combo;
  feat::ExtractReport extraction;  // pre-pruning matrix
  FeatureMatrix pruned;            // columns kept by correlation pruning
  RankedFeatureList ranking;
};

// Extract -> prune -> rank for one channel combination. All channels must
// belong to `family`.
ChannelStudy assemble_channel_study(const Dataset& d, ChannelFamily family, std::span<const ChannelKind> combo,
                                    const StudyConfig& cfg, const feat::ProcessedSignals& signals,
                                    const seg::SegmentTable& segments);

// The 7 nonempty subsets of a family's three channels, singles first.
std::vector<std::vector<ChannelKind>> channel_combinations(ChannelFamily family);

using SubsetEvaluator = std::function<MetricsReport(const FeatureMatrix&)>;

struct SearchEntry {
  std::size_t k = 0;
  std::vector<std::string> features;
  MetricsReport metrics;
};

struct SearchReport {
  std::vector<SearchEntry> entries;  // K = 1, 2, ...
  std::size_t best_k = 0;

  // Entry whose k equals best_k.
  const SearchEntry& best() const;
};

// Evaluates the top-K ranked columns for K = 1..min(max_k, |order|). Best K
// maximises mean accuracy; ties go to the smaller K. The evaluator must be
// safe to call concurrently.
SearchReport incremental_search(const FeatureMatrix& m, const RankedFeatureList& ranked,
                                const SubsetEvaluator& evaluate, std::optional<std::size_t> max_k = std::nullopt);

}  // namespace dspn::sel
