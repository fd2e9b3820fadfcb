#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evolvr/core.hpp"
#include "evolvr/jsonl.hpp"

namespace evolvr {

// Equal-length prediction/gold series for the correlation family.
struct PairedSeries {
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Sample Pearson correlation.  Throws metrics.zero_variance when either
/// series is constant.
double pearson(const PairedSeries& series);

/// Pearson correlation of average ranks (ties share the mean rank).
double spearman(const PairedSeries& series);

/// Kendall tau-b with tie correction, O(n^2) pair enumeration:
///   (C - D) / sqrt((C + D + Tx) (C + D + Ty)).
double kendall(const PairedSeries& series);

/// Mean of ((pred - gold)/4)^2, i.e. MSE after min-max normalizing the 1..5
/// scale onto [0,1].
double mse_normalized(const std::vector<double>& pred, const std::vector<double>& gold);

/// Unweighted mean of per-class F1 over the classes present in pred or gold;
/// a class with zero precision and recall contributes 0.
double f1_macro(const std::vector<int>& pred, const std::vector<int>& gold);

/// Support-weighted variant (weights = gold class counts).
double f1_weighted(const std::vector<int>& pred, const std::vector<int>& gold);

/// counts[g-1][p-1] = instances with gold g and prediction p.
std::array<std::array<long long, 5>, 5> confusion_matrix(const std::vector<int>& pred,
                                                         const std::vector<int>& gold);

std::string confusion_to_csv(const std::array<std::array<long long, 5>, 5>& counts);

/// Half-up rounding of a fractional prediction onto the integer grid; errors
/// if the result leaves 1..5.
int round_score_half_up(double value);

enum class F1Variant { macro, weighted };
enum class Aggregation { pooled, per_story_mean };

struct MetricBundle {
    double pearson = 0.0;
    double spearman = 0.0;
    double kendall = 0.0;
    double mse = 0.0;
    double f1 = 0.0;
};

ojson bundle_to_json(const MetricBundle& bundle);

struct EnsembleConfig {
    int n_pairs = 4;  // N: partners per target; each judged in both orders
    std::uint64_t seed = 0;
    Aggregation aggregation = Aggregation::pooled;
    F1Variant f1_variant = F1Variant::macro;
};

// Pairwise scoring function: scores (story_a, story_b) on an aspect and
// returns (score_a, score_b) for the order as passed.
using PairJudge = std::function<std::pair<int, int>(const Story&, const Story&, const AspectId&)>;

// Canonical partner draw for one target: the pool is sorted by story id, the
// target excluded, and n partners picked from a stream seeded by (seed,
// target id).  Shared by the ensemble protocol and the harness so both sample
// identically.
std::vector<Story> sample_partners(const std::vector<Story>& pool, const std::string& target_id,
                                   int n_pairs, std::uint64_t seed);

struct TargetScores {
    std::string story_id;
    int gold = 0;
    std::vector<int> ab;  // target in position A, one per partner
    std::vector<int> ba;  // target in position B, same partner order
};

struct EnsembleResult {
    std::vector<TargetScores> per_target;
    MetricBundle bundle;
    std::array<std::array<long long, 5>, 5> confusion{};
};

// 2N scores per target: each sampled partner is judged in both presentation
// orders and the target-side score kept from each.  Aggregation pooled
// correlates every raw score against its target's gold; per_story_mean
// correlates per-target means.
EnsembleResult ensemble_evaluate(const std::vector<ScoredStory>& targets,
                                 const std::vector<Story>& pool, const AspectId& aspect,
                                 const PairJudge& judge, const EnsembleConfig& config,
                                 int parallelism = 1);

// Mean over targets and partners of (ab-leg score - ba-leg score); zero for an
// order-blind judge, nonzero when presentation order leaks into scores.
double position_bias(const EnsembleResult& result);

struct AnnotatorScores {
    std::string annotator_id;
    std::map<std::string, ScoreVector> by_story;
};

struct AgreementRow {
    AspectId dimension;
    double pointwise_r = 0.0;
    double pairwise_r = 0.0;
    double diff = 0.0;             // pairwise_r - pointwise_r
    double improvement_pct = 0.0;  // 100 * diff / pointwise_r
};

// Pointwise column: mean over annotator pairs of Pearson on shared-story
// scores.  Pairwise column: the same mean, but correlating score DIFFERENCES
// over story pairs (all pairs up to max_story_pairs, a seeded sample beyond).
std::vector<AgreementRow> agreement_analysis(const std::vector<AnnotatorScores>& annotations,
                                             const AspectSet& aspects,
                                             std::uint64_t pair_sample_seed,
                                             std::size_t max_story_pairs = 10000);

AgreementRow make_agreement_row(const AspectId& dimension, double pointwise_r, double pairwise_r);

ojson agreement_to_json(const std::vector<AgreementRow>& rows);
std::string agreement_to_markdown(const std::vector<AgreementRow>& rows);

}  // namespace evolvr
