#include "evolvr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

#include "evolvr/digest.hpp"
#include "evolvr/errors.hpp"
#include "evolvr/parallel.hpp"
#include "evolvr/rng.hpp"

namespace evolvr {

namespace {

void validate_series(const PairedSeries& series) {
    if (series.xs.size() != series.ys.size()) {
        fail("metrics.length_mismatch",
             "series lengths differ: " + std::to_string(series.xs.size()) + " vs " +
                 std::to_string(series.ys.size()));
    }
    if (series.xs.size() < 2) {
        fail("metrics.length_mismatch", "correlation needs at least 2 observations");
    }
    for (double v : series.xs) {
        if (!std::isfinite(v)) fail("metrics.not_finite", "xs contains a non-finite value");
    }
    for (double v : series.ys) {
        if (!std::isfinite(v)) fail("metrics.not_finite", "ys contains a non-finite value");
    }
}

// Average ranks, ties sharing the mean of their would-be positions.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double pearson(const PairedSeries& series) {
    validate_series(series);
    const std::size_t n = series.xs.size();
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += series.xs[i];
        mean_y += series.ys[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = series.xs[i] - mean_x;
        const double dy = series.ys[i] - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        fail("metrics.zero_variance", "a constant series has no Pearson correlation");
    }
    return sxy / std::sqrt(sxx * syy);
}

double spearman(const PairedSeries& series) {
    validate_series(series);
    PairedSeries ranked{average_ranks(series.xs), average_ranks(series.ys)};
    return pearson(ranked);
}

double kendall(const PairedSeries& series) {
    validate_series(series);
    const std::size_t n = series.xs.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = series.xs[i] - series.xs[j];
            const double dy = series.ys[i] - series.ys[j];
            if (dx == 0.0 && dy == 0.0) continue;  // tied in both: excluded everywhere
            if (dx == 0.0) {
                ++ties_x;
            } else if (dy == 0.0) {
                ++ties_y;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double denom_x = static_cast<double>(concordant + discordant + ties_x);
    const double denom_y = static_cast<double>(concordant + discordant + ties_y);
    if (denom_x == 0.0 || denom_y == 0.0) {
        fail("metrics.zero_variance", "an all-tied series has no tau-b");
    }
    return static_cast<double>(concordant - discordant) / std::sqrt(denom_x * denom_y);
}

double mse_normalized(const std::vector<double>& pred, const std::vector<double>& gold) {
    if (pred.size() != gold.size()) {
        fail("metrics.length_mismatch", "pred and gold lengths differ");
    }
    if (pred.empty()) fail("metrics.length_mismatch", "mse of empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = (pred[i] - gold[i]) / 4.0;
        sum += d * d;
    }
    return sum / static_cast<double>(pred.size());
}

namespace {

void validate_classes(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (pred.size() != gold.size()) {
        fail("metrics.length_mismatch", "pred and gold lengths differ");
    }
    for (int v : pred) {
        if (!score_in_range(v)) {
            fail("metrics.out_of_range_score", "prediction " + std::to_string(v) + " outside 1..5");
        }
    }
    for (int v : gold) {
        if (!score_in_range(v)) {
            fail("metrics.out_of_range_score", "gold score " + std::to_string(v) + " outside 1..5");
        }
    }
}

struct ClassStats {
    long long tp = 0, fp = 0, fn = 0, support = 0;
    bool present = false;

    double f1() const {
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        if (precision + recall == 0.0) return 0.0;
        return 2.0 * precision * recall / (precision + recall);
    }
};

std::array<ClassStats, 5> per_class_stats(const std::vector<int>& pred,
                                          const std::vector<int>& gold) {
    validate_classes(pred, gold);
    std::array<ClassStats, 5> stats{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const int p = pred[i], g = gold[i];
        stats[g - 1].present = true;
        stats[g - 1].support += 1;
        stats[p - 1].present = true;
        if (p == g) {
            stats[g - 1].tp += 1;
        } else {
            stats[p - 1].fp += 1;
            stats[g - 1].fn += 1;
        }
    }
    return stats;
}

}  // namespace

double f1_macro(const std::vector<int>& pred, const std::vector<int>& gold) {
    const auto stats = per_class_stats(pred, gold);
    double sum = 0.0;
    int present = 0;
    for (const auto& s : stats) {
        if (!s.present) continue;
        sum += s.f1();
        ++present;
    }
    return present > 0 ? sum / present : 0.0;
}

double f1_weighted(const std::vector<int>& pred, const std::vector<int>& gold) {
    const auto stats = per_class_stats(pred, gold);
    double sum = 0.0;
    long long total = 0;
    for (const auto& s : stats) {
        sum += s.f1() * static_cast<double>(s.support);
        total += s.support;
    }
    return total > 0 ? sum / static_cast<double>(total) : 0.0;
}

std::array<std::array<long long, 5>, 5> confusion_matrix(const std::vector<int>& pred,
                                                         const std::vector<int>& gold) {
    validate_classes(pred, gold);
    std::array<std::array<long long, 5>, 5> counts{};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        counts[gold[i] - 1][pred[i] - 1] += 1;
    }
    return counts;
}

std::string confusion_to_csv(const std::array<std::array<long long, 5>, 5>& counts) {
    std::ostringstream out;
    out << "gold\\pred,1,2,3,4,5\n";
    for (int g = 0; g < 5; ++g) {
        out << (g + 1);
        for (int p = 0; p < 5; ++p) out << ',' << counts[g][p];
        out << '\n';
    }
    return out.str();
}

int round_score_half_up(double value) {
    const int rounded = static_cast<int>(round_half_up(value, 0));
    if (!score_in_range(rounded)) {
        fail("metrics.out_of_range_score",
             "prediction " + std::to_string(value) + " rounds outside 1..5");
    }
    return rounded;
}

ojson bundle_to_json(const MetricBundle& bundle) {
    ojson j;
    j["pearson"] = bundle.pearson;
    j["spearman"] = bundle.spearman;
    j["kendall"] = bundle.kendall;
    j["mse"] = bundle.mse;
    j["f1"] = bundle.f1;
    return j;
}

std::vector<Story> sample_partners(const std::vector<Story>& pool, const std::string& target_id,
                                   int n_pairs, std::uint64_t seed) {
    if (n_pairs < 1) fail("config.invalid", "n_pairs must be >= 1", ErrorKind::usage);
    std::vector<const Story*> eligible;
    eligible.reserve(pool.size());
    for (const auto& story : pool) {
        if (story.id != target_id) eligible.push_back(&story);
    }
    // Canonical order makes the draw independent of the caller's pool order.
    std::sort(eligible.begin(), eligible.end(),
              [](const Story* a, const Story* b) { return a->id < b->id; });
    if (eligible.size() < static_cast<std::size_t>(n_pairs)) {
        fail("metrics.insufficient_pool",
             "need " + std::to_string(n_pairs) + " distinct partners for story '" + target_id +
                 "' but only " + std::to_string(eligible.size()) + " are available");
    }
    Rng rng(mix_seed(seed, "ensemble", target_id));
    std::vector<Story> partners;
    partners.reserve(static_cast<std::size_t>(n_pairs));
    for (std::size_t index :
         rng.pick_distinct(eligible.size(), static_cast<std::size_t>(n_pairs))) {
        partners.push_back(*eligible[index]);
    }
    return partners;
}

EnsembleResult ensemble_evaluate(const std::vector<ScoredStory>& targets,
                                 const std::vector<Story>& pool, const AspectId& aspect,
                                 const PairJudge& judge, const EnsembleConfig& config,
                                 int parallelism) {
    if (targets.empty()) {
        fail("metrics.insufficient_pool", "no target stories to evaluate", ErrorKind::usage);
    }
    if (pool.size() < 2) {
        fail("metrics.insufficient_pool", "the partner pool needs more than one story",
             ErrorKind::usage);
    }

    EnsembleResult result;
    result.per_target.resize(targets.size());

    parallel_for(targets.size(), parallelism, [&](std::size_t index) {
        const ScoredStory& target = targets[index];
        TargetScores scores;
        scores.story_id = target.story.id;
        scores.gold = target.scores.at(aspect);
        const auto partners =
            sample_partners(pool, target.story.id, config.n_pairs, config.seed);
        for (const auto& partner : partners) {
            scores.ab.push_back(judge(target.story, partner, aspect).first);
            scores.ba.push_back(judge(partner, target.story, aspect).second);
        }
        result.per_target[index] = std::move(scores);
    });

    std::vector<int> pred_int;
    std::vector<double> pred, gold;
    if (config.aggregation == Aggregation::pooled) {
        for (const auto& target : result.per_target) {
            for (int s : target.ab) {
                pred_int.push_back(s);
                pred.push_back(s);
                gold.push_back(target.gold);
            }
            for (int s : target.ba) {
                pred_int.push_back(s);
                pred.push_back(s);
                gold.push_back(target.gold);
            }
        }
    } else {
        for (const auto& target : result.per_target) {
            double sum = 0.0;
            for (int s : target.ab) sum += s;
            for (int s : target.ba) sum += s;
            const double mean = sum / static_cast<double>(target.ab.size() + target.ba.size());
            pred_int.push_back(round_score_half_up(mean));
            pred.push_back(mean);
            gold.push_back(target.gold);
        }
    }

    std::vector<int> gold_int(gold.size());
    std::transform(gold.begin(), gold.end(), gold_int.begin(),
                   [](double v) { return static_cast<int>(v); });

    result.bundle.pearson = pearson({pred, gold});
    result.bundle.spearman = spearman({pred, gold});
    result.bundle.kendall = kendall({pred, gold});
    result.bundle.mse = mse_normalized(pred, gold);
    result.bundle.f1 = config.f1_variant == F1Variant::macro ? f1_macro(pred_int, gold_int)
                                                             : f1_weighted(pred_int, gold_int);
    result.confusion = confusion_matrix(pred_int, gold_int);
    return result;
}

double position_bias(const EnsembleResult& result) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& target : result.per_target) {
        for (std::size_t i = 0; i < target.ab.size() && i < target.ba.size(); ++i) {
            sum += static_cast<double>(target.ab[i] - target.ba[i]);
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
}

AgreementRow make_agreement_row(const AspectId& dimension, double pointwise_r, double pairwise_r) {
    AgreementRow row;
    row.dimension = dimension;
    row.pointwise_r = pointwise_r;
    row.pairwise_r = pairwise_r;
    row.diff = pairwise_r - pointwise_r;
    row.improvement_pct = pointwise_r != 0.0 ? 100.0 * row.diff / pointwise_r : 0.0;
    return row;
}

std::vector<AgreementRow> agreement_analysis(const std::vector<AnnotatorScores>& annotations,
                                             const AspectSet& aspects,
                                             std::uint64_t pair_sample_seed,
                                             std::size_t max_story_pairs) {
    if (annotations.size() < 2) {
        fail("agreement.insufficient", "agreement needs at least two annotators",
             ErrorKind::usage);
    }

    struct SharedPair {
        const AnnotatorScores* u;
        const AnnotatorScores* v;
        std::vector<std::string> stories;  // sorted shared story ids
    };
    std::vector<SharedPair> shared_pairs;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        for (std::size_t j = i + 1; j < annotations.size(); ++j) {
            SharedPair sp{&annotations[i], &annotations[j], {}};
            for (const auto& [story_id, _] : annotations[i].by_story) {
                if (annotations[j].by_story.count(story_id)) sp.stories.push_back(story_id);
            }
            if (sp.stories.size() >= 2) shared_pairs.push_back(std::move(sp));
        }
    }
    if (shared_pairs.empty()) {
        fail("agreement.insufficient",
             "no two annotators share two or more stories", ErrorKind::usage);
    }

    std::vector<AgreementRow> rows;
    for (const auto& aspect : aspects) {
        double pointwise_sum = 0.0, pairwise_sum = 0.0;
        int contributions = 0;
        for (const auto& sp : shared_pairs) {
            PairedSeries points;
            for (const auto& story_id : sp.stories) {
                points.xs.push_back(sp.u->by_story.at(story_id).at(aspect));
                points.ys.push_back(sp.v->by_story.at(story_id).at(aspect));
            }

            const std::size_t m = sp.stories.size();
            const std::size_t all_pairs = m * (m - 1) / 2;
            PairedSeries diffs;
            if (all_pairs <= max_story_pairs) {
                for (std::size_t s = 0; s < m; ++s) {
                    for (std::size_t t = s + 1; t < m; ++t) {
                        diffs.xs.push_back(points.xs[s] - points.xs[t]);
                        diffs.ys.push_back(points.ys[s] - points.ys[t]);
                    }
                }
            } else {
                Rng rng(mix_seed(pair_sample_seed, sp.u->annotator_id + "|" + sp.v->annotator_id,
                                 aspect));
                std::set<std::pair<std::size_t, std::size_t>> seen;
                while (seen.size() < max_story_pairs) {
                    std::size_t s = static_cast<std::size_t>(rng.bounded(m));
                    std::size_t t = static_cast<std::size_t>(rng.bounded(m));
                    if (s == t) continue;
                    if (s > t) std::swap(s, t);
                    if (!seen.insert({s, t}).second) continue;
                    diffs.xs.push_back(points.xs[s] - points.xs[t]);
                    diffs.ys.push_back(points.ys[s] - points.ys[t]);
                }
            }

            try {
                const double pointwise = pearson(points);
                const double pairwise = pearson(diffs);
                pointwise_sum += pointwise;
                pairwise_sum += pairwise;
                ++contributions;
            } catch (const Error& e) {
                if (e.code() != "metrics.zero_variance" && e.code() != "metrics.length_mismatch")
                    throw;
                // Constant scores or too few shared stories: this annotator
                // pair contributes no signal on this aspect.
            }
        }
        if (contributions == 0) {
            fail("agreement.insufficient",
                 "no annotator pair has score variance on aspect '" + aspect + "'",
                 ErrorKind::usage);
        }
        rows.push_back(make_agreement_row(aspect, pointwise_sum / contributions,
                                          pairwise_sum / contributions));
    }
    return rows;
}

ojson agreement_to_json(const std::vector<AgreementRow>& rows) {
    ojson out = ojson::array();
    for (const auto& row : rows) {
        out.push_back(ojson{{"dimension", row.dimension},
                            {"pointwise_r", row.pointwise_r},
                            {"pairwise_r", row.pairwise_r},
                            {"diff", row.diff},
                            {"improvement_pct", row.improvement_pct}});
    }
    return out;
}

std::string agreement_to_markdown(const std::vector<AgreementRow>& rows) {
    std::ostringstream out;
    out << "| Dimension | Pointwise | Pairwise | Diff | Improvement |\n";
    out << "| --- | --- | --- | --- | --- |\n";
    char cell[64];
    for (const auto& row : rows) {
        out << "| " << row.dimension << " | ";
        std::snprintf(cell, sizeof(cell), "%.3f", row.pointwise_r);
        out << cell << " | ";
        std::snprintf(cell, sizeof(cell), "%.3f", row.pairwise_r);
        out << cell << " | ";
        std::snprintf(cell, sizeof(cell), "%+.3f", row.diff);
        out << cell << " | ";
        std::snprintf(cell, sizeof(cell), "%+.1f%%", row.improvement_pct);
        out << cell << " |\n";
    }
    return out.str();
}

}  // namespace evolvr
