#include "evolvr/reward.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "evolvr/errors.hpp"

namespace evolvr {

void RewardConfig::validate() const {
    for (double w : {w1, w2, w3}) {
        if (!std::isfinite(w)) fail("config.invalid", "reward weights must be finite", ErrorKind::usage);
    }
    if (alpha.empty()) fail("config.invalid", "alpha weights are empty", ErrorKind::usage);
    double sum = 0.0;
    for (const auto& [aspect, weight] : alpha) {
        if (!std::isfinite(weight) || weight < 0.0) {
            fail("config.invalid", "alpha weight for '" + aspect + "' must be >= 0",
                 ErrorKind::usage);
        }
        sum += weight;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        fail("config.invalid", "alpha weights must sum to 1 (got " + std::to_string(sum) + ")",
             ErrorKind::usage);
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        fail("config.invalid", "lambda must be a positive real", ErrorKind::usage);
    }
    if (len_min <= 0 || len_max <= 0 || len_min >= len_max) {
        fail("config.invalid", "length band needs 0 < len_min < len_max", ErrorKind::usage);
    }
    if (len_ramp <= 0) fail("config.invalid", "len_ramp must be positive", ErrorKind::usage);
}

RewardConfig RewardConfig::defaults_for(const AspectSet& aspects) {
    RewardConfig config;
    if (!aspects.empty()) {
        const double uniform = 1.0 / static_cast<double>(aspects.size());
        for (const auto& aspect : aspects) config.alpha[aspect] = uniform;
    }
    return config;
}

double length_reward(int len, const RewardConfig& config) {
    if (len >= config.len_min && len <= config.len_max) return 1.0;
    const int distance = len < config.len_min ? config.len_min - len : len - config.len_max;
    const double shaped = 1.0 - static_cast<double>(distance) / config.len_ramp;
    return std::max(0.0, shaped);
}

double composite_reward(const ScoreVector& candidate, const ScoreVector& reference,
                        int candidate_len, const RewardConfig& config) {
    config.validate();
    if (!candidate.same_aspects(reference)) {
        fail("reward.aspect_mismatch", "candidate and reference cover different aspect sets",
             ErrorKind::usage);
    }
    if (candidate.values.size() != config.alpha.size()) {
        fail("reward.aspect_mismatch", "alpha weights cover a different aspect set than the scores",
             ErrorKind::usage);
    }

    double advantage_term = 0.0;
    double absolute_term = 0.0;
    for (const auto& [aspect, weight] : config.alpha) {
        auto cand_it = candidate.values.find(aspect);
        if (cand_it == candidate.values.end()) {
            fail("reward.aspect_mismatch", "scores are missing aspect '" + aspect + "'",
                 ErrorKind::usage);
        }
        const double y = cand_it->second;
        advantage_term += weight * (y - reference.at(aspect));
        absolute_term += weight * y;
    }
    return config.w1 * advantage_term + config.w2 * absolute_term +
           config.w3 * length_reward(candidate_len, config);
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.empty()) {
        fail("reward.empty_group", "advantages of an empty reward group");
    }
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    std::vector<double> advantages;
    advantages.reserve(rewards.size());
    for (double r : rewards) advantages.push_back(r - mean);
    return advantages;
}

double grpo_objective(const std::vector<GrpoSample>& samples, double epsilon, double beta) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        fail("config.invalid", "epsilon must lie in (0,1)", ErrorKind::usage);
    }
    if (!(beta >= 0.0)) fail("config.invalid", "beta must be >= 0", ErrorKind::usage);
    if (samples.empty()) fail("reward.empty_group", "objective over an empty sample group");

    double total = 0.0;
    for (const auto& sample : samples) {
        if (sample.ratios.empty()) {
            fail("reward.empty_group", "sample has no token ratios");
        }
        double per_token_sum = 0.0;
        for (double ratio : sample.ratios) {
            if (!(ratio > 0.0) || !std::isfinite(ratio)) {
                fail("reward.bad_ratio", "policy ratios must be positive finite reals");
            }
            const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
            per_token_sum += std::min(ratio * sample.advantage, clipped * sample.advantage);
            per_token_sum -= beta * sample.kl_estimate;
        }
        total += per_token_sum / static_cast<double>(sample.ratios.size());
    }
    return total / static_cast<double>(samples.size());
}

double exponential_training_reward(int pred_a, int pred_b, int gt_a, int gt_b, double lambda) {
    for (int score : {pred_a, pred_b, gt_a, gt_b}) {
        if (!score_in_range(score)) {
            fail("reward.out_of_range_score",
                 "score " + std::to_string(score) + " is outside 1..5");
        }
    }
    if (!(lambda > 0.0)) fail("config.invalid", "lambda must be positive", ErrorKind::usage);
    const int l1 = std::abs(pred_a - gt_a) + std::abs(pred_b - gt_b);
    return std::exp(-lambda * static_cast<double>(l1));
}

HackingDiagnostic reward_hacking_diagnostic(const std::vector<int>& predictions) {
    if (predictions.empty()) {
        fail("reward.empty_group", "diagnostic over an empty prediction list");
    }
    std::array<long long, 5> histogram{};
    for (int p : predictions) {
        if (!score_in_range(p)) {
            fail("reward.out_of_range_score",
                 "prediction " + std::to_string(p) + " is outside 1..5");
        }
        histogram[static_cast<std::size_t>(p - 1)] += 1;
    }
    const double n = static_cast<double>(predictions.size());
    HackingDiagnostic diagnostic;
    for (long long count : histogram) {
        if (count == 0) continue;
        const double p = static_cast<double>(count) / n;
        diagnostic.mode_share = std::max(diagnostic.mode_share, p);
        diagnostic.entropy_bits -= p * std::log2(p);
    }
    return diagnostic;
}

}  // namespace evolvr
