#pragma once

#include <map>
#include <vector>

#include "evolvr/core.hpp"

namespace evolvr {

// Weights and shape parameters for the composite reward.  The three weighted
// components are: score advantage over a reference (w1), absolute score level
// (w2), and a length-band term (w3).  None of the numeric defaults are
// canonical; all are config-overridable and recorded in run manifests.
struct RewardConfig {
    double w1 = 1.0;
    double w2 = 0.5;
    double w3 = 0.2;
    std::map<AspectId, double> alpha;  // per-aspect weights, must sum to 1
    double lambda = 0.5;               // exponential training-reward scale
    int len_min = 300;                 // tokens, inclusive band
    int len_max = 900;
    int len_ramp = 200;  // linear decay distance outside the band

    void validate() const;
    static RewardConfig defaults_for(const AspectSet& aspects);  // uniform alpha
};

/// Trapezoid length shaping: 1 inside [len_min, len_max], linear decay to 0
/// over len_ramp tokens on each side.  The w3 weight is applied by the caller.
double length_reward(int len, const RewardConfig& config);

/// w1 * sum_k alpha_k (y_k - ref_k) + w2 * sum_k alpha_k y_k + w3 * f(len).
/// Candidate, reference, and alpha must cover the same aspect set.
double composite_reward(const ScoreVector& candidate, const ScoreVector& reference,
                        int candidate_len, const RewardConfig& config);

/// Group-relative advantages: each reward minus the group mean.  Sums to zero.
std::vector<double> group_advantages(const std::vector<double>& rewards);

struct GrpoSample {
    std::vector<double> ratios;  // per-token policy ratios, positive finite
    double advantage = 0.0;      // sequence level, broadcast over tokens
    double kl_estimate = 0.0;
};

/// Clipped-surrogate objective:
///   (1/G) sum_i (1/|o_i|) sum_t [min(r Â, clip(r, 1-eps, 1+eps) Â) - beta kl_i].
/// The KL estimate is caller-supplied per sequence and applied at every token
/// position.  Requires epsilon in (0,1) and beta >= 0.
double grpo_objective(const std::vector<GrpoSample>& samples, double epsilon, double beta);

/// exp(-lambda * (|pred_a - gt_a| + |pred_b - gt_b|)); 1 exactly when both
/// predictions are exact.
double exponential_training_reward(int pred_a, int pred_b, int gt_a, int gt_b, double lambda);

struct HackingDiagnostic {
    double mode_share = 0.0;   // frequency of the most common score
    double entropy_bits = 0.0; // Shannon entropy of the 5-class histogram
};

// Flags degenerate evaluators that collapse onto the most frequent scores:
// mode_share near 1 with entropy near 0 is the signature.
HackingDiagnostic reward_hacking_diagnostic(const std::vector<int>& predictions);

}  // namespace evolvr
