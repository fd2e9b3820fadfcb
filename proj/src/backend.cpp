#include "evolvr/backend.hpp"

#include <algorithm>
#include <cmath>

#include "evolvr/core.hpp"
#include "evolvr/errors.hpp"

namespace evolvr {

double softmax_confidence(const ScoreLogits& logits, int target) {
    if (!score_in_range(target)) {
        fail("backend.bad_target", "softmax target " + std::to_string(target) + " is outside 1..5");
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (double logit : logits) denom += std::exp(logit - peak);
    return std::exp(logits[static_cast<std::size_t>(target - 1)] - peak) / denom;
}

std::optional<int> strict_argmax(const ScoreLogits& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) best = i;
    }
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (i != best && logits[i] == logits[best]) return std::nullopt;
    }
    return static_cast<int>(best) + 1;
}

}  // namespace evolvr
