#include "c2f/rewards.hpp"

#include <cmath>

namespace c2f {

void RewardWeights::validate() const {
    if (format < 0.0 || polarity < 0.0 || score < 0.0) {
        throw ConfigError("reward weights must be nonnegative");
    }
}

double format_reward(const std::string& text, const DatasetProfile& profile) {
    return parse(text, profile).ok() ? 1.0 : 0.0;
}

double polarity_reward(Polarity pred, Polarity truth) {
    return pred == truth ? 1.0 : 0.0;
}

double score_reward(double s_pred, double s_true, Polarity p_pred, Polarity p_true,
                    const DatasetProfile& profile) {
    if (p_pred != p_true) return 0.0;
    return 1.0 - std::tanh(std::abs(s_pred - s_true) / profile.range());
}

RewardBreakdown total_reward(const std::string& text, const Sample& gold,
                             const RewardWeights& weights, const DatasetProfile& profile) {
    RewardBreakdown b;
    const auto parsed = parse(text, profile);
    if (!parsed.ok()) return b;

    const StructuredOutput& out = parsed.value();
    b.format = 1.0;
    b.polarity = polarity_reward(out.polarity, gold.gold_polarity);
    b.score = score_reward(out.score, gold.gold_score, out.polarity, gold.gold_polarity,
                           profile);
    b.total = weights.format * b.format + weights.polarity * b.polarity +
              weights.score * b.score;
    return b;
}

}  // namespace c2f
