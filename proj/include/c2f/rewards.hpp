#pragma once

#include <string>

#include "c2f/env.hpp"

namespace c2f {

struct RewardWeights {
    double format = 1.0;
    double polarity = 1.0;
    double score = 1.0;

    void validate() const;  // throws ConfigError on negative weights
};

// total = lf*format + lp*polarity + ls*score; polarity 0 forces score 0.
struct RewardBreakdown {
    double format = 0.0;
    double polarity = 0.0;
    double score = 0.0;
    double total = 0.0;
};

// 1 iff text parses under the profile.
double format_reward(const std::string& text, const DatasetProfile& profile);

// 1 iff predicted polarity equals gold.
double polarity_reward(Polarity pred, Polarity truth);

// 1 - tanh(|s_pred - s_true| / (r_max - r_min)) when polarities match, else 0.
double score_reward(double s_pred, double s_true, Polarity p_pred, Polarity p_true,
                    const DatasetProfile& profile);

// Parses text and scores it against the gold sample. Unparseable text zeroes
// every component; polarity and score only exist after a successful parse.
RewardBreakdown total_reward(const std::string& text, const Sample& gold,
                             const RewardWeights& weights, const DatasetProfile& profile);

}  // namespace c2f
