#pragma once

#include "c2f/policy.hpp"
#include "c2f/rewards.hpp"

namespace c2f {

struct GrpoConfig {
    int group_size = 4;
    double beta = 0.1;
    // A group whose best total reward stays below tau is "hard": with the
    // default unit weights, format+polarity alone reach 2, so tau = 2 means
    // nobody in the group got the polarity right.
    double tau = 2.0;
    RewardWeights weights;
    double learning_rate = 5e-4;
    int steps = 200;
    int batch_size = 16;  // prompt groups per step
    std::uint64_t seed = 11;
    bool hint_enabled = true;
    bool include_hard = true;
    double temperature = 1.0;

    void validate() const;
};

struct RolloutGroup {
    Sample sample;
    std::vector<Rollout> rollouts;
    std::vector<RewardBreakdown> breakdowns;
    std::vector<double> rewards;
    std::vector<double> advantages;
    bool hinted = false;
};

// Group-normalized advantages: (r - mean) / population std; identically zero
// when every reward ties. LengthError below two rollouts.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

bool is_hard_group(const std::vector<double>& rewards, double tau);

// The three-token polarity block used as a decoding prefix when hinting.
std::vector<int> hint_prefix(const Vocabulary& vocab, Polarity gold);

RolloutGroup rollout_group(const Policy& policy, const PolicyParams& params,
                           const Sample& sample, const GrpoConfig& cfg,
                           std::mt19937_64& rng);

// Regenerates every rollout with the gold polarity block forced as a prefix
// and replaces the group wholesale.
void hint_resample(RolloutGroup& group, const Policy& policy,
                   const PolicyParams& params, const GrpoConfig& cfg,
                   std::mt19937_64& rng);

// Exact KL(p || q) of the two parameterizations along a trajectory: at each
// position the full next-token distributions are compared over the legal set,
// and the per-position divergences are summed.
double kl_divergence(const Policy& policy, const PolicyParams& p,
                     const PolicyParams& q, const Sample& sample,
                     const std::vector<int>& tokens);

// Per group: (1/G) sum_i sum_t [ -A_i * log pi(o_t) + beta * KL_t ], with the
// log-prob term muted on forced prefix positions; averaged over groups.
// Advantages must already be populated.
double grpo_loss(const Policy& policy, const PolicyParams& params,
                 const PolicyParams& ref, const std::vector<RolloutGroup>& groups,
                 double beta);
std::pair<double, std::vector<double>> grpo_loss_grad(
    const Policy& policy, const PolicyParams& params, const PolicyParams& ref,
    const std::vector<RolloutGroup>& groups, double beta);

struct GrpoStepLog {
    int step = 0;
    double mean_reward = 0.0;
    double mean_format = 0.0;
    double mean_polarity = 0.0;
    double mean_score = 0.0;
    double hard_fraction = 0.0;    // groups below tau before any hinting
    double hinted_fraction = 0.0;  // groups actually regenerated
};

struct GrpoResult {
    PolicyParams params;
    std::vector<GrpoStepLog> log;
};

// On-policy training against a frozen reference (the starting parameters).
// Each step draws batch_size prompts, rolls out a group per prompt, hints the
// hard ones when enabled, and takes one SGD step on the group-averaged loss.
GrpoResult grpo_train(const Policy& policy, const PolicyParams& start,
                      const std::vector<Sample>& train, const GrpoConfig& cfg);

}  // namespace c2f
