#pragma once

#include "c2f/policy.hpp"

namespace c2f {

struct SftConfig {
    double learning_rate = 1e-3;
    int epochs = 10;
    int batch_size = 32;
    std::uint64_t seed = 7;

    void validate() const;
};

// lr0 * 0.5 * (1 + cos(pi * t / total)), t in [0, total)
double cosine_lr(double lr0, int t, int total);

// Mean over sequences of the summed next-token negative log-likelihood.
double sft_loss(const Policy& policy, const PolicyParams& params,
                const std::vector<Sample>& samples,
                const std::vector<CoTRecord>& records);

std::pair<double, std::vector<double>> sft_loss_grad(
    const Policy& policy, const PolicyParams& params,
    const std::vector<Sample>& samples, const std::vector<CoTRecord>& records);

struct SftResult {
    PolicyParams params;
    std::vector<double> epoch_loss;  // mean batch loss seen during each epoch
};

// Plain SGD with a cosine-decayed step size over all epochs; batches are
// reshuffled each epoch from the run seed. Deterministic end to end.
SftResult sft_train(const Policy& policy, const PolicyParams& start,
                    const std::vector<Sample>& samples,
                    const std::vector<CoTRecord>& records, const SftConfig& cfg);

}  // namespace c2f
