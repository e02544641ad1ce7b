#include "c2f/sft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace c2f {
namespace {

std::vector<const Sample*> match_records(const std::vector<Sample>& samples,
                                         const std::vector<CoTRecord>& records) {
    std::unordered_map<std::string, const Sample*> by_id;
    for (const Sample& s : samples) by_id[s.id] = &s;
    std::vector<const Sample*> matched;
    matched.reserve(records.size());
    for (const CoTRecord& r : records) {
        auto it = by_id.find(r.sample_id);
        if (it == by_id.end())
            throw ConfigError("sft: record references unknown sample " + r.sample_id);
        matched.push_back(it->second);
    }
    return matched;
}

}  // namespace

void SftConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("sft: learning_rate must be finite and > 0");
    if (epochs < 1) throw ConfigError("sft: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("sft: batch_size must be >= 1");
}

double cosine_lr(double lr0, int t, int total) {
    if (total <= 0 || t < 0 || t >= total)
        throw ConfigError("cosine_lr: step outside [0, total)");
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                       static_cast<double>(total)));
}

double sft_loss(const Policy& policy, const PolicyParams& params,
                const std::vector<Sample>& samples,
                const std::vector<CoTRecord>& records) {
    if (records.empty()) throw EmptyError("sft: no training records");
    const auto matched = match_records(samples, records);
    double total = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::vector<double> lp =
            policy.sequence_logprob(params, *matched[i], records[i].target_tokens);
        for (double x : lp) total -= x;
    }
    return total / static_cast<double>(records.size());
}

std::pair<double, std::vector<double>> sft_loss_grad(
    const Policy& policy, const PolicyParams& params,
    const std::vector<Sample>& samples, const std::vector<CoTRecord>& records) {
    if (records.empty()) throw EmptyError("sft: no training records");
    const auto matched = match_records(samples, records);
    const double inv = 1.0 / static_cast<double>(records.size());
    double loss = 0.0;
    std::vector<double> grad(policy.param_count(), 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Sample& s = *matched[i];
        const std::vector<int>& toks = records[i].target_tokens;
        Trace tr = policy.trace_sequence(params, s, toks);
        std::vector<std::vector<double>> dl(tr.steps.size());
        for (std::size_t t = 0; t < tr.steps.size(); ++t) {
            const StepTrace& st = tr.steps[t];
            loss -= inv * st.logprob;
            dl[t].resize(st.legal.size());
            for (std::size_t j = 0; j < st.legal.size(); ++j)
                dl[t][j] = inv * (st.probs[j] -
                                  (static_cast<int>(j) == st.target_pos ? 1.0 : 0.0));
        }
        const std::vector<double> g = policy.backward_from_dlogits(params, s, tr, dl);
        for (int k = 0; k < policy.param_count(); ++k) grad[k] += g[k];
    }
    return {loss, std::move(grad)};
}

SftResult sft_train(const Policy& policy, const PolicyParams& start,
                    const std::vector<Sample>& samples,
                    const std::vector<CoTRecord>& records, const SftConfig& cfg) {
    cfg.validate();
    if (records.empty()) throw EmptyError("sft: no training records");
    match_records(samples, records);  // fail before any work

    SftResult out;
    out.params = start;
    const int n = static_cast<int>(records.size());
    const int batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const int total_steps = cfg.epochs * batches_per_epoch;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    int step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5f7, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_sum = 0.0;
        for (int b = 0; b < batches_per_epoch; ++b) {
            std::vector<CoTRecord> batch;
            const int lo = b * cfg.batch_size;
            const int hi = std::min(n, lo + cfg.batch_size);
            for (int i = lo; i < hi; ++i) batch.push_back(records[order[i]]);
            auto [loss, grad] = sft_loss_grad(policy, out.params, samples, batch);
            const double lr = cosine_lr(cfg.learning_rate, step, total_steps);
            for (int k = 0; k < policy.param_count(); ++k)
                out.params.values[k] -= lr * grad[k];
            epoch_sum += loss;
            ++step;
        }
        out.epoch_loss.push_back(epoch_sum / batches_per_epoch);
    }
    return out;
}

}  // namespace c2f
