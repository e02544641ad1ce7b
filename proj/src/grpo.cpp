#include "c2f/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "c2f/sft.hpp"

namespace c2f {

void GrpoConfig::validate() const {
    if (group_size < 2) throw ConfigError("grpo: group_size must be >= 2");
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw ConfigError("grpo: beta must be finite and >= 0");
    if (!std::isfinite(tau)) throw ConfigError("grpo: tau must be finite");
    weights.validate();
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("grpo: learning_rate must be finite and > 0");
    if (steps < 1) throw ConfigError("grpo: steps must be >= 1");
    if (batch_size < 1) throw ConfigError("grpo: batch_size must be >= 1");
    if (!(temperature > 0.0) || !std::isfinite(temperature))
        throw ConfigError("grpo: temperature must be finite and > 0");
}

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
    const int n = static_cast<int>(rewards.size());
    if (n < 2) throw LengthError("advantages: need at least two rollouts");
    std::vector<double> adv(n, 0.0);
    // A tied group ranks nobody; return exact zeros rather than letting
    // accumulation roundoff invent a spread.
    if (std::all_of(rewards.begin(), rewards.end(),
                    [&](double r) { return r == rewards[0]; }))
        return adv;
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    if (var == 0.0) return adv;
    const double sd = std::sqrt(var);
    for (int i = 0; i < n; ++i) adv[i] = (rewards[i] - mean) / sd;
    return adv;
}

bool is_hard_group(const std::vector<double>& rewards, double tau) {
    if (rewards.empty()) throw LengthError("hard check: empty group");
    return *std::max_element(rewards.begin(), rewards.end()) < tau;
}

std::vector<int> hint_prefix(const Vocabulary& vocab, Polarity gold) {
    return {vocab.tag_polarity_open(), vocab.polarity_token(gold),
            vocab.tag_polarity_close()};
}

namespace {

void score_group(RolloutGroup& g, const Policy& policy, const GrpoConfig& cfg) {
    g.breakdowns.clear();
    g.rewards.clear();
    for (const Rollout& r : g.rollouts) {
        const RewardBreakdown b =
            total_reward(policy.vocab().text(r.tokens), g.sample, cfg.weights,
                         policy.config().profile);
        g.breakdowns.push_back(b);
        g.rewards.push_back(b.total);
    }
}

}  // namespace

RolloutGroup rollout_group(const Policy& policy, const PolicyParams& params,
                           const Sample& sample, const GrpoConfig& cfg,
                           std::mt19937_64& rng) {
    RolloutGroup g;
    g.sample = sample;
    DecodeOptions opts;
    opts.temperature = cfg.temperature;
    for (int i = 0; i < cfg.group_size; ++i)
        g.rollouts.push_back(policy.sample_sequence(params, sample, opts, rng));
    score_group(g, policy, cfg);
    return g;
}

void hint_resample(RolloutGroup& group, const Policy& policy,
                   const PolicyParams& params, const GrpoConfig& cfg,
                   std::mt19937_64& rng) {
    const std::vector<int> prefix =
        hint_prefix(policy.vocab(), group.sample.gold_polarity);
    DecodeOptions opts;
    opts.temperature = cfg.temperature;
    group.rollouts.clear();
    for (int i = 0; i < cfg.group_size; ++i)
        group.rollouts.push_back(
            policy.sample_sequence(params, group.sample, opts, rng, prefix));
    score_group(group, policy, cfg);
    group.hinted = true;
}

double kl_divergence(const Policy& policy, const PolicyParams& p,
                     const PolicyParams& q, const Sample& sample,
                     const std::vector<int>& tokens) {
    const Trace tp = policy.trace_sequence(p, sample, tokens);
    const Trace tq = policy.trace_sequence(q, sample, tokens);
    double total = 0.0;
    for (std::size_t t = 0; t < tp.steps.size(); ++t) {
        const std::vector<double>& pp = tp.steps[t].probs;
        const std::vector<double>& qq = tq.steps[t].probs;
        double kl = 0.0;
        for (std::size_t j = 0; j < pp.size(); ++j)
            kl += pp[j] * (std::log(pp[j]) - std::log(qq[j]));
        total += kl;
    }
    return total;
}

namespace {

// Shared by grpo_loss and grpo_loss_grad so the scalar and the gradient can
// never drift apart.
double loss_impl(const Policy& policy, const PolicyParams& params,
                 const PolicyParams& ref, const std::vector<RolloutGroup>& groups,
                 double beta, std::vector<double>* grad_out) {
    if (groups.empty()) throw EmptyError("grpo: no rollout groups");
    double loss = 0.0;
    if (grad_out) grad_out->assign(policy.param_count(), 0.0);
    const double group_w = 1.0 / static_cast<double>(groups.size());
    for (const RolloutGroup& g : groups) {
        if (g.advantages.size() != g.rollouts.size())
            throw DimensionError("grpo: advantages not computed for a group");
        const double w = group_w / static_cast<double>(g.rollouts.size());
        for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
            const Rollout& r = g.rollouts[i];
            const double adv = g.advantages[i];
            const Trace tr = policy.trace_sequence(params, g.sample, r.tokens);
            const Trace tref = policy.trace_sequence(ref, g.sample, r.tokens);
            std::vector<std::vector<double>> dl;
            if (grad_out) dl.resize(tr.steps.size());
            for (std::size_t t = 0; t < tr.steps.size(); ++t) {
                const StepTrace& st = tr.steps[t];
                const std::vector<double>& pp = st.probs;
                const std::vector<double>& qq = tref.steps[t].probs;
                const bool forced = static_cast<int>(t) < r.forced_prefix_len;
                double kl = 0.0;
                for (std::size_t j = 0; j < pp.size(); ++j)
                    kl += pp[j] * (std::log(pp[j]) - std::log(qq[j]));
                loss += w * (beta * kl - (forced ? 0.0 : adv * st.logprob));
                if (!grad_out) continue;
                dl[t].resize(pp.size());
                for (std::size_t j = 0; j < pp.size(); ++j) {
                    const double a = std::log(pp[j]) - std::log(qq[j]);
                    double d = beta * pp[j] * (a - kl);
                    if (!forced) {
                        const double ind =
                            static_cast<int>(j) == st.target_pos ? 1.0 : 0.0;
                        d -= adv * (ind - pp[j]);
                    }
                    dl[t][j] = w * d;
                }
            }
            if (grad_out) {
                const std::vector<double> g1 =
                    policy.backward_from_dlogits(params, g.sample, tr, dl);
                for (int k = 0; k < policy.param_count(); ++k)
                    (*grad_out)[k] += g1[k];
            }
        }
    }
    return loss;
}

}  // namespace

double grpo_loss(const Policy& policy, const PolicyParams& params,
                 const PolicyParams& ref, const std::vector<RolloutGroup>& groups,
                 double beta) {
    return loss_impl(policy, params, ref, groups, beta, nullptr);
}

std::pair<double, std::vector<double>> grpo_loss_grad(
    const Policy& policy, const PolicyParams& params, const PolicyParams& ref,
    const std::vector<RolloutGroup>& groups, double beta) {
    std::vector<double> grad;
    const double loss = loss_impl(policy, params, ref, groups, beta, &grad);
    return {loss, std::move(grad)};
}

GrpoResult grpo_train(const Policy& policy, const PolicyParams& start,
                      const std::vector<Sample>& train, const GrpoConfig& cfg) {
    cfg.validate();
    std::vector<const Sample*> pool;
    for (const Sample& s : train)
        if (cfg.include_hard || !s.is_hard) pool.push_back(&s);
    if (pool.empty()) throw EmptyError("grpo: no training prompts after filtering");

    GrpoResult out;
    out.params = start;
    const PolicyParams ref = start;

    for (int step = 0; step < cfg.steps; ++step) {
        std::mt19937_64 pick_rng(derive_seed(cfg.seed, 0x9b0, step));
        std::vector<RolloutGroup> groups;
        int hard = 0, hinted = 0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const Sample& s = *pool[pick_rng() % pool.size()];
            std::mt19937_64 roll_rng(derive_seed(cfg.seed, 0x9b1, step, b));
            RolloutGroup g = rollout_group(policy, out.params, s, cfg, roll_rng);
            if (is_hard_group(g.rewards, cfg.tau)) {
                ++hard;
                if (cfg.hint_enabled) {
                    hint_resample(g, policy, out.params, cfg, roll_rng);
                    ++hinted;
                }
            }
            g.advantages = compute_advantages(g.rewards);
            groups.push_back(std::move(g));
        }

        auto [loss, grad] = grpo_loss_grad(policy, out.params, ref, groups, cfg.beta);
        (void)loss;
        const double lr = cosine_lr(cfg.learning_rate, step, cfg.steps);
        for (int k = 0; k < policy.param_count(); ++k)
            out.params.values[k] -= lr * grad[k];

        GrpoStepLog log;
        log.step = step;
        int n_roll = 0;
        for (const RolloutGroup& g : groups) {
            for (const RewardBreakdown& b : g.breakdowns) {
                log.mean_reward += b.total;
                log.mean_format += b.format;
                log.mean_polarity += b.polarity;
                log.mean_score += b.score;
                ++n_roll;
            }
            log.hinted_fraction += g.hinted ? 1.0 : 0.0;
        }
        log.mean_reward /= n_roll;
        log.mean_format /= n_roll;
        log.mean_polarity /= n_roll;
        log.mean_score /= n_roll;
        log.hard_fraction = static_cast<double>(hard) / cfg.batch_size;
        log.hinted_fraction = static_cast<double>(hinted) / cfg.batch_size;
        out.log.push_back(log);
    }
    return out;
}

}  // namespace c2f
