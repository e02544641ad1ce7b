#pragma once

#include <random>
#include <string>
#include <vector>

#include "c2f/env.hpp"

namespace c2f {

struct PolicyConfig {
    int d = 8;
    int h = 32;
    int n_think = 8;
    int max_think = 8;
    int max_len = 48;
    double init_scale = 0.3;
    std::uint64_t init_seed = 42;
    bool grammar_masked = true;
    DatasetProfile profile = DatasetProfile::sims();

    void validate() const;
};

// Offsets into the flat parameter vector. Matrices are row-major.
struct ParamLayout {
    int d = 0, h = 0, vocab = 0;
    int w_text = 0, w_audio = 0, w_vision = 0, b_enc = 0;
    int w_fuse = 0, b_fuse = 0;
    int embed = 0;
    int w_in = 0, w_rec = 0, w_ctx = 0, b_rec = 0;
    int w_out = 0, b_out = 0;
    int total = 0;

    static ParamLayout make(int d, int h, int vocab);
};

struct PolicyParams {
    std::vector<double> values;

    bool finite() const;
    int size() const { return static_cast<int>(values.size()); }
};

struct Rollout {
    std::vector<int> tokens;
    // log-probabilities of each token under the temperature-1 policy law,
    // recorded for forced positions too.
    std::vector<double> logprobs;
    int forced_prefix_len = 0;

    double logprob_sum() const;
};

struct DecodeOptions {
    double temperature = 1.0;
    bool greedy = false;
};

// Tracks the position inside the output grammar
// <polarity>P</polarity><think>T*</think><score>S</score> EOS
// and exposes the set of tokens that can legally extend the sequence.
class GrammarState {
  public:
    GrammarState(const Vocabulary& vocab, int max_think);

    void reset();
    bool is_legal(int token) const;
    void advance(int token);  // VocabError if token is illegal
    void legal_tokens(std::vector<int>& out) const;
    bool done() const { return stage_ == Stage::Done; }

  private:
    enum class Stage {
        PolarityOpen, PolarityValue, PolarityClose, ThinkOpen, ThinkBody,
        ScoreOpen, ScoreValue, ScoreClose, Eos, Done,
    };
    const Vocabulary* vocab_;
    int max_think_;
    Stage stage_ = Stage::PolarityOpen;
    int think_count_ = 0;
};

// Teacher-forced forward pass bookkeeping, consumed by backward passes.
struct StepTrace {
    int prev = 0;
    int target = 0;
    std::vector<int> legal;
    std::vector<double> probs;  // over legal, temperature 1
    int target_pos = 0;
    double logprob = 0.0;
    std::vector<double> state;
};

struct Trace {
    std::vector<double> enc_hidden;  // tanh of summed modality projections
    std::vector<double> context;
    std::vector<StepTrace> steps;
};

// Small conditional autoregressive policy: three modality projections fused
// into a context vector, a single tanh recurrence that sees the context at
// every step, and a softmax head over the structured-output vocabulary.
// Grammar-constrained decoding is on unless the config disables it, and the
// same law (masked or free) is used for sampling, log-probabilities,
// distributions, and gradients.
class Policy {
  public:
    explicit Policy(PolicyConfig cfg);

    const PolicyConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }
    const ParamLayout& layout() const { return layout_; }
    int param_count() const { return layout_.total; }

    PolicyParams init_params() const;

    // Deterministic context vector of width h.
    std::vector<double> encode(const PolicyParams& params, const Sample& sample) const;

    // Emits forced_prefix verbatim (recording its conditional log-probs),
    // then samples to EOS. Masked mode always completes a valid structure or
    // throws LengthError if max_len is too small to hold one; free mode
    // truncates at max_len without EOS.
    Rollout sample_sequence(const PolicyParams& params, const Sample& sample,
                            const DecodeOptions& opts, std::mt19937_64& rng,
                            const std::vector<int>& forced_prefix = {}) const;

    std::vector<double> sequence_logprob(const PolicyParams& params, const Sample& sample,
                                         const std::vector<int>& tokens) const;

    // Full-vocabulary next-token distribution after the given prefix;
    // illegal tokens carry exactly zero mass in masked mode.
    std::vector<double> token_distribution(const PolicyParams& params, const Sample& sample,
                                           const std::vector<int>& prefix) const;

    // Gradient of sum_t weights[t] * log p(tokens[t] | prefix) over all
    // parameters, encoder included.
    std::vector<double> grad_logprob(const PolicyParams& params, const Sample& sample,
                                     const std::vector<int>& tokens,
                                     const std::vector<double>& weights) const;

    // Building blocks for the trainers: a recorded teacher-forced pass and a
    // backward pass from arbitrary per-position logit gradients (indexed like
    // each step's legal set).
    Trace trace_sequence(const PolicyParams& params, const Sample& sample,
                         const std::vector<int>& tokens) const;
    std::vector<double> backward_from_dlogits(
        const PolicyParams& params, const Sample& sample, const Trace& trace,
        const std::vector<std::vector<double>>& dlogits) const;

  private:
    void check_sample(const Sample& sample) const;
    void check_params(const PolicyParams& params) const;
    std::vector<double> step_state(const PolicyParams& params, const std::vector<double>& context,
                                   int prev, const std::vector<double>& prev_state) const;
    void legal_now(const GrammarState& g, std::vector<int>& out) const;

    PolicyConfig cfg_;
    Vocabulary vocab_;
    ParamLayout layout_;
};

// Versioned JSON checkpoint with the full policy config and a vocabulary
// digest; loading verifies the digest and parameter count.
void save_checkpoint(const std::string& path, const Policy& policy,
                     const PolicyParams& params);
std::pair<PolicyConfig, PolicyParams> load_checkpoint(const std::string& path);

PolicyConfig policy_config_from_json_text(const std::string& text);
std::string policy_config_to_json_text(const PolicyConfig& cfg);

}  // namespace c2f
