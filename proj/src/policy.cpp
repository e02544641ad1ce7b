#include "c2f/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "c2f/serde.hpp"

namespace c2f {
namespace {

// 53-bit uniform in [0, 1), built directly from the engine so sampling does
// not depend on library distribution internals.
double uniform53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int cdf_pick(const std::vector<double>& probs, std::mt19937_64& rng) {
    double u = uniform53(rng);
    double cum = 0.0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
        cum += probs[i];
        if (u < cum) return i;
    }
    return static_cast<int>(probs.size()) - 1;
}

}  // namespace

void PolicyConfig::validate() const {
    if (d < 1) throw ConfigError("policy: d must be >= 1");
    if (h < 1) throw ConfigError("policy: h must be >= 1");
    if (n_think < 1) throw ConfigError("policy: n_think must be >= 1");
    if (max_think < 1) throw ConfigError("policy: max_think must be >= 1");
    if (max_len < 1) throw ConfigError("policy: max_len must be >= 1");
    if (!(init_scale >= 0.0) || !std::isfinite(init_scale))
        throw ConfigError("policy: init_scale must be finite and >= 0");
    profile.validate();
}

ParamLayout ParamLayout::make(int d, int h, int vocab) {
    ParamLayout l;
    l.d = d;
    l.h = h;
    l.vocab = vocab;
    int at = 0;
    auto take = [&at](int n) {
        int off = at;
        at += n;
        return off;
    };
    l.w_text = take(h * d);
    l.w_audio = take(h * d);
    l.w_vision = take(h * d);
    l.b_enc = take(h);
    l.w_fuse = take(h * h);
    l.b_fuse = take(h);
    l.embed = take(vocab * h);
    l.w_in = take(h * h);
    l.w_rec = take(h * h);
    l.w_ctx = take(h * h);
    l.b_rec = take(h);
    l.w_out = take(vocab * h);
    l.b_out = take(vocab);
    l.total = at;
    return l;
}

bool PolicyParams::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

double Rollout::logprob_sum() const {
    double s = 0.0;
    for (double lp : logprobs) s += lp;
    return s;
}

GrammarState::GrammarState(const Vocabulary& vocab, int max_think)
    : vocab_(&vocab), max_think_(max_think) {}

void GrammarState::reset() {
    stage_ = Stage::PolarityOpen;
    think_count_ = 0;
}

void GrammarState::legal_tokens(std::vector<int>& out) const {
    out.clear();
    const Vocabulary& v = *vocab_;
    switch (stage_) {
        case Stage::PolarityOpen:
            out.push_back(v.tag_polarity_open());
            break;
        case Stage::PolarityValue:
            out.push_back(v.polarity_token(Polarity::Negative));
            out.push_back(v.polarity_token(Polarity::Neutral));
            out.push_back(v.polarity_token(Polarity::Positive));
            break;
        case Stage::PolarityClose:
            out.push_back(v.tag_polarity_close());
            break;
        case Stage::ThinkOpen:
            out.push_back(v.tag_think_open());
            break;
        case Stage::ThinkBody:
            if (think_count_ < max_think_)
                for (int i = 0; i < v.n_think(); ++i) out.push_back(v.think_token(i));
            out.push_back(v.tag_think_close());
            break;
        case Stage::ScoreOpen:
            out.push_back(v.tag_score_open());
            break;
        case Stage::ScoreValue:
            for (int i = 0; i < v.grid_size(); ++i) out.push_back(v.score_token(i));
            break;
        case Stage::ScoreClose:
            out.push_back(v.tag_score_close());
            break;
        case Stage::Eos:
            out.push_back(v.eos());
            break;
        case Stage::Done:
            break;
    }
}

bool GrammarState::is_legal(int token) const {
    std::vector<int> legal;
    legal_tokens(legal);
    return std::find(legal.begin(), legal.end(), token) != legal.end();
}

void GrammarState::advance(int token) {
    if (!is_legal(token))
        throw VocabError("grammar: illegal token " + std::to_string(token) +
                         " at stage " + std::to_string(static_cast<int>(stage_)));
    switch (stage_) {
        case Stage::PolarityOpen: stage_ = Stage::PolarityValue; break;
        case Stage::PolarityValue: stage_ = Stage::PolarityClose; break;
        case Stage::PolarityClose: stage_ = Stage::ThinkOpen; break;
        case Stage::ThinkOpen: stage_ = Stage::ThinkBody; break;
        case Stage::ThinkBody:
            if (token == vocab_->tag_think_close()) stage_ = Stage::ScoreOpen;
            else ++think_count_;
            break;
        case Stage::ScoreOpen: stage_ = Stage::ScoreValue; break;
        case Stage::ScoreValue: stage_ = Stage::ScoreClose; break;
        case Stage::ScoreClose: stage_ = Stage::Eos; break;
        case Stage::Eos: stage_ = Stage::Done; break;
        case Stage::Done: break;
    }
}

Policy::Policy(PolicyConfig cfg)
    : cfg_(std::move(cfg)),
      vocab_((cfg_.validate(), cfg_.profile), cfg_.n_think),
      layout_(ParamLayout::make(cfg_.d, cfg_.h, vocab_.size())) {}

PolicyParams Policy::init_params() const {
    PolicyParams p;
    p.values.assign(layout_.total, 0.0);
    std::mt19937_64 rng(cfg_.init_seed);
    auto fill = [&](int off, int n, double stddev) {
        std::normal_distribution<double> dist(0.0, stddev);
        for (int i = 0; i < n; ++i) p.values[off + i] = dist(rng);
    };
    const int d = cfg_.d, h = cfg_.h, V = vocab_.size();
    const double enc_sd = cfg_.init_scale / std::sqrt(static_cast<double>(d));
    const double hid_sd = cfg_.init_scale / std::sqrt(static_cast<double>(h));
    fill(layout_.w_text, h * d, enc_sd);
    fill(layout_.w_audio, h * d, enc_sd);
    fill(layout_.w_vision, h * d, enc_sd);
    fill(layout_.w_fuse, h * h, hid_sd);
    fill(layout_.embed, V * h, cfg_.init_scale);
    fill(layout_.w_in, h * h, hid_sd);
    fill(layout_.w_rec, h * h, hid_sd);
    fill(layout_.w_ctx, h * h, hid_sd);
    fill(layout_.w_out, V * h, hid_sd);
    return p;
}

void Policy::check_sample(const Sample& sample) const {
    const auto d = static_cast<std::size_t>(cfg_.d);
    if (sample.text_feat.size() != d || sample.audio_feat.size() != d ||
        sample.vision_feat.size() != d)
        throw DimensionError("policy: sample " + sample.id + " feature width != " +
                             std::to_string(cfg_.d));
}

void Policy::check_params(const PolicyParams& params) const {
    if (params.size() != layout_.total)
        throw DimensionError("policy: expected " + std::to_string(layout_.total) +
                             " parameters, got " + std::to_string(params.size()));
}

std::vector<double> Policy::encode(const PolicyParams& params, const Sample& sample) const {
    check_params(params);
    check_sample(sample);
    const int d = cfg_.d, h = cfg_.h;
    const double* w = params.values.data();
    std::vector<double> z(w + layout_.b_enc, w + layout_.b_enc + h);
    auto add_proj = [&](int off, const std::vector<double>& x) {
        for (int i = 0; i < h; ++i) {
            double acc = 0.0;
            const double* row = w + off + i * d;
            for (int k = 0; k < d; ++k) acc += row[k] * x[k];
            z[i] += acc;
        }
    };
    add_proj(layout_.w_text, sample.text_feat);
    add_proj(layout_.w_audio, sample.audio_feat);
    add_proj(layout_.w_vision, sample.vision_feat);
    std::vector<double> he(h), c(h);
    for (int i = 0; i < h; ++i) he[i] = std::tanh(z[i]);
    for (int i = 0; i < h; ++i) {
        double acc = w[layout_.b_fuse + i];
        const double* row = w + layout_.w_fuse + i * h;
        for (int k = 0; k < h; ++k) acc += row[k] * he[k];
        c[i] = std::tanh(acc);
    }
    return c;
}

std::vector<double> Policy::step_state(const PolicyParams& params,
                                       const std::vector<double>& context, int prev,
                                       const std::vector<double>& prev_state) const {
    const int h = cfg_.h;
    const double* w = params.values.data();
    const double* emb = w + layout_.embed + prev * h;
    std::vector<double> s(h);
    for (int i = 0; i < h; ++i) {
        double acc = w[layout_.b_rec + i];
        const double* rin = w + layout_.w_in + i * h;
        const double* rrec = w + layout_.w_rec + i * h;
        const double* rctx = w + layout_.w_ctx + i * h;
        for (int k = 0; k < h; ++k) {
            acc += rin[k] * emb[k] + rctx[k] * context[k];
            if (!prev_state.empty()) acc += rrec[k] * prev_state[k];
        }
        s[i] = std::tanh(acc);
    }
    return s;
}

void Policy::legal_now(const GrammarState& g, std::vector<int>& out) const {
    if (cfg_.grammar_masked) {
        g.legal_tokens(out);
    } else {
        out.clear();
        for (int id = 1; id < vocab_.size(); ++id) out.push_back(id);
    }
}

namespace {

struct LogitBlock {
    std::vector<double> logits;  // over legal
    std::vector<double> probs;   // temperature 1
    double logz = 0.0;           // log-sum-exp of shifted logits
    double shift = 0.0;          // max logit
};

LogitBlock legal_logits(const std::vector<double>& values, int w_out, int b_out, int h,
                        const std::vector<double>& s, const std::vector<int>& legal) {
    LogitBlock b;
    b.logits.resize(legal.size());
    const double* w = values.data();
    for (std::size_t j = 0; j < legal.size(); ++j) {
        const int v = legal[j];
        double acc = w[b_out + v];
        const double* row = w + w_out + v * h;
        for (int k = 0; k < h; ++k) acc += row[k] * s[k];
        b.logits[j] = acc;
    }
    b.shift = *std::max_element(b.logits.begin(), b.logits.end());
    double z = 0.0;
    b.probs.resize(legal.size());
    for (std::size_t j = 0; j < legal.size(); ++j) {
        b.probs[j] = std::exp(b.logits[j] - b.shift);
        z += b.probs[j];
    }
    for (double& p : b.probs) p /= z;
    b.logz = std::log(z);
    return b;
}

}  // namespace

Rollout Policy::sample_sequence(const PolicyParams& params, const Sample& sample,
                                const DecodeOptions& opts, std::mt19937_64& rng,
                                const std::vector<int>& forced_prefix) const {
    if (!(opts.temperature > 0.0) || !std::isfinite(opts.temperature))
        throw ConfigError("decode: temperature must be finite and > 0");
    const std::vector<double> ctx = encode(params, sample);
    GrammarState g(vocab_, cfg_.max_think);
    Rollout r;
    r.forced_prefix_len = static_cast<int>(forced_prefix.size());
    std::vector<double> s_prev;
    std::vector<int> legal;
    for (int t = 0;; ++t) {
        if (cfg_.grammar_masked && g.done()) break;
        if (t >= cfg_.max_len) {
            if (cfg_.grammar_masked)
                throw LengthError("decode: max_len " + std::to_string(cfg_.max_len) +
                                  " cannot hold a complete structured output");
            break;
        }
        const int prev = t == 0 ? vocab_.bos() : r.tokens[t - 1];
        std::vector<double> s = step_state(params, ctx, prev, s_prev);
        legal_now(g, legal);
        LogitBlock blk = legal_logits(params.values, layout_.w_out, layout_.b_out,
                                      cfg_.h, s, legal);
        int pick;
        if (t < r.forced_prefix_len) {
            auto it = std::find(legal.begin(), legal.end(), forced_prefix[t]);
            if (it == legal.end())
                throw VocabError("decode: forced token " +
                                 std::to_string(forced_prefix[t]) +
                                 " is outside the legal set at position " +
                                 std::to_string(t));
            pick = static_cast<int>(it - legal.begin());
        } else if (opts.greedy) {
            pick = 0;
            for (std::size_t j = 1; j < blk.logits.size(); ++j)
                if (blk.logits[j] > blk.logits[pick]) pick = static_cast<int>(j);
        } else if (opts.temperature == 1.0) {
            pick = cdf_pick(blk.probs, rng);
        } else {
            std::vector<double> pt(legal.size());
            double m = blk.shift, z = 0.0;
            for (std::size_t j = 0; j < legal.size(); ++j) {
                pt[j] = std::exp((blk.logits[j] - m) / opts.temperature);
                z += pt[j];
            }
            for (double& p : pt) p /= z;
            pick = cdf_pick(pt, rng);
        }
        const int tok = legal[pick];
        r.tokens.push_back(tok);
        r.logprobs.push_back(blk.logits[pick] - blk.shift - blk.logz);
        if (cfg_.grammar_masked) {
            g.advance(tok);
        } else if (tok == vocab_.eos()) {
            break;
        }
        s_prev = std::move(s);
    }
    return r;
}

Trace Policy::trace_sequence(const PolicyParams& params, const Sample& sample,
                             const std::vector<int>& tokens) const {
    if (tokens.empty()) throw LengthError("trace: empty token sequence");
    check_params(params);
    check_sample(sample);
    const int d = cfg_.d, h = cfg_.h;
    const double* w = params.values.data();
    Trace tr;
    // encoder, with intermediates kept for the backward pass
    {
        std::vector<double> z(w + layout_.b_enc, w + layout_.b_enc + h);
        auto add_proj = [&](int off, const std::vector<double>& x) {
            for (int i = 0; i < h; ++i) {
                double acc = 0.0;
                const double* row = w + off + i * d;
                for (int k = 0; k < d; ++k) acc += row[k] * x[k];
                z[i] += acc;
            }
        };
        add_proj(layout_.w_text, sample.text_feat);
        add_proj(layout_.w_audio, sample.audio_feat);
        add_proj(layout_.w_vision, sample.vision_feat);
        tr.enc_hidden.resize(h);
        tr.context.resize(h);
        for (int i = 0; i < h; ++i) tr.enc_hidden[i] = std::tanh(z[i]);
        for (int i = 0; i < h; ++i) {
            double acc = w[layout_.b_fuse + i];
            const double* row = w + layout_.w_fuse + i * h;
            for (int k = 0; k < h; ++k) acc += row[k] * tr.enc_hidden[k];
            tr.context[i] = std::tanh(acc);
        }
    }
    GrammarState g(vocab_, cfg_.max_think);
    std::vector<double> s_prev;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        StepTrace st;
        st.prev = t == 0 ? vocab_.bos() : tokens[t - 1];
        st.target = tokens[t];
        if (!vocab_.in_range(st.target))
            throw VocabError("trace: token id " + std::to_string(st.target) +
                             " out of range");
        st.state = step_state(params, tr.context, st.prev, s_prev);
        legal_now(g, st.legal);
        auto it = std::find(st.legal.begin(), st.legal.end(), st.target);
        if (it == st.legal.end())
            throw VocabError("trace: token " + std::to_string(st.target) +
                             " has no support at position " + std::to_string(t));
        st.target_pos = static_cast<int>(it - st.legal.begin());
        LogitBlock blk = legal_logits(params.values, layout_.w_out, layout_.b_out, h,
                                      st.state, st.legal);
        st.probs = std::move(blk.probs);
        st.logprob = blk.logits[st.target_pos] - blk.shift - blk.logz;
        if (cfg_.grammar_masked) g.advance(st.target);
        s_prev = st.state;
        tr.steps.push_back(std::move(st));
    }
    return tr;
}

std::vector<double> Policy::backward_from_dlogits(
    const PolicyParams& params, const Sample& sample, const Trace& trace,
    const std::vector<std::vector<double>>& dlogits) const {
    check_params(params);
    check_sample(sample);
    if (dlogits.size() != trace.steps.size())
        throw DimensionError("backward: one dlogits row per step required");
    const int d = cfg_.d, h = cfg_.h;
    const double* w = params.values.data();
    std::vector<double> grad(layout_.total, 0.0);
    std::vector<double> dc(h, 0.0), ds_carry(h, 0.0), ds(h), du(h);
    for (int t = static_cast<int>(trace.steps.size()) - 1; t >= 0; --t) {
        const StepTrace& st = trace.steps[t];
        if (dlogits[t].size() != st.legal.size())
            throw DimensionError("backward: dlogits width mismatch at step " +
                                 std::to_string(t));
        ds = ds_carry;
        for (std::size_t j = 0; j < st.legal.size(); ++j) {
            const double g = dlogits[t][j];
            if (g == 0.0) continue;
            const int v = st.legal[j];
            double* wrow = grad.data() + layout_.w_out + v * h;
            const double* srow = st.state.data();
            for (int k = 0; k < h; ++k) wrow[k] += g * srow[k];
            grad[layout_.b_out + v] += g;
            const double* orow = w + layout_.w_out + v * h;
            for (int k = 0; k < h; ++k) ds[k] += g * orow[k];
        }
        for (int i = 0; i < h; ++i) du[i] = ds[i] * (1.0 - st.state[i] * st.state[i]);
        const double* emb = w + layout_.embed + st.prev * h;
        const std::vector<double>* s_before =
            t > 0 ? &trace.steps[t - 1].state : nullptr;
        std::fill(ds_carry.begin(), ds_carry.end(), 0.0);
        for (int i = 0; i < h; ++i) {
            const double g = du[i];
            if (g == 0.0) continue;
            double* gin = grad.data() + layout_.w_in + i * h;
            double* gctx = grad.data() + layout_.w_ctx + i * h;
            for (int k = 0; k < h; ++k) {
                gin[k] += g * emb[k];
                gctx[k] += g * trace.context[k];
            }
            if (s_before) {
                double* grec = grad.data() + layout_.w_rec + i * h;
                for (int k = 0; k < h; ++k) grec[k] += g * (*s_before)[k];
            }
            grad[layout_.b_rec + i] += g;
            const double* rin = w + layout_.w_in + i * h;
            const double* rrec = w + layout_.w_rec + i * h;
            const double* rctx = w + layout_.w_ctx + i * h;
            double* gemb = grad.data() + layout_.embed + st.prev * h;
            for (int k = 0; k < h; ++k) {
                gemb[k] += g * rin[k];
                dc[k] += g * rctx[k];
                if (s_before) ds_carry[k] += g * rrec[k];
            }
        }
    }
    // encoder backward
    std::vector<double> dg(h), dhe(h, 0.0), dz(h);
    for (int i = 0; i < h; ++i)
        dg[i] = dc[i] * (1.0 - trace.context[i] * trace.context[i]);
    for (int i = 0; i < h; ++i) {
        const double g = dg[i];
        if (g == 0.0) continue;
        double* gf = grad.data() + layout_.w_fuse + i * h;
        const double* rf = w + layout_.w_fuse + i * h;
        for (int k = 0; k < h; ++k) {
            gf[k] += g * trace.enc_hidden[k];
            dhe[k] += g * rf[k];
        }
        grad[layout_.b_fuse + i] += g;
    }
    for (int i = 0; i < h; ++i)
        dz[i] = dhe[i] * (1.0 - trace.enc_hidden[i] * trace.enc_hidden[i]);
    auto back_proj = [&](int off, const std::vector<double>& x) {
        for (int i = 0; i < h; ++i) {
            const double g = dz[i];
            if (g == 0.0) continue;
            double* row = grad.data() + off + i * d;
            for (int k = 0; k < d; ++k) row[k] += g * x[k];
        }
    };
    back_proj(layout_.w_text, sample.text_feat);
    back_proj(layout_.w_audio, sample.audio_feat);
    back_proj(layout_.w_vision, sample.vision_feat);
    for (int i = 0; i < h; ++i) grad[layout_.b_enc + i] += dz[i];
    return grad;
}

std::vector<double> Policy::sequence_logprob(const PolicyParams& params,
                                             const Sample& sample,
                                             const std::vector<int>& tokens) const {
    Trace tr = trace_sequence(params, sample, tokens);
    std::vector<double> out;
    out.reserve(tr.steps.size());
    for (const StepTrace& st : tr.steps) out.push_back(st.logprob);
    return out;
}

std::vector<double> Policy::token_distribution(const PolicyParams& params,
                                               const Sample& sample,
                                               const std::vector<int>& prefix) const {
    const std::vector<double> ctx = encode(params, sample);
    GrammarState g(vocab_, cfg_.max_think);
    std::vector<double> s_prev, s;
    for (std::size_t t = 0; t <= prefix.size(); ++t) {
        const int prev = t == 0 ? vocab_.bos() : prefix[t - 1];
        if (!vocab_.in_range(prev))
            throw VocabError("distribution: token id " + std::to_string(prev) +
                             " out of range");
        s = step_state(params, ctx, prev, s_prev);
        if (t < prefix.size()) {
            if (cfg_.grammar_masked) g.advance(prefix[t]);
            s_prev = s;
        }
    }
    std::vector<int> legal;
    legal_now(g, legal);
    std::vector<double> dist(vocab_.size(), 0.0);
    if (legal.empty()) return dist;
    LogitBlock blk =
        legal_logits(params.values, layout_.w_out, layout_.b_out, cfg_.h, s, legal);
    for (std::size_t j = 0; j < legal.size(); ++j) dist[legal[j]] = blk.probs[j];
    return dist;
}

std::vector<double> Policy::grad_logprob(const PolicyParams& params, const Sample& sample,
                                         const std::vector<int>& tokens,
                                         const std::vector<double>& weights) const {
    if (weights.size() != tokens.size())
        throw DimensionError("grad: one weight per token required");
    Trace tr = trace_sequence(params, sample, tokens);
    std::vector<std::vector<double>> dl(tr.steps.size());
    for (std::size_t t = 0; t < tr.steps.size(); ++t) {
        const StepTrace& st = tr.steps[t];
        dl[t].assign(st.legal.size(), 0.0);
        const double wt = weights[t];
        if (wt == 0.0) continue;
        for (std::size_t j = 0; j < st.legal.size(); ++j)
            dl[t][j] = wt * ((static_cast<int>(j) == st.target_pos ? 1.0 : 0.0) -
                             st.probs[j]);
    }
    return backward_from_dlogits(params, sample, tr, dl);
}

void save_checkpoint(const std::string& path, const Policy& policy,
                     const PolicyParams& params) {
    if (params.size() != policy.param_count())
        throw DimensionError("checkpoint: parameter count mismatch");
    nlohmann::json j;
    j["version"] = 1;
    j["config"] = policy_config_to_json(policy.config());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(policy.vocab().hash()));
    j["vocab_hash"] = buf;
    j["params"] = params.values;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out.good()) throw IoError("short write to " + path);
}

std::pair<PolicyConfig, PolicyParams> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path + ": " + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw CheckpointError(path + ": unsupported checkpoint version");
        PolicyConfig cfg = policy_config_from_json(j.at("config"));
        Policy policy(cfg);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(policy.vocab().hash()));
        if (j.at("vocab_hash").get<std::string>() != buf)
            throw CheckpointError(path + ": vocabulary digest mismatch");
        PolicyParams params;
        params.values = j.at("params").get<std::vector<double>>();
        if (params.size() != policy.param_count())
            throw CheckpointError(path + ": parameter count mismatch");
        return {cfg, std::move(params)};
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(path + ": " + e.what());
    }
}

PolicyConfig policy_config_from_json_text(const std::string& text) {
    try {
        return policy_config_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
}

std::string policy_config_to_json_text(const PolicyConfig& cfg) {
    return policy_config_to_json(cfg).dump(2);
}

}  // namespace c2f
