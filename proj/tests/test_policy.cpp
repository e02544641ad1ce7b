#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "c2f/policy.hpp"
#include "c2f/rewards.hpp"
#include "oracles.hpp"

using namespace c2f;

namespace {

double unit(std::mt19937_64& rng) { return ((rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0; }

Sample rand_sample(int d, std::mt19937_64& rng, const DatasetProfile& p) {
    Sample s;
    s.id = "x";
    for (int i = 0; i < d; ++i) {
        s.text_feat.push_back(unit(rng));
        s.audio_feat.push_back(unit(rng));
        s.vision_feat.push_back(unit(rng));
    }
    s.gold_score = p.r_min + (p.r_max - p.r_min) * ((rng() >> 11) * 0x1.0p-53);
    s.gold_polarity = score_to_polarity(s.gold_score, p);
    return s;
}

PolicyConfig tiny_config() {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 3;
    cfg.n_think = 2;
    cfg.max_think = 2;
    cfg.init_seed = 21;
    return cfg;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("test_tmp_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("masked sampling always emits a complete well-formed structure") {
    PolicyConfig cfg;
    cfg.d = 4;
    cfg.h = 8;
    cfg.n_think = 4;
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        Sample s = rand_sample(cfg.d, rng, cfg.profile);
        Rollout r = policy.sample_sequence(params, s, {}, rng);
        CHECK(r.tokens.back() == policy.vocab().eos());
        CHECK(static_cast<int>(r.tokens.size()) <= 9 + cfg.max_think);
        CHECK(format_reward(policy.vocab().text(r.tokens), cfg.profile) == 1.0);
        REQUIRE(r.logprobs.size() == r.tokens.size());
    }
}

TEST_CASE("greedy decoding is a pure function of parameters and input") {
    PolicyConfig cfg;
    cfg.d = 4;
    cfg.h = 8;
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    std::mt19937_64 srng(9);
    Sample s = rand_sample(cfg.d, srng, cfg.profile);
    DecodeOptions greedy;
    greedy.greedy = true;
    std::mt19937_64 r1(1), r2(999);
    Rollout a = policy.sample_sequence(params, s, greedy, r1);
    Rollout b = policy.sample_sequence(params, s, greedy, r2);
    CHECK(a.tokens == b.tokens);
    CHECK(a.logprobs == b.logprobs);
}

TEST_CASE("recorded rollout log-probs agree with sequence_logprob") {
    PolicyConfig cfg;
    cfg.d = 3;
    cfg.h = 6;
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(14);
    for (int i = 0; i < 20; ++i) {
        Sample s = rand_sample(cfg.d, rng, cfg.profile);
        Rollout r = policy.sample_sequence(params, s, {}, rng);
        const std::vector<double> lp = policy.sequence_logprob(params, s, r.tokens);
        REQUIRE(lp.size() == r.logprobs.size());
        for (std::size_t t = 0; t < lp.size(); ++t)
            CHECK(std::fabs(lp[t] - r.logprobs[t]) <= 1e-12);
    }
}

TEST_CASE("token distribution is a probability vector on the legal set") {
    PolicyConfig cfg;
    cfg.d = 3;
    cfg.h = 5;
    Policy policy(cfg);
    const Vocabulary& v = policy.vocab();
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(4);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);

    // after "<polarity>" only the three polarity words carry mass
    std::vector<double> dist =
        policy.token_distribution(params, s, {v.tag_polarity_open()});
    double sum = 0.0;
    for (int id = 0; id < v.size(); ++id) {
        sum += dist[id];
        if (!v.is_polarity_token(id)) CHECK(dist[id] == 0.0);
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);

    PolicyConfig free_cfg = cfg;
    free_cfg.grammar_masked = false;
    Policy free_policy(free_cfg);
    dist = free_policy.token_distribution(params, s, {v.tag_polarity_open()});
    sum = 0.0;
    for (int id = 0; id < v.size(); ++id) sum += dist[id];
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    CHECK(dist[v.bos()] == 0.0);  // BOS is input-only
}

TEST_CASE("all-zero parameters induce the uniform law with known log-probs") {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 4;
    cfg.n_think = 4;
    Policy policy(cfg);
    PolicyParams zero;
    zero.values.assign(policy.param_count(), 0.0);
    std::mt19937_64 rng(8);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);

    StructuredOutput out;
    out.polarity = Polarity::Negative;
    out.think = {"t0", "t1"};
    out.score = -0.5;
    const std::vector<int> toks = policy.vocab().encode(out);
    const std::vector<double> lp = policy.sequence_logprob(zero, s, toks);
    double total = 0.0;
    for (double x : lp) total += x;
    // branching factors along this sequence: polarity word (3), two think
    // words and the close tag (n_think+1 each), score point (grid)
    const double expect = -(std::log(3.0) + 3.0 * std::log(cfg.n_think + 1.0) +
                            std::log(static_cast<double>(policy.vocab().grid_size())));
    CHECK(std::fabs(total - expect) <= 1e-12);

    PolicyConfig free_cfg = cfg;
    free_cfg.grammar_masked = false;
    Policy free_policy(free_cfg);
    const std::vector<double> flp = free_policy.sequence_logprob(zero, s, toks);
    const double per = -std::log(static_cast<double>(policy.vocab().size() - 1));
    for (double x : flp) CHECK(std::fabs(x - per) <= 1e-12);
}

TEST_CASE("analytic gradients match central finite differences") {
    const PolicyConfig base = tiny_config();
    std::mt19937_64 rng(31);
    for (int variant = 0; variant < 3; ++variant) {
        PolicyConfig cfg = base;
        cfg.grammar_masked = variant != 2;
        Policy policy(cfg);
        PolicyParams params = policy.init_params();
        for (double& v : params.values) v += 0.05 * unit(rng);
        Sample s = rand_sample(cfg.d, rng, cfg.profile);
        Rollout r = policy.sample_sequence(params, s, {}, rng);

        std::vector<double> weights(r.tokens.size());
        for (double& w : weights) w = (rng() % 3 == 0) ? 0.0 : unit(rng);

        const std::vector<double> analytic =
            policy.grad_logprob(params, s, r.tokens, weights);
        auto f = [&](const std::vector<double>& x) {
            PolicyParams p2;
            p2.values = x;
            const std::vector<double> lp = policy.sequence_logprob(p2, s, r.tokens);
            double acc = 0.0;
            for (std::size_t t = 0; t < lp.size(); ++t) acc += weights[t] * lp[t];
            return acc;
        };
        const std::vector<double> fd = oracle::fd_gradient(f, params.values);
        CHECK(oracle::max_rel_err(analytic, fd) <= 1e-3);
    }
}

TEST_CASE("forced prefixes are emitted verbatim and scored, not sampled") {
    PolicyConfig cfg;
    cfg.d = 3;
    cfg.h = 6;
    Policy policy(cfg);
    const Vocabulary& v = policy.vocab();
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(12);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);
    const std::vector<int> prefix = {v.tag_polarity_open(),
                                     v.polarity_token(Polarity::Negative),
                                     v.tag_polarity_close()};
    Rollout r = policy.sample_sequence(params, s, {}, rng, prefix);
    CHECK(r.forced_prefix_len == 3);
    REQUIRE(r.tokens.size() >= 3);
    CHECK(std::vector<int>(r.tokens.begin(), r.tokens.begin() + 3) == prefix);
    const std::vector<double> lp = policy.sequence_logprob(params, s, r.tokens);
    for (int t = 0; t < 3; ++t) CHECK(std::fabs(lp[t] - r.logprobs[t]) <= 1e-12);

    const std::vector<int> bad = {v.tag_think_open()};
    std::mt19937_64 rng2(1);
    CHECK_THROWS_AS(policy.sample_sequence(params, s, {}, rng2, bad), VocabError);
}

TEST_CASE("sampling frequencies follow the uniform law under zero parameters") {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 4;
    Policy policy(cfg);
    PolicyParams zero;
    zero.values.assign(policy.param_count(), 0.0);
    std::mt19937_64 rng(44);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);
    std::vector<std::int64_t> counts(3, 0);
    const int n = 3000;
    for (int i = 0; i < n; ++i) {
        Rollout r = policy.sample_sequence(zero, s, {}, rng);
        ++counts[r.tokens[1] - policy.vocab().polarity_token(Polarity::Negative)];
    }
    const std::vector<double> expected(3, n / 3.0);
    CHECK(oracle::chi2_stat(counts, expected) < oracle::kChi2_99_dof2);
}

TEST_CASE("temperature rescales sampling odds without touching the reported law") {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 4;
    Policy policy(cfg);
    const Vocabulary& v = policy.vocab();
    PolicyParams params;
    params.values.assign(policy.param_count(), 0.0);
    // one unit of logit advantage for the negative polarity word
    params.values[policy.layout().b_out + v.polarity_token(Polarity::Negative)] = 1.0;
    std::mt19937_64 rng(5);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);

    const int n = 2000;
    for (double temp : {1.0, 0.25}) {
        DecodeOptions opts;
        opts.temperature = temp;
        int neg = 0;
        double lp_neg = 0.0;
        for (int i = 0; i < n; ++i) {
            Rollout r = policy.sample_sequence(params, s, opts, rng);
            if (r.tokens[1] == v.polarity_token(Polarity::Negative)) {
                ++neg;
                lp_neg = r.logprobs[1];
            }
        }
        const double p_sample = std::exp(1.0 / temp) / (std::exp(1.0 / temp) + 2.0);
        const double sigma = std::sqrt(p_sample * (1.0 - p_sample) / n);
        CHECK(std::fabs(neg / static_cast<double>(n) - p_sample) <= 4.0 * sigma);
        // the recorded log-prob stays on the temperature-1 law
        CHECK(lp_neg == doctest::Approx(std::log(std::exp(1.0) / (std::exp(1.0) + 2.0)))
                            .epsilon(1e-12));
    }

    DecodeOptions bad;
    bad.temperature = 0.0;
    CHECK_THROWS_AS(policy.sample_sequence(params, s, bad, rng), ConfigError);
}

TEST_CASE("context is injected at every step, so deep positions feel the input") {
    PolicyConfig cfg;
    cfg.d = 4;
    cfg.h = 8;
    Policy policy(cfg);
    const Vocabulary& v = policy.vocab();
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(77);
    Sample a = rand_sample(cfg.d, rng, cfg.profile);
    Sample b = rand_sample(cfg.d, rng, cfg.profile);
    // identical prefix through the score tag; only the sample differs
    const std::vector<int> prefix = {
        v.tag_polarity_open(), v.polarity_token(Polarity::Positive),
        v.tag_polarity_close(), v.tag_think_open(), v.think_token(0),
        v.tag_think_close(), v.tag_score_open()};
    const std::vector<double> da = policy.token_distribution(params, a, prefix);
    const std::vector<double> db = policy.token_distribution(params, b, prefix);
    double linf = 0.0;
    for (int id = 0; id < v.size(); ++id) linf = std::max(linf, std::fabs(da[id] - db[id]));
    CHECK(linf > 1e-4);
}

TEST_CASE("free decoding mostly fails the format check under random parameters") {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 4;
    cfg.grammar_masked = false;
    Policy policy(cfg);
    PolicyParams zero;
    zero.values.assign(policy.param_count(), 0.0);
    std::mt19937_64 rng(6);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);
    int failures = 0;
    for (int i = 0; i < 50; ++i) {
        Rollout r = policy.sample_sequence(zero, s, {}, rng);
        CHECK(static_cast<int>(r.tokens.size()) <= cfg.max_len);
        failures += format_reward(policy.vocab().text(r.tokens), cfg.profile) == 0.0;
    }
    CHECK(failures == 50);
}

TEST_CASE("masked decoding with an impossible length budget throws") {
    PolicyConfig cfg;
    cfg.d = 2;
    cfg.h = 4;
    cfg.max_len = 3;
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(1);
    Sample s = rand_sample(cfg.d, rng, cfg.profile);
    CHECK_THROWS_AS(policy.sample_sequence(params, s, {}, rng), LengthError);
}

TEST_CASE("dimension mismatches are rejected loudly") {
    PolicyConfig cfg;
    cfg.d = 4;
    cfg.h = 4;
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    std::mt19937_64 rng(2);
    Sample s = rand_sample(3, rng, cfg.profile);  // wrong feature width
    CHECK_THROWS_AS(policy.encode(params, s), DimensionError);

    Sample ok = rand_sample(4, rng, cfg.profile);
    PolicyParams short_params;
    short_params.values.assign(policy.param_count() - 1, 0.0);
    CHECK_THROWS_AS(policy.encode(short_params, ok), DimensionError);
}

TEST_CASE("parameter initialization is seed-deterministic and finite") {
    PolicyConfig cfg = tiny_config();
    Policy policy(cfg);
    PolicyParams a = policy.init_params();
    PolicyParams b = policy.init_params();
    CHECK(a.values == b.values);
    CHECK(a.finite());

    PolicyConfig other = cfg;
    other.init_seed = 22;
    PolicyParams c = Policy(other).init_params();
    CHECK(a.values != c.values);

    const ParamLayout& l = policy.layout();
    for (int i = 0; i < cfg.h; ++i) CHECK(a.values[l.b_enc + i] == 0.0);
    for (int i = 0; i < policy.vocab().size(); ++i)
        CHECK(a.values[l.b_out + i] == 0.0);
}

TEST_CASE("checkpoints round-trip bit-for-bit and reject tampering") {
    PolicyConfig cfg = tiny_config();
    Policy policy(cfg);
    PolicyParams params = policy.init_params();
    TempFile f("ckpt.json");
    save_checkpoint(f.path, policy, params);

    auto [cfg2, params2] = load_checkpoint(f.path);
    CHECK(params2.values == params.values);
    CHECK(cfg2.h == cfg.h);
    CHECK(cfg2.n_think == cfg.n_think);
    CHECK(cfg2.profile.name == cfg.profile.name);

    std::ifstream in(f.path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    in.close();
    const auto pos = text.find("\"vocab_hash\": \"");
    REQUIRE(pos != std::string::npos);
    text[pos + 15] = text[pos + 15] == 'f' ? '0' : 'f';
    std::ofstream(f.path) << text;
    CHECK_THROWS_AS(load_checkpoint(f.path), CheckpointError);
}
