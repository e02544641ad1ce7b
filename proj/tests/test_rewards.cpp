#include <doctest.h>

#include <random>

#include "c2f/rewards.hpp"
#include "oracles.hpp"

using namespace c2f;

namespace {
const DatasetProfile kSims = DatasetProfile::sims();
const DatasetProfile kMosi = DatasetProfile::mosi();

Sample gold_sample(double score, const DatasetProfile& p) {
    Sample s;
    s.id = "g";
    s.gold_score = score;
    s.gold_polarity = score_to_polarity(score, p);
    return s;
}
}  // namespace

TEST_CASE("format reward is the parse indicator") {
    CHECK(format_reward("<polarity>positive</polarity><think>a</think>"
                        "<score>0.80</score>", kSims) == 1.0);
    CHECK(format_reward("<polarity>positive</polarity><think>a</think>", kSims) == 0.0);
    CHECK(format_reward("", kSims) == 0.0);
    CHECK(format_reward("<polarity>positive</polarity><think>a</think>"
                        "<score>2.00</score>", kSims) == 0.0);
}

TEST_CASE("polarity reward is exact match") {
    CHECK(polarity_reward(Polarity::Positive, Polarity::Positive) == 1.0);
    CHECK(polarity_reward(Polarity::Negative, Polarity::Negative) == 1.0);
    CHECK(polarity_reward(Polarity::Positive, Polarity::Negative) == 0.0);
    CHECK(polarity_reward(Polarity::Neutral, Polarity::Positive) == 0.0);
}

TEST_CASE("score reward matches the closed form on knowns") {
    // |0.3 - 0.8| / 2 = 0.25
    CHECK(score_reward(0.3, 0.8, Polarity::Positive, Polarity::Positive, kSims) ==
          doctest::Approx(0.7550813).epsilon(1e-6));
    // maximal error on the SIMS range: |Δ|/range = 1
    CHECK(score_reward(-1.0, 1.0, Polarity::Positive, Polarity::Positive, kSims) ==
          doctest::Approx(0.23840584404423515).epsilon(1e-14));
    // exact hit
    CHECK(score_reward(0.5, 0.5, Polarity::Positive, Polarity::Positive, kSims) == 1.0);
}

TEST_CASE("score reward equals the extended-precision reference everywhere") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        const DatasetProfile& p = (rng() & 1) ? kSims : kMosi;
        auto u = [&rng, &p] {
            return p.r_min + (p.r_max - p.r_min) * ((rng() >> 11) * 0x1.0p-53);
        };
        const double a = u(), b = u();
        const double got =
            score_reward(a, b, Polarity::Positive, Polarity::Positive, p);
        const double want = oracle::one_minus_tanh(std::fabs(a - b) / p.range());
        CHECK(std::fabs(got - want) <= 1e-12);
    }
}

TEST_CASE("polarity mismatch zeroes the score component") {
    CHECK(score_reward(0.8, 0.8, Polarity::Positive, Polarity::Negative, kSims) == 0.0);
    CHECK(score_reward(0.0, 0.0, Polarity::Neutral, Polarity::Positive, kSims) == 0.0);
}

TEST_CASE("score reward decays monotonically with the gap") {
    double prev = 2.0;
    for (double gap = 0.0; gap <= 2.0; gap += 0.05) {
        const double r =
            score_reward(0.0, gap, Polarity::Positive, Polarity::Positive, kMosi);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("total reward composes the three components") {
    const RewardWeights w;
    const Sample gold = gold_sample(0.8, kSims);

    SUBCASE("well-formed, right polarity") {
        const RewardBreakdown b = total_reward(
            "<polarity>positive</polarity><think>a</think><score>0.30</score>",
            gold, w, kSims);
        CHECK(b.format == 1.0);
        CHECK(b.polarity == 1.0);
        CHECK(b.score == doctest::Approx(0.7550813).epsilon(1e-6));
        CHECK(b.total == doctest::Approx(2.7550813).epsilon(1e-6));
    }
    SUBCASE("well-formed, wrong polarity gates the score away") {
        const RewardBreakdown b = total_reward(
            "<polarity>negative</polarity><think>a</think><score>0.80</score>",
            gold, w, kSims);
        CHECK(b.format == 1.0);
        CHECK(b.polarity == 0.0);
        CHECK(b.score == 0.0);
        CHECK(b.total == 1.0);
    }
    SUBCASE("malformed zeroes everything") {
        const RewardBreakdown b = total_reward("<polarity>positive</polarity>",
                                               gold, w, kSims);
        CHECK(b.format == 0.0);
        CHECK(b.polarity == 0.0);
        CHECK(b.score == 0.0);
        CHECK(b.total == 0.0);
    }
    SUBCASE("weights scale the components") {
        RewardWeights w2;
        w2.format = 0.5;
        w2.polarity = 2.0;
        w2.score = 3.0;
        const RewardBreakdown b = total_reward(
            "<polarity>positive</polarity><think>a</think><score>0.80</score>",
            gold, w2, kSims);
        CHECK(b.total == doctest::Approx(0.5 + 2.0 + 3.0 * 1.0));
    }
}

TEST_CASE("exact score match on the gold grid yields the ceiling total") {
    const RewardWeights w;
    const Sample gold = gold_sample(-0.4, kSims);
    const RewardBreakdown b = total_reward(
        "<polarity>negative</polarity><think>a b</think><score>-0.40</score>",
        gold, w, kSims);
    CHECK(b.total == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("negative weights are rejected") {
    RewardWeights w;
    w.polarity = -1.0;
    CHECK_THROWS_AS(w.validate(), ConfigError);
}
