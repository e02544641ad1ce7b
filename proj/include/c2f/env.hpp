#pragma once

#include <random>
#include <string>
#include <vector>

#include "c2f/vocab.hpp"

namespace c2f {

struct Sample {
    std::string id;
    std::vector<double> text_feat;
    std::vector<double> audio_feat;
    std::vector<double> vision_feat;
    double gold_score = 0.0;
    Polarity gold_polarity = Polarity::Neutral;
    bool is_hard = false;
};

struct EnvConfig {
    int n_samples = 2000;
    int d = 8;
    double hard_fraction = 0.3;
    DatasetProfile profile = DatasetProfile::sims();
    std::uint64_t seed = 1;
    double teacher_noise = 0.0;
    // Feature construction: sign * gain * |gold|/r_max * w_m + N(0, noise_sigma^2).
    // Text carries the signal at full strength, audio and vision at av_gain;
    // hard samples flip the text sign while audio and vision keep the true one,
    // so hard samples are only solvable by noticing the modality conflict.
    double noise_sigma = 0.3;
    double av_gain = 0.35;

    void validate() const;  // throws ConfigError
};

struct CoTRecord {
    std::string sample_id;
    std::vector<int> target_tokens;
};

// Fixed unit direction for modality m in {0:text, 1:audio, 2:vision};
// shared by the generator and the teacher's think template.
std::vector<double> modality_direction(int m, int d);

// Deterministic for a fixed config: n_samples samples with exactly
// round(hard_fraction * n) hard ones. Gold scores uniform on [r_min, r_max].
std::vector<Sample> generate_dataset(const EnvConfig& cfg);

// Rule-based stand-in for the teacher model: estimates the score as
// gold + teacher_noise * N(0,1), derives polarity from that estimate, snaps
// the score token to the grid, and emits a think span keyed to the sign of
// each modality's projection onto its direction. Always parses.
CoTRecord teacher_generate_cot(const Sample& s, const EnvConfig& cfg,
                               const Vocabulary& vocab, std::mt19937_64& rng);

// Keeps candidates whose format parses and whose polarity matches gold, then
// rewrites the score token to the grid point nearest gold_score.
std::vector<CoTRecord> filter_and_relabel(const std::vector<CoTRecord>& candidates,
                                          const std::vector<Sample>& samples,
                                          const Vocabulary& vocab);

// Line-delimited JSON persistence.
void save_samples(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> load_samples(const std::string& path, const DatasetProfile& profile);
void save_cot_records(const std::string& path, const std::vector<CoTRecord>& records,
                      const Vocabulary& vocab);
std::vector<CoTRecord> load_cot_records(const std::string& path, const Vocabulary& vocab);

}  // namespace c2f
